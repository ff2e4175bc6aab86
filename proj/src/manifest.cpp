#include "tipcav/manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <memory>
#include <stdexcept>

namespace tipcav {

std::string sha256_hex(std::string_view data) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest.data(), &len) != 1) {
    throw std::runtime_error("sha256: digest failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

Json write_product(const std::filesystem::path& dir, const std::string& name, std::string_view contents) {
  std::filesystem::create_directories(dir);
  const auto path = dir / name;
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  os.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  os.close();
  if (!os) throw std::runtime_error("cannot write " + path.string());
  Json entry;
  entry["file"] = name;
  entry["bytes"] = contents.size();
  entry["sha256"] = sha256_hex(contents);
  return entry;
}

Json config_from_document(const Json& doc) {
  if (doc.is_object() && doc.value("kind", std::string()) == kManifestKind && doc.contains("config")) {
    return doc.at("config");
  }
  return doc;
}

}  // namespace tipcav
