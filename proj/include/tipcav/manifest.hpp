#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "tipcav/io_tables.hpp"

namespace tipcav {

/// Lower-case hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view data);

/// Writes `contents` to dir/name, creating dir if needed; returns the
/// manifest entry {file, bytes, sha256}.
Json write_product(const std::filesystem::path& dir, const std::string& name, std::string_view contents);

/// Recognizes a manifest document (as written by run) and returns the
/// resolved config it embeds; other documents are returned unchanged.
Json config_from_document(const Json& doc);

inline constexpr const char* kManifestKind = "tipcav_manifest";

}  // namespace tipcav
