#include "tipcav/stream_io.hpp"

#include <array>
#include <fstream>
#include <istream>
#include <ostream>

namespace tipcav {

namespace {

template <typename T>
void put_le(std::ostream& os, T value) {
  std::array<char, sizeof(T)> bytes{};
  auto v = static_cast<std::uint64_t>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<char>(v & 0xffu);
    v >>= 8;
  }
  os.write(bytes.data(), bytes.size());
}

template <typename T>
T get_le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (std::size_t i = sizeof(T); i-- > 0;) v = (v << 8) | p[i];
  return static_cast<T>(v);
}

}  // namespace

void write_ptsm(std::ostream& os, const PhotonStream& stream) {
  if (stream.duration < 0) throw FormatError("PTSM: negative duration");
  if (!stream.is_sorted_strict()) throw FormatError("PTSM: timestamps must be strictly increasing");
  if (!stream.empty() && (stream.timestamps.front() < 0 || stream.timestamps.back() >= stream.duration)) {
    throw FormatError("PTSM: timestamps must lie in [0, duration)");
  }
  os.write("PTSM", 4);
  put_le<std::uint16_t>(os, kPtsmVersion);
  put_le<std::uint8_t>(os, stream.channel);
  put_le<std::uint8_t>(os, 0);
  put_le<std::uint64_t>(os, static_cast<std::uint64_t>(stream.duration));
  put_le<std::uint64_t>(os, stream.timestamps.size());
  for (Picoseconds t : stream.timestamps) {
    put_le<std::uint64_t>(os, static_cast<std::uint64_t>(t));
  }
  if (!os) throw FormatError("PTSM: write failed");
}

PhotonStream read_ptsm(std::istream& is) {
  std::array<unsigned char, kPtsmHeaderSize> header{};
  if (!is.read(reinterpret_cast<char*>(header.data()), header.size())) {
    throw FormatError("PTSM: truncated header");
  }
  if (header[0] != 'P' || header[1] != 'T' || header[2] != 'S' || header[3] != 'M') {
    throw FormatError("PTSM: bad magic");
  }
  const auto version = get_le<std::uint16_t>(&header[4]);
  if (version != kPtsmVersion) throw FormatError("PTSM: unsupported version " + std::to_string(version));

  PhotonStream s;
  s.channel = header[6];
  const auto duration = get_le<std::uint64_t>(&header[8]);
  const auto count = get_le<std::uint64_t>(&header[16]);
  if (duration > static_cast<std::uint64_t>(INT64_MAX)) throw FormatError("PTSM: duration out of range");
  s.duration = static_cast<Picoseconds>(duration);

  constexpr std::size_t kChunk = 1 << 16;
  std::vector<unsigned char> buf(8 * kChunk);
  std::uint64_t remaining = count;
  while (remaining > 0) {
    const std::size_t n = static_cast<std::size_t>(std::min<std::uint64_t>(remaining, kChunk));
    if (!is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(8 * n))) {
      throw FormatError("PTSM: truncated payload");
    }
    for (std::size_t i = 0; i < n; ++i) {
      const auto t = get_le<std::uint64_t>(&buf[8 * i]);
      if (t >= duration) throw FormatError("PTSM: timestamp beyond duration");
      if (!s.timestamps.empty() && static_cast<Picoseconds>(t) <= s.timestamps.back()) {
        throw FormatError("PTSM: timestamps not strictly increasing");
      }
      s.timestamps.push_back(static_cast<Picoseconds>(t));
    }
    remaining -= n;
  }
  return s;
}

void save_ptsm(const std::filesystem::path& path, const PhotonStream& stream) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  write_ptsm(os, stream);
}

PhotonStream load_ptsm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  return read_ptsm(is);
}

void write_stream_csv(std::ostream& os, const PhotonStream& stream) {
  for (Picoseconds t : stream.timestamps) os << t << '\n';
}

}  // namespace tipcav
