#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>

#include "tipcav/trajectory.hpp"

namespace tipcav {

/// PTSM binary stream layout, all little-endian:
///
///   offset  size  field
///        0     4  magic "PTSM"
///        4     2  version (u16)
///        6     1  channel (u8)
///        7     1  reserved, 0
///        8     8  duration in ps (u64)
///       16     8  count (u64)
///       24  8*count timestamps in ps (u64)
inline constexpr std::uint16_t kPtsmVersion = 1;
inline constexpr std::size_t kPtsmHeaderSize = 24;

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_ptsm(std::ostream& os, const PhotonStream& stream);
PhotonStream read_ptsm(std::istream& is);

void save_ptsm(const std::filesystem::path& path, const PhotonStream& stream);
PhotonStream load_ptsm(const std::filesystem::path& path);

/// One timestamp per line, no header.
void write_stream_csv(std::ostream& os, const PhotonStream& stream);

}  // namespace tipcav
