#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "lensless/errors.hpp"

namespace lensless {

// Little-endian binary primitives, written byte-by-byte so the on-disk layout
// is independent of host endianness.

inline void write_le_u32(std::ostream& out, uint32_t v) {
  char b[4] = {char(v & 0xff), char((v >> 8) & 0xff), char((v >> 16) & 0xff),
               char((v >> 24) & 0xff)};
  out.write(b, 4);
}

inline void write_le_f32(std::ostream& out, float v) {
  write_le_u32(out, std::bit_cast<uint32_t>(v));
}

inline uint32_t read_le_u32(std::istream& in, const std::string& what) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (in.gcount() != 4) fail(ErrorKind::Truncation, what + ": unexpected end of data");
  return uint32_t(b[0]) | (uint32_t(b[1]) << 8) | (uint32_t(b[2]) << 16) |
         (uint32_t(b[3]) << 24);
}

inline float read_le_f32(std::istream& in, const std::string& what) {
  return std::bit_cast<float>(read_le_u32(in, what));
}

inline void write_le_f32_array(std::ostream& out, const float* data, size_t count) {
  for (size_t i = 0; i < count; ++i) write_le_f32(out, data[i]);
}

inline void read_le_f32_array(std::istream& in, float* data, size_t count,
                              const std::string& what) {
  for (size_t i = 0; i < count; ++i) data[i] = read_le_f32(in, what);
}

}  // namespace lensless
