#ifndef QVS_IO_UTIL_HPP
#define QVS_IO_UTIL_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>

#include "qvs/error.hpp"

namespace qvs::io {

// All on-disk formats are little-endian.

inline void write_bytes(std::ostream& out, const void* p, std::size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

inline void read_bytes(std::istream& in, void* p, std::size_t n) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw ParseError("unexpected end of file");
  }
}

inline void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  write_bytes(out, b, 4);
}

inline void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  write_bytes(out, b, 8);
}

inline void write_f32(std::ostream& out, float v) {
  write_u32(out, std::bit_cast<std::uint32_t>(v));
}

inline void write_f64(std::ostream& out, double v) {
  write_u64(out, std::bit_cast<std::uint64_t>(v));
}

inline std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  read_bytes(in, b, 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

inline std::uint64_t read_u64(std::istream& in) {
  unsigned char b[8];
  read_bytes(in, b, 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

inline float read_f32(std::istream& in) {
  return std::bit_cast<float>(read_u32(in));
}

inline double read_f64(std::istream& in) {
  return std::bit_cast<double>(read_u64(in));
}

inline void write_magic(std::ostream& out, const char magic[4]) {
  write_bytes(out, magic, 4);
}

inline void expect_magic(std::istream& in, const char magic[4], const char* what) {
  char got[4];
  read_bytes(in, got, 4);
  if (std::memcmp(got, magic, 4) != 0) {
    throw ParseError(std::string("bad magic for ") + what);
  }
}

}  // namespace qvs::io

#endif
