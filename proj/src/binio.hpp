// SPDX-License-Identifier: Apache-2.0
#pragma once

// Little-endian primitive I/O shared by the file formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "mimoloc/errors.hpp"

namespace mimoloc::binio {

template <typename U>
U to_le(U v) noexcept {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    U out = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) out |= ((v >> (8 * i)) & 0xFF) << (8 * (sizeof(U) - 1 - i));
    return out;
  }
}

inline void write_bytes(std::ostream& os, const void* p, std::size_t n) {
  os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  if (!os) throw IoError("write failed");
}

inline void read_bytes(std::istream& is, void* p, std::size_t n, const char* what) {
  is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(is.gcount()) != n)
    throw IoError(std::string("truncated file while reading ") + what);
}

inline void write_u32(std::ostream& os, std::uint32_t v) {
  v = to_le(v);
  write_bytes(os, &v, 4);
}

inline std::uint32_t read_u32(std::istream& is, const char* what) {
  std::uint32_t v = 0;
  read_bytes(is, &v, 4, what);
  return to_le(v);
}

inline void write_i16(std::ostream& os, std::int16_t v) {
  auto u = to_le(static_cast<std::uint16_t>(v));
  write_bytes(os, &u, 2);
}

inline std::int16_t read_i16(std::istream& is, const char* what) {
  std::uint16_t u = 0;
  read_bytes(is, &u, 2, what);
  return static_cast<std::int16_t>(to_le(u));
}

inline void write_f32(std::ostream& os, float f) {
  write_u32(os, std::bit_cast<std::uint32_t>(f));
}

inline float read_f32(std::istream& is, const char* what) {
  return std::bit_cast<float>(read_u32(is, what));
}

inline void write_magic(std::ostream& os, const char (&magic)[5]) { write_bytes(os, magic, 4); }

inline void expect_magic(std::istream& is, const char (&magic)[5], const char* what) {
  char buf[4] = {};
  read_bytes(is, buf, 4, what);
  if (std::memcmp(buf, magic, 4) != 0)
    throw IoError(std::string("bad magic: not a ") + what + " file");
}

}  // namespace mimoloc::binio
