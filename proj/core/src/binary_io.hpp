// Copyright 2026 PaxNet contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "paxnet/error.hpp"

// Little-endian primitives for the versioned binary formats (graph cache,
// checkpoints). Byte order is explicit so the files are portable.

namespace paxnet::io {

inline void write_bytes(std::ostream& os, const void* p, std::size_t n) {
  os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  if (!os) throw IoError("write failed");
}

inline void write_u8(std::ostream& os, std::uint8_t v) { write_bytes(os, &v, 1); }

inline void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  write_bytes(os, b, 4);
}

inline void write_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  write_bytes(os, b, 8);
}

inline void write_f64(std::ostream& os, double v) {
  write_u64(os, std::bit_cast<std::uint64_t>(v));
}

inline void write_string(std::ostream& os, const std::string& s) {
  write_u32(os, static_cast<std::uint32_t>(s.size()));
  write_bytes(os, s.data(), s.size());
}

inline void read_bytes(std::istream& is, void* p, std::size_t n,
                       const char* what) {
  is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(is.gcount()) != n)
    throw IoError(std::string("truncated file: expected ") + what);
}

inline std::uint8_t read_u8(std::istream& is, const char* what) {
  std::uint8_t v = 0;
  read_bytes(is, &v, 1, what);
  return v;
}

inline std::uint32_t read_u32(std::istream& is, const char* what) {
  unsigned char b[4];
  read_bytes(is, b, 4, what);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

inline std::uint64_t read_u64(std::istream& is, const char* what) {
  unsigned char b[8];
  read_bytes(is, b, 8, what);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

inline double read_f64(std::istream& is, const char* what) {
  return std::bit_cast<double>(read_u64(is, what));
}

inline std::string read_string(std::istream& is, const char* what) {
  const std::uint32_t n = read_u32(is, what);
  std::string s(n, '\0');
  if (n > 0) read_bytes(is, s.data(), n, what);
  return s;
}

inline void expect_end(std::istream& is, const char* what) {
  is.peek();
  if (!is.eof())
    throw IoError(std::string("trailing bytes after ") + what);
}

}  // namespace paxnet::io
