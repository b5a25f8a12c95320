#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace rgs {

// Error taxonomy, mapped to CLI exit codes: invalid input / validation -> 2,
// I/O failure -> 3, reranker backend failure -> 4.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInputError : public Error {
 public:
  using Error::Error;
};

// Malformed file contents (bad record, bad header, version mismatch).
class ParseError : public InvalidInputError {
 public:
  using InvalidInputError::InvalidInputError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class BackendError : public Error {
 public:
  using Error::Error;
};

namespace detail {

// Little-endian scalar I/O. All on-disk formats are little-endian regardless
// of host order.
inline void write_le_u16(std::ostream& os, std::uint16_t v) {
  const unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                              static_cast<unsigned char>((v >> 8) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 2);
}

inline void write_le_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline void write_le_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 8);
}

inline void write_le_f32(std::ostream& os, float v) {
  std::uint32_t u;
  static_assert(sizeof(u) == sizeof(v));
  __builtin_memcpy(&u, &v, sizeof(u));
  write_le_u32(os, u);
}

inline bool read_bytes(std::istream& is, void* out, std::size_t n) {
  is.read(reinterpret_cast<char*>(out), static_cast<std::streamsize>(n));
  return static_cast<std::size_t>(is.gcount()) == n;
}

inline bool read_le_u16(std::istream& is, std::uint16_t& v) {
  unsigned char b[2];
  if (!read_bytes(is, b, 2)) return false;
  v = static_cast<std::uint16_t>(b[0] | (b[1] << 8));
  return true;
}

inline bool read_le_u32(std::istream& is, std::uint32_t& v) {
  unsigned char b[4];
  if (!read_bytes(is, b, 4)) return false;
  v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return true;
}

inline bool read_le_u64(std::istream& is, std::uint64_t& v) {
  unsigned char b[8];
  if (!read_bytes(is, b, 8)) return false;
  v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return true;
}

inline bool read_le_f32(std::istream& is, float& v) {
  std::uint32_t u;
  if (!read_le_u32(is, u)) return false;
  __builtin_memcpy(&v, &u, sizeof(v));
  return true;
}

// splitmix64; used to derive per-(seed, key) RNG streams that do not depend
// on call order.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_str(const std::string& s) {
  // FNV-1a, pinned here so noise streams are stable across platforms.
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace detail

}  // namespace rgs
