#pragma once

// FNV-1a content hashes used for artifact provenance chaining.

#include <cstdint>
#include <string>
#include <string_view>

namespace ferrite {

inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hash_hex(std::uint64_t h) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

inline std::string content_hash(std::string_view bytes) { return hash_hex(fnv1a64(bytes)); }

}  // namespace ferrite
