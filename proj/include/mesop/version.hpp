#pragma once

#include <cstdint>
#include <string_view>

namespace mesop {

inline constexpr std::string_view kEngineVersion = "mesop 0.1.0";

// 64-bit FNV-1a; used for provenance and frame-stream hashes.
constexpr std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace mesop
