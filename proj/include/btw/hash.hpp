#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string_view>

namespace btw {

// FNV-1a. Stable across platforms and runs, which the wire header (panel id
// hash) and replay digests rely on.

constexpr std::uint32_t fnv1a32(std::string_view s) {
  std::uint32_t h = 2166136261u;
  for (char c : s) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 16777619u;
  }
  return h;
}

class Fnv1a64 {
 public:
  void update(std::span<const std::uint8_t> bytes) {
    for (auto b : bytes) {
      state_ ^= b;
      state_ *= 1099511628211ull;
    }
  }
  // One multiply per 64-bit little-endian word, bytewise for the tail. Not
  // interchangeable with update() over the same bytes.
  void update_words(std::span<const std::uint8_t> bytes) {
    std::size_t i = 0;
    for (; i + 8 <= bytes.size(); i += 8) {
      std::uint64_t w;
      std::memcpy(&w, bytes.data() + i, 8);
      if constexpr (std::endian::native == std::endian::big) {
        w = byteswap(w);
      }
      state_ ^= w;
      state_ *= 1099511628211ull;
    }
    update(bytes.subspan(i));
  }
  void update(std::string_view s) {
    update({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()});
  }
  void update_u64(std::uint64_t v) {
    std::uint8_t b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<std::uint8_t>(v >> (8 * i));
    update(b);
  }

  std::uint64_t digest() const { return state_; }

 private:
  static std::uint64_t byteswap(std::uint64_t v) {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r = (r << 8) | ((v >> (8 * i)) & 0xff);
    return r;
  }

  std::uint64_t state_ = 14695981039346656037ull;
};

inline std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
  Fnv1a64 h;
  h.update(bytes);
  return h.digest();
}

}  // namespace btw
