#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace btw {

// Tightly packed RGBA8, row-major, no padding.
struct Bitmap {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgba;

  Bitmap() = default;
  Bitmap(int w, int h) : width(w), height(h), rgba(std::size_t(w) * h * 4) {}

  bool operator==(const Bitmap&) const = default;

  std::size_t stride() const { return std::size_t(width) * 4; }

  std::uint8_t* pixel(int x, int y) {
    return rgba.data() + std::size_t(y) * stride() + std::size_t(x) * 4;
  }
  const std::uint8_t* pixel(int x, int y) const {
    return rgba.data() + std::size_t(y) * stride() + std::size_t(x) * 4;
  }

  std::span<const std::uint8_t> bytes() const { return rgba; }
};

}  // namespace btw
