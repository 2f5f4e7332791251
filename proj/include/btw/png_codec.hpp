#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "btw/bitmap.hpp"

namespace btw {

// Thin wrappers over libpng's simplified API. Both throw Error{kDecode} /
// Error{kInternal} on failure.
std::vector<std::uint8_t> encode_png(const Bitmap& bitmap);
Bitmap decode_png(std::span<const std::uint8_t> bytes);

}  // namespace btw
