#include "btw/png_codec.hpp"

#include <png.h>

#include <cstring>
#include <string>

#include "btw/error.hpp"

namespace btw {

std::vector<std::uint8_t> encode_png(const Bitmap& bitmap) {
  if (bitmap.width <= 0 || bitmap.height <= 0) {
    throw Error(ErrorCode::kInvalidInput, "cannot encode an empty bitmap");
  }
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(bitmap.width);
  image.height = static_cast<png_uint_32>(bitmap.height);
  image.format = PNG_FORMAT_RGBA;

  png_alloc_size_t size = 0;
  const auto stride = static_cast<png_int_32>(bitmap.stride());
  if (!png_image_write_to_memory(&image, nullptr, &size, 0,
                                 bitmap.rgba.data(), stride, nullptr)) {
    throw Error(ErrorCode::kInternal,
                std::string("png sizing failed: ") + image.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0,
                                 bitmap.rgba.data(), stride, nullptr)) {
    throw Error(ErrorCode::kInternal,
                std::string("png encode failed: ") + image.message);
  }
  out.resize(size);
  return out;
}

Bitmap decode_png(std::span<const std::uint8_t> bytes) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw Error(ErrorCode::kDecode,
                std::string("png header: ") + image.message);
  }
  image.format = PNG_FORMAT_RGBA;
  Bitmap out(static_cast<int>(image.width), static_cast<int>(image.height));
  if (!png_image_finish_read(&image, nullptr, out.rgba.data(),
                             static_cast<png_int_32>(out.stride()), nullptr)) {
    png_image_free(&image);
    throw Error(ErrorCode::kDecode, std::string("png body: ") + image.message);
  }
  return out;
}

}  // namespace btw
