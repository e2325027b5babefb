// Copyright 2026 The PPA Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <png.h>

#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "ppa/error.hpp"
#include "ppa/raster.hpp"

namespace ppa {

// Decodes any PNG into the canonical 8-bit RGB raster. Alpha is composited
// over white; ancillary chunks (text, EXIF, time) are discarded.
inline Raster decode_png(std::span<const std::uint8_t> data) {
  if (data.size() < 8 || png_sig_cmp(data.data(), 0, 8) != 0) {
    fail(ErrorCode::DecodeError, "input is not a PNG stream");
  }
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (png_image_begin_read_from_memory(&image, data.data(), data.size()) == 0) {
    std::string msg = image.message;
    png_image_free(&image);
    fail(ErrorCode::DecodeError, msg);
  }
  if (image.width == 0 || image.height == 0 || image.width > 1u << 15 || image.height > 1u << 15) {
    png_image_free(&image);
    fail(ErrorCode::DecodeError, "unsupported image dimensions");
  }
  image.format = PNG_FORMAT_RGBA;
  std::vector<std::uint8_t> rgba(PNG_IMAGE_SIZE(image));
  if (png_image_finish_read(&image, nullptr, rgba.data(), 0, nullptr) == 0) {
    std::string msg = image.message;
    png_image_free(&image);
    fail(ErrorCode::DecodeError, msg);
  }
  const int w = static_cast<int>(image.width);
  const int h = static_cast<int>(image.height);
  std::vector<std::uint8_t> rgb(static_cast<std::size_t>(w) * h * 3);
  for (std::size_t p = 0, n = static_cast<std::size_t>(w) * h; p < n; ++p) {
    const unsigned a = rgba[p * 4 + 3];
    for (int c = 0; c < 3; ++c) {
      const unsigned v = rgba[p * 4 + c];
      rgb[p * 3 + c] = static_cast<std::uint8_t>((v * a + 255u * (255u - a) + 127u) / 255u);
    }
  }
  return Raster(w, h, std::move(rgb));
}

inline Raster decode_png(const std::string& data) {
  return decode_png(std::span(reinterpret_cast<const std::uint8_t*>(data.data()), data.size()));
}

// Metadata-free 8-bit RGB PNG.
inline std::vector<std::uint8_t> encode_png(const Raster& raster) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(raster.width());
  image.height = static_cast<png_uint_32>(raster.height());
  image.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (png_image_write_to_memory(&image, nullptr, &size, 0, raster.bytes().data(), 0, nullptr) == 0) {
    fail(ErrorCode::IoError, std::string("png size query failed: ") + image.message);
  }
  std::vector<std::uint8_t> out(size);
  if (png_image_write_to_memory(&image, out.data(), &size, 0, raster.bytes().data(), 0, nullptr) == 0) {
    fail(ErrorCode::IoError, std::string("png encode failed: ") + image.message);
  }
  out.resize(size);
  return out;
}

}  // namespace ppa
