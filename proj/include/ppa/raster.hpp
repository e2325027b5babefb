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

#include <openssl/evp.h>

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ppa/error.hpp"

namespace ppa {

inline std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (std::uint8_t b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0x0f]);
  }
  return out;
}

// Incremental SHA-256 over OpenSSL's EVP interface.
class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (ctx_ == nullptr || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) {
      fail(ErrorCode::IoError, "sha256 init failed");
    }
  }
  ~Sha256() { EVP_MD_CTX_free(ctx_); }
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  Sha256& update(std::span<const std::uint8_t> bytes) {
    EVP_DigestUpdate(ctx_, bytes.data(), bytes.size());
    return *this;
  }
  Sha256& update(std::string_view text) {
    EVP_DigestUpdate(ctx_, text.data(), text.size());
    return *this;
  }
  Sha256& update_u32_be(std::uint32_t v) {
    const std::array<std::uint8_t, 4> be{static_cast<std::uint8_t>(v >> 24), static_cast<std::uint8_t>(v >> 16),
                                         static_cast<std::uint8_t>(v >> 8), static_cast<std::uint8_t>(v)};
    return update(be);
  }

  std::string hex() {
    std::array<std::uint8_t, EVP_MAX_MD_SIZE> out{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_, out.data(), &len);
    return to_hex(std::span(out.data(), len));
  }

 private:
  EVP_MD_CTX* ctx_;
};

inline std::string sha256_hex(std::string_view text) { return Sha256().update(text).hex(); }

// FNV-1a, 64 bit. Used wherever a stable, platform-independent hash of a
// short string is needed (term hashing, category colors).
inline std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

// 8-bit RGB, row-major, no padding between rows.
class Raster {
 public:
  Raster() = default;
  Raster(int width, int height, Rgb fill = {}) : width_(width), height_(height) {
    if (width <= 0 || height <= 0) fail(ErrorCode::InvariantViolation, "raster dimensions must be positive");
    pixels_.resize(static_cast<std::size_t>(width) * height * 3);
    for (std::size_t i = 0; i < pixels_.size(); i += 3) {
      pixels_[i] = fill.r;
      pixels_[i + 1] = fill.g;
      pixels_[i + 2] = fill.b;
    }
  }
  Raster(int width, int height, std::vector<std::uint8_t> pixels)
      : width_(width), height_(height), pixels_(std::move(pixels)) {
    if (width <= 0 || height <= 0) fail(ErrorCode::InvariantViolation, "raster dimensions must be positive");
    if (pixels_.size() != static_cast<std::size_t>(width) * height * 3) {
      fail(ErrorCode::InvariantViolation, "pixel buffer length must equal width*height*3");
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return pixels_.empty(); }

  std::span<const std::uint8_t> bytes() const noexcept { return pixels_; }
  std::span<std::uint8_t> bytes() noexcept { return pixels_; }

  std::size_t offset(int x, int y) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * 3;
  }
  Rgb at(int x, int y) const noexcept {
    const std::size_t o = offset(x, y);
    return {pixels_[o], pixels_[o + 1], pixels_[o + 2]};
  }
  void set(int x, int y, Rgb c) noexcept {
    const std::size_t o = offset(x, y);
    pixels_[o] = c.r;
    pixels_[o + 1] = c.g;
    pixels_[o + 2] = c.b;
  }

  // Hash over (width, height, raw RGB bytes); independent of any file encoding.
  std::string digest() const {
    Sha256 h;
    h.update_u32_be(static_cast<std::uint32_t>(width_)).update_u32_be(static_cast<std::uint32_t>(height_));
    h.update(pixels_);
    return h.hex();
  }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

}  // namespace ppa
