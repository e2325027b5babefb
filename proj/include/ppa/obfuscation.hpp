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

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "ppa/core.hpp"
#include "ppa/error.hpp"
#include "ppa/raster.hpp"
#include "ppa/taxonomy.hpp"

namespace ppa {

struct BlurParams {
  double sigma_scale = 0.15;
  double sigma_min = 8.0;
  std::optional<int> margin;  // default ceil(3*sigma)
};

struct MaskStyle {
  bool render_label = false;
};

struct ObfuscationConfig {
  BlurParams blur;
  MaskStyle mask;
  bool all_objects = false;  // adds one Remove and one Mask candidate covering every object
};

// Fixed-point scale of one kernel tap; taps sum to exactly this value.
inline constexpr std::uint32_t kKernelOne = 1u << 16;

inline double blur_sigma(const BoundingBox& box, const BlurParams& p) {
  if (!(p.sigma_scale > 0.0) || !(p.sigma_min > 0.0)) {
    fail(ErrorCode::ConfigError, "sigma_scale and sigma_min must be positive");
  }
  return std::max(p.sigma_min, p.sigma_scale * std::min(box.w, box.h));
}

inline int kernel_radius(double sigma) { return static_cast<int>(std::ceil(3.0 * sigma)); }

inline int blur_margin(const BlurParams& p, double sigma) {
  if (p.margin) {
    if (*p.margin < 0) fail(ErrorCode::ConfigError, "blur margin must be nonnegative");
    return *p.margin;
  }
  return kernel_radius(sigma);
}

// 1-D Gaussian taps for offsets -r..r, quantized to 16-bit fixed point. The
// rounding residue is folded into the centre tap so the taps sum to 2^16.
inline std::vector<std::uint32_t> quantized_gaussian(double sigma) {
  const int r = kernel_radius(sigma);
  std::vector<double> w(2 * r + 1);
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) {
    w[i + r] = std::exp(-(static_cast<double>(i) * i) / (2.0 * sigma * sigma));
    sum += w[i + r];
  }
  std::vector<std::uint32_t> q(w.size());
  std::int64_t total = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    q[i] = static_cast<std::uint32_t>(std::llround(w[i] / sum * kKernelOne));
    total += q[i];
  }
  q[r] = static_cast<std::uint32_t>(static_cast<std::int64_t>(q[r]) + (static_cast<std::int64_t>(kKernelOne) - total));
  return q;
}

// Blurs the pixels inside `box`. Samples come from the box grown by the blur
// margin (clamped to the image) with edge replication past that footprint.
// Only pixels inside `box` change.
inline Raster blur_region(const Raster& image, const BoundingBox& box, const BlurParams& params = {}) {
  if (!box.fits(image.width(), image.height())) fail(ErrorCode::InvariantViolation, "blur box outside image");
  const double sigma = blur_sigma(box, params);
  const int r = kernel_radius(sigma);
  const BoundingBox fp = box.expanded(blur_margin(params, sigma), image.width(), image.height());
  const auto q = quantized_gaussian(sigma);
  const auto clamp_x = [&](int x) { return std::clamp(x, fp.x, fp.x + fp.w - 1); };
  const auto clamp_y = [&](int y) { return std::clamp(y, fp.y, fp.y + fp.h - 1); };

  // Horizontal pass over every footprint row, kept at full precision
  // (255 * 2^16 < 2^32) so the vertical pass equals the 2-D sum exactly.
  const auto src = image.bytes();
  std::vector<std::uint32_t> rows(static_cast<std::size_t>(fp.h) * box.w * 3);
  for (int yy = 0; yy < fp.h; ++yy) {
    const int y = fp.y + yy;
    for (int bx = 0; bx < box.w; ++bx) {
      std::array<std::uint32_t, 3> acc{};
      for (int j = -r; j <= r; ++j) {
        const std::size_t o = image.offset(clamp_x(box.x + bx + j), y);
        for (int c = 0; c < 3; ++c) acc[c] += q[j + r] * src[o + c];
      }
      for (int c = 0; c < 3; ++c) rows[(static_cast<std::size_t>(yy) * box.w + bx) * 3 + c] = acc[c];
    }
  }

  Raster out = image;
  auto dst = out.bytes();
  for (int by = 0; by < box.h; ++by) {
    for (int bx = 0; bx < box.w; ++bx) {
      std::array<std::uint64_t, 3> acc{};
      for (int i = -r; i <= r; ++i) {
        const int yy = clamp_y(box.y + by + i) - fp.y;
        const std::size_t o = (static_cast<std::size_t>(yy) * box.w + bx) * 3;
        for (int c = 0; c < 3; ++c) acc[c] += static_cast<std::uint64_t>(q[i + r]) * rows[o + c];
      }
      const std::size_t d = out.offset(box.x + bx, box.y + by);
      for (int c = 0; c < 3; ++c) dst[d + c] = static_cast<std::uint8_t>((acc[c] + (1ULL << 31)) >> 32);
    }
  }
  return out;
}

// Stable per-category placeholder color.
inline Rgb category_fill_color(std::string_view category_id) {
  const std::uint64_t h = fnv1a64(std::string("ppa-mask:") + std::string(category_id));
  return {static_cast<std::uint8_t>(h), static_cast<std::uint8_t>(h >> 8), static_cast<std::uint8_t>(h >> 16)};
}

namespace detail {

// 3x5 bitmap glyphs; each row is three bits, MSB on the left.
inline const std::array<std::uint8_t, 5>* glyph(char ch) {
  struct Entry {
    char c;
    std::array<std::uint8_t, 5> rows;
  };
  static const Entry kFont[] = {
      {'A', {2, 5, 7, 5, 5}}, {'B', {6, 5, 6, 5, 6}}, {'C', {3, 4, 4, 4, 3}}, {'D', {6, 5, 5, 5, 6}},
      {'E', {7, 4, 6, 4, 7}}, {'F', {7, 4, 6, 4, 4}}, {'G', {3, 4, 5, 5, 3}}, {'H', {5, 5, 7, 5, 5}},
      {'I', {7, 2, 2, 2, 7}}, {'J', {1, 1, 1, 5, 2}}, {'K', {5, 5, 6, 5, 5}}, {'L', {4, 4, 4, 4, 7}},
      {'M', {5, 7, 7, 5, 5}}, {'N', {6, 5, 5, 5, 5}}, {'O', {2, 5, 5, 5, 2}}, {'P', {6, 5, 6, 4, 4}},
      {'Q', {2, 5, 5, 6, 3}}, {'R', {6, 5, 6, 5, 5}}, {'S', {3, 4, 2, 1, 6}}, {'T', {7, 2, 2, 2, 2}},
      {'U', {5, 5, 5, 5, 7}}, {'V', {5, 5, 5, 5, 2}}, {'W', {5, 5, 7, 7, 5}}, {'X', {5, 5, 2, 5, 5}},
      {'Y', {5, 5, 2, 2, 2}}, {'Z', {7, 1, 2, 4, 7}}, {'0', {7, 5, 5, 5, 7}}, {'1', {2, 6, 2, 2, 7}},
      {'2', {6, 1, 2, 4, 7}}, {'3', {6, 1, 2, 1, 6}}, {'4', {5, 5, 7, 1, 1}}, {'5', {7, 4, 6, 1, 6}},
      {'6', {3, 4, 7, 5, 7}}, {'7', {7, 1, 2, 2, 2}}, {'8', {7, 5, 7, 5, 7}}, {'9', {7, 5, 7, 1, 6}},
      {'_', {0, 0, 0, 0, 7}}, {'-', {0, 0, 7, 0, 0}},
  };
  const char up = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  for (const auto& e : kFont) {
    if (e.c == up) return &e.rows;
  }
  return nullptr;
}

// Draws `text` inside `box` at the largest integer scale that fits, clipped
// to the box.
inline void draw_label(Raster& out, const BoundingBox& box, std::string_view text, Rgb ink) {
  if (text.empty()) return;
  const int cols = static_cast<int>(text.size()) * 4 - 1;
  const int scale = std::max(1, std::min((box.w - 2) / std::max(cols, 1), (box.h - 2) / 5));
  const int ox = box.x + std::max(1, (box.w - cols * scale) / 2);
  const int oy = box.y + std::max(1, (box.h - 5 * scale) / 2);
  for (std::size_t k = 0; k < text.size(); ++k) {
    const auto* g = glyph(text[k]);
    if (g == nullptr) continue;
    for (int gy = 0; gy < 5; ++gy) {
      for (int gx = 0; gx < 3; ++gx) {
        if (((*g)[gy] >> (2 - gx) & 1) == 0) continue;
        for (int sy = 0; sy < scale; ++sy) {
          for (int sx = 0; sx < scale; ++sx) {
            const int px = ox + (static_cast<int>(k) * 4 + gx) * scale + sx;
            const int py = oy + gy * scale + sy;
            if (box.contains(px, py)) out.set(px, py, ink);
          }
        }
      }
    }
  }
}

}  // namespace detail

// Replaces the pixels inside `box` with the category placeholder.
inline Raster mask_region(const Raster& image, const BoundingBox& box, const SensitiveCategory& category,
                          const MaskStyle& style = {}) {
  if (!box.fits(image.width(), image.height())) fail(ErrorCode::InvariantViolation, "mask box outside image");
  const Rgb fill = category_fill_color(category.id);
  Raster out = image;
  for (int y = box.y; y < box.y + box.h; ++y) {
    for (int x = box.x; x < box.x + box.w; ++x) out.set(x, y, fill);
  }
  if (style.render_label) {
    const int luma = (299 * fill.r + 587 * fill.g + 114 * fill.b) / 1000;
    detail::draw_label(out, box, category.id, luma > 128 ? Rgb{0, 0, 0} : Rgb{255, 255, 255});
  }
  return out;
}

inline std::string candidate_id_for(std::string_view parent_digest, Technique technique, std::string_view target_key) {
  Sha256 h;
  h.update(parent_digest).update("\n").update(to_string(technique)).update("\n").update(target_key);
  return h.hex().substr(0, 16);
}

namespace detail {

inline ManifestEntry manifest_for(const DetectedObject& o, Technique t, const ObfuscationConfig& cfg) {
  ManifestEntry m;
  m.object_id = o.object_id;
  m.box = o.box;
  m.category_id = o.category_id;
  m.technique = t;
  if (t == Technique::Remove) {
    m.sigma = blur_sigma(o.box, cfg.blur);
    m.radius = kernel_radius(m.sigma);
    m.margin = blur_margin(cfg.blur, m.sigma);
  } else {
    m.fill = category_fill_color(o.category_id);
    m.label_rendered = cfg.mask.render_label;
  }
  return m;
}

inline const SensitiveCategory& resolve(const Taxonomy& taxonomy, const std::string& id) {
  const auto* c = taxonomy.find(id);
  if (c == nullptr) fail(ErrorCode::InvariantViolation, "category '" + id + "' not in taxonomy");
  return *c;
}

inline Raster apply(const Raster& in, const DetectedObject& o, Technique t, const Taxonomy& taxonomy,
                    const ObfuscationConfig& cfg) {
  return t == Technique::Remove ? blur_region(in, o.box, cfg.blur)
                                : mask_region(in, o.box, resolve(taxonomy, o.category_id), cfg.mask);
}

}  // namespace detail

// One candidate applying `technique` to every object. Objects are processed
// in (category_id, y, x, object_id) order so overlaps resolve the same way
// every time.
inline CandidateImage obfuscate_all(const SourceImage& source, std::vector<DetectedObject> objects,
                                    Technique technique, const Taxonomy& taxonomy,
                                    const ObfuscationConfig& cfg = {}) {
  std::sort(objects.begin(), objects.end(), [](const DetectedObject& a, const DetectedObject& b) {
    return std::tie(a.category_id, a.box.y, a.box.x, a.object_id) <
           std::tie(b.category_id, b.box.y, b.box.x, b.object_id);
  });
  CandidateImage c;
  c.parent_digest = source.digest;
  c.technique = technique;
  c.all_objects = true;
  c.raster = source.raster;
  std::string key = "all";
  for (const auto& o : objects) {
    c.raster = detail::apply(c.raster, o, technique, taxonomy, cfg);
    c.targets.push_back(o.object_id);
    c.manifest.push_back(detail::manifest_for(o, technique, cfg));
    key += ":" + o.object_id;
  }
  c.candidate_id = candidate_id_for(source.digest, technique, key);
  c.digest = c.raster.digest();
  return c;
}

// One Remove and one Mask candidate per object (2*n_sen in total), plus the
// optional all-objects pair. Sorted by candidate_id.
inline std::vector<CandidateImage> generate_candidates(const SourceImage& source,
                                                       const std::vector<DetectedObject>& objects,
                                                       const Taxonomy& taxonomy, const ObfuscationConfig& cfg = {}) {
  std::vector<CandidateImage> out;
  for (const auto& o : objects) {
    if (!o.box.fits(source.width(), source.height())) {
      fail(ErrorCode::InvariantViolation, "object '" + o.object_id + "' box outside image");
    }
    for (Technique t : {Technique::Remove, Technique::Mask}) {
      CandidateImage c;
      c.candidate_id = candidate_id_for(source.digest, t, o.object_id);
      c.parent_digest = source.digest;
      c.technique = t;
      c.targets = {o.object_id};
      c.raster = detail::apply(source.raster, o, t, taxonomy, cfg);
      c.digest = c.raster.digest();
      c.manifest = {detail::manifest_for(o, t, cfg)};
      out.push_back(std::move(c));
    }
  }
  if (cfg.all_objects && !objects.empty()) {
    for (Technique t : {Technique::Remove, Technique::Mask}) out.push_back(obfuscate_all(source, objects, t, taxonomy, cfg));
  }
  std::sort(out.begin(), out.end(),
            [](const CandidateImage& a, const CandidateImage& b) { return a.candidate_id < b.candidate_id; });
  return out;
}

}  // namespace ppa
