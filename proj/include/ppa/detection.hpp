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
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "json.hpp"
#include "ppa/core.hpp"
#include "ppa/core_json.hpp"
#include "ppa/error.hpp"
#include "ppa/io.hpp"
#include "ppa/png_codec.hpp"
#include "ppa/taxonomy.hpp"

namespace ppa {

struct SidecarRecord {
  std::string object_id;
  BoundingBox box;
  std::string category_id;
  double confidence = 1.0;
  std::string label;
};

struct AnnotationSidecar {
  std::string image;  // relative path or digest of the paired image
  std::vector<SidecarRecord> records;
};

struct ImageSize {
  int width = 0;
  int height = 0;
};

namespace detail {

inline std::string line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace detail

// Parses the `<stem>.ppa.json` format. Category ids are resolved against
// `taxonomy`; boxes are checked against `size` when the paired image is known.
inline AnnotationSidecar parse_sidecar(const std::string& text, const Taxonomy& taxonomy,
                                       std::optional<ImageSize> size = std::nullopt,
                                       const std::string& source = "<sidecar>") {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::ParseError, source + ": " + detail::line_col(text, e.byte == 0 ? 0 : e.byte - 1) +
                                    ": malformed JSON");
  }
  if (!doc.is_object()) fail(ErrorCode::ParseError, source + ": top level must be an object");
  if (!doc.contains("image") || !doc["image"].is_string()) {
    fail(ErrorCode::ParseError, source + ": field 'image' must be a string");
  }
  if (!doc.contains("objects") || !doc["objects"].is_array()) {
    fail(ErrorCode::ParseError, source + ": field 'objects' must be an array");
  }
  AnnotationSidecar out;
  out.image = doc["image"].get<std::string>();
  const auto& objects = doc["objects"];
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const auto& o = objects[i];
    const std::string where = source + ": objects[" + std::to_string(i) + "]";
    SidecarRecord r;
    try {
      const auto& b = o.at("box");
      r.box = {b.at("x").get<int>(), b.at("y").get<int>(), b.at("w").get<int>(), b.at("h").get<int>()};
    } catch (const nlohmann::json::exception&) {
      fail(ErrorCode::ParseError, where + ".box: expected {x,y,w,h} integers");
    }
    if (!o.contains("category") || !o["category"].is_string()) {
      fail(ErrorCode::ParseError, where + ".category: expected a string");
    }
    r.category_id = o["category"].get<std::string>();
    if (!taxonomy.contains(r.category_id)) {
      fail(ErrorCode::ParseError, where + ".category: unknown category '" + r.category_id + "'");
    }
    if (o.contains("confidence")) {
      if (!o["confidence"].is_number()) fail(ErrorCode::ParseError, where + ".confidence: expected a number");
      r.confidence = o["confidence"].get<double>();
      if (!(r.confidence >= 0.0 && r.confidence <= 1.0)) {
        fail(ErrorCode::ParseError, where + ".confidence: must lie in [0,1]");
      }
    }
    if (o.contains("label")) {
      if (!o["label"].is_string()) fail(ErrorCode::ParseError, where + ".label: expected a string");
      r.label = o["label"].get<std::string>();
    }
    r.object_id = o.contains("id") && o["id"].is_string() ? o["id"].get<std::string>() : "obj-" + std::to_string(i);
    if (r.box.w <= 0 || r.box.h <= 0 || r.box.x < 0 || r.box.y < 0) {
      fail(ErrorCode::ParseError, where + ".box: negative origin or empty extent");
    }
    if (size && !r.box.fits(size->width, size->height)) {
      fail(ErrorCode::DimensionMismatch, where + ".box exceeds image " + std::to_string(size->width) + "x" +
                                             std::to_string(size->height));
    }
    out.records.push_back(std::move(r));
  }
  return out;
}

inline AnnotationSidecar load_sidecar(const std::filesystem::path& path, const Taxonomy& taxonomy,
                                      std::optional<ImageSize> size = std::nullopt) {
  return parse_sidecar(io::read_file(path), taxonomy, size, path.string());
}

inline std::filesystem::path sidecar_path_for(const std::filesystem::path& image) {
  auto p = image;
  p.replace_extension(".ppa.json");
  return p;
}

class DetectorBackend {
 public:
  virtual ~DetectorBackend() = default;
  virtual std::string id() const = 0;
  // Raw detections; detect_sensitive_objects validates and filters them.
  virtual std::vector<DetectedObject> detect(const SourceImage& image, const Taxonomy& taxonomy) const = 0;
};

// Deterministic backend serving offline-authored sidecars, keyed by the
// digest of the image they annotate.
class SidecarDetector : public DetectorBackend {
 public:
  std::string id() const override { return "sidecar"; }

  void add(const std::string& digest, AnnotationSidecar sidecar) { by_digest_[digest] = std::move(sidecar); }
  bool has(const std::string& digest) const { return by_digest_.contains(digest); }
  std::size_t size() const { return by_digest_.size(); }

  // Pairs every `<stem>.ppa.json` with `<stem>.png` in `dir`. Sidecars whose
  // image field is a raw digest are accepted without a paired file.
  static SidecarDetector from_directory(const std::filesystem::path& dir, const Taxonomy& taxonomy) {
    SidecarDetector det;
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
      const std::string name = e.path().filename().string();
      if (name.size() > 9 && name.ends_with(".ppa.json")) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      const std::string name = f.filename().string();
      const auto image_path = f.parent_path() / (name.substr(0, name.size() - 9) + ".png");
      if (std::filesystem::exists(image_path)) {
        const Raster r = decode_png(io::read_bytes(image_path));
        det.add(r.digest(), load_sidecar(f, taxonomy, ImageSize{r.width(), r.height()}));
      } else {
        auto sc = load_sidecar(f, taxonomy);
        det.add(sc.image, std::move(sc));
      }
    }
    return det;
  }

  std::vector<DetectedObject> detect(const SourceImage& image, const Taxonomy&) const override {
    auto it = by_digest_.find(image.digest);
    if (it == by_digest_.end()) {
      fail(ErrorCode::BackendUnavailable, "no sidecar registered for image " + image.digest);
    }
    std::vector<DetectedObject> out;
    for (const auto& r : it->second.records) {
      out.push_back({r.object_id, r.box, r.category_id, r.confidence, r.label});
    }
    return out;
  }

 private:
  std::map<std::string, AnnotationSidecar> by_digest_;
};

struct DetectionOptions {
  double min_confidence = 0.0;
};

// Validates backend output against the image, keeps objects whose category
// is in `taxonomy` and whose confidence reaches the threshold, and orders
// them by (category_id, y, x).
inline std::vector<DetectedObject> detect_sensitive_objects(const SourceImage& image, const Taxonomy& taxonomy,
                                                            const DetectorBackend& backend,
                                                            const DetectionOptions& options = {}) {
  if (taxonomy.empty()) fail(ErrorCode::ConfigError, "taxonomy must be non-empty");
  if (image.raster.empty()) fail(ErrorCode::InvariantViolation, "image has no pixels");
  std::vector<DetectedObject> raw = backend.detect(image, taxonomy);
  std::vector<DetectedObject> out;
  for (auto& o : raw) {
    if (!o.box.fits(image.width(), image.height())) {
      fail(ErrorCode::MalformedDetection, "object '" + o.object_id + "' box lies outside the " +
                                              std::to_string(image.width()) + "x" +
                                              std::to_string(image.height()) + " image");
    }
    if (!(o.confidence >= 0.0 && o.confidence <= 1.0)) {
      fail(ErrorCode::MalformedDetection, "object '" + o.object_id + "' confidence outside [0,1]");
    }
    if (!taxonomy.contains(o.category_id)) continue;
    if (o.confidence < options.min_confidence) continue;
    out.push_back(std::move(o));
  }
  std::sort(out.begin(), out.end(), [](const DetectedObject& a, const DetectedObject& b) {
    return std::tie(a.category_id, a.box.y, a.box.x, a.object_id) <
           std::tie(b.category_id, b.box.y, b.box.x, b.object_id);
  });
  std::set<std::string> ids;
  for (const auto& o : out) {
    if (!ids.insert(o.object_id).second) fail(ErrorCode::MalformedDetection, "duplicate object id '" + o.object_id + "'");
  }
  return out;
}

}  // namespace ppa
