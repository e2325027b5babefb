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
#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ppa/error.hpp"
#include "ppa/raster.hpp"

namespace ppa {

inline std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

struct SourceImage {
  Raster raster;
  std::string digest;

  static SourceImage from_raster(Raster raster) {
    std::string d = raster.digest();
    return {std::move(raster), std::move(d)};
  }
  int width() const noexcept { return raster.width(); }
  int height() const noexcept { return raster.height(); }
};

struct TaskPrompt {
  std::string text;
  std::string prompt_id;

  // The id defaults to a content hash so that replay keys stay stable across
  // sessions submitting the same prompt.
  static TaskPrompt make(std::string_view text, std::string prompt_id = {}) {
    if (trim(text).empty()) fail(ErrorCode::EmptyPrompt, "prompt is empty after trimming whitespace");
    TaskPrompt p{std::string(text), std::move(prompt_id)};
    if (p.prompt_id.empty()) p.prompt_id = "p-" + sha256_hex(p.text).substr(0, 16);
    return p;
  }
  friend bool operator==(const TaskPrompt&, const TaskPrompt&) = default;
};

struct SensitiveCategory {
  std::string id;
  std::string display_name;
  std::vector<std::string> terms;     // lowercase words or multi-word phrases
  std::vector<std::string> patterns;  // ECMAScript regex over case-folded text
  double weight = 1.0;
  friend bool operator==(const SensitiveCategory&, const SensitiveCategory&) = default;
};

struct BoundingBox {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  bool fits(int width, int height) const noexcept {
    return w > 0 && h > 0 && x >= 0 && y >= 0 && static_cast<long>(x) + w <= width &&
           static_cast<long>(y) + h <= height;
  }
  bool contains(int px, int py) const noexcept { return px >= x && px < x + w && py >= y && py < y + h; }

  // Box grown by `margin` on every side, clamped to the image.
  BoundingBox expanded(int margin, int width, int height) const noexcept {
    const int x0 = std::max(0, x - margin);
    const int y0 = std::max(0, y - margin);
    const int x1 = std::min(width, x + w + margin);
    const int y1 = std::min(height, y + h + margin);
    return {x0, y0, x1 - x0, y1 - y0};
  }
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct DetectedObject {
  std::string object_id;
  BoundingBox box;
  std::string category_id;
  double confidence = 1.0;
  std::string label;
  friend bool operator==(const DetectedObject&, const DetectedObject&) = default;
};

enum class Technique { Remove, Mask };

inline std::string_view to_string(Technique t) { return t == Technique::Remove ? "remove" : "mask"; }

inline Technique technique_from_string(std::string_view s) {
  if (s == "remove" || s == "blur") return Technique::Remove;
  if (s == "mask") return Technique::Mask;
  fail(ErrorCode::ParseError, "unknown technique '" + std::string(s) + "'");
}

// Per-target record of what was applied where.
struct ManifestEntry {
  std::string object_id;
  BoundingBox box;
  std::string category_id;
  Technique technique = Technique::Remove;
  double sigma = 0.0;  // Remove only
  int margin = 0;      // Remove only
  int radius = 0;      // Remove only
  Rgb fill;            // Mask only
  bool label_rendered = false;
  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct CandidateImage {
  std::string candidate_id;
  std::string parent_digest;
  Technique technique = Technique::Remove;
  std::vector<std::string> targets;
  bool all_objects = false;  // excluded from the 2*n_sen law
  Raster raster;
  std::string digest;
  std::vector<ManifestEntry> manifest;
};

struct ModelResponse {
  std::string text;
  std::string backend_id;
  std::string prompt_id;
  std::string image_digest;
  double elapsed_ms = 0.0;
};

struct MetricSet {
  double leakage_orig = 0.0;
  double leakage_mod = 0.0;
  double privacy_gain = 0.0;
  double utility = 1.0;
  double utility_impact = 0.0;
  std::int64_t change_count = 0;

  bool identities_hold() const noexcept {
    return privacy_gain == leakage_orig - leakage_mod && utility_impact == 1.0 - utility &&
           leakage_orig >= 0.0 && leakage_orig <= 1.0 && leakage_mod >= 0.0 && leakage_mod <= 1.0 &&
           change_count >= 0;
  }
  friend bool operator==(const MetricSet&, const MetricSet&) = default;
};

enum class SessionState { Created, Detected, Modified, Analyzed, Selected, Submitted };

inline std::string_view to_string(SessionState s) {
  switch (s) {
    case SessionState::Created: return "Created";
    case SessionState::Detected: return "Detected";
    case SessionState::Modified: return "Modified";
    case SessionState::Analyzed: return "Analyzed";
    case SessionState::Selected: return "Selected";
    case SessionState::Submitted: return "Submitted";
  }
  return "Unknown";
}

inline SessionState session_state_from_string(std::string_view s) {
  for (int i = 0; i <= static_cast<int>(SessionState::Submitted); ++i) {
    const auto st = static_cast<SessionState>(i);
    if (to_string(st) == s) return st;
  }
  fail(ErrorCode::ParseError, "unknown session state '" + std::string(s) + "'");
}

struct Session {
  std::string session_id;
  std::string created_at;
  std::string updated_at;
  SourceImage source;  // pixels never leave the local store
  TaskPrompt prompt;
  std::optional<std::string> annotations;  // raw sidecar JSON attached at creation
  std::vector<DetectedObject> detected;
  std::vector<CandidateImage> candidates;  // sorted by candidate_id
  std::optional<ModelResponse> original_response;  // local-only R_orig
  std::map<std::string, ModelResponse> responses;
  std::map<std::string, MetricSet> metrics;
  std::map<std::string, std::string> failures;
  SessionState state = SessionState::Created;
  std::optional<std::string> selection;
  std::optional<ModelResponse> final_response;

  const CandidateImage* find_candidate(std::string_view id) const {
    for (const auto& c : candidates) {
      if (c.candidate_id == id) return &c;
    }
    return nullptr;
  }
  std::size_t per_object_candidate_count() const {
    return static_cast<std::size_t>(
        std::count_if(candidates.begin(), candidates.end(), [](const auto& c) { return !c.all_objects; }));
  }
};

// Accepts exactly one forward step along Created -> ... -> Submitted and
// checks the invariants the target state requires.
inline void validate_session_transition(const Session& session, SessionState next) {
  const int from = static_cast<int>(session.state);
  const int to = static_cast<int>(next);
  if (to != from + 1) {
    fail(ErrorCode::IllegalTransition,
         std::string(to_string(session.state)) + " -> " + std::string(to_string(next)));
  }
  if ((next == SessionState::Selected || next == SessionState::Submitted) && !session.selection) {
    fail(ErrorCode::IllegalTransition, std::string(to_string(session.state)) + " -> " +
                                           std::string(to_string(next)) + " requires a selection");
  }
  if (next == SessionState::Modified && session.per_object_candidate_count() != 2 * session.detected.size()) {
    fail(ErrorCode::InvariantViolation, "candidate count must equal 2*n_sen");
  }
}

// Full structural check used after reloads. Returns the first violation found.
inline std::optional<std::string> check_session_invariants(const Session& s) {
  const bool needs_selection = s.state == SessionState::Selected || s.state == SessionState::Submitted;
  if (needs_selection != s.selection.has_value()) return "selection must be set iff state is Selected/Submitted";
  if (s.source.raster.empty()) return "source raster missing";
  if (s.source.raster.digest() != s.source.digest) return "source digest does not match raster";
  if (s.state >= SessionState::Modified && s.per_object_candidate_count() != 2 * s.detected.size()) {
    return "candidate count must equal 2*n_sen";
  }
  std::set<std::string> object_ids;
  for (const auto& o : s.detected) {
    if (!o.box.fits(s.source.width(), s.source.height())) return "detected box out of bounds: " + o.object_id;
    if (!(o.confidence >= 0.0 && o.confidence <= 1.0)) return "confidence out of range: " + o.object_id;
    object_ids.insert(o.object_id);
  }
  std::set<std::string> candidate_ids;
  for (const auto& c : s.candidates) {
    if (!candidate_ids.insert(c.candidate_id).second) return "duplicate candidate id " + c.candidate_id;
    if (c.parent_digest != s.source.digest) return "candidate parent digest mismatch: " + c.candidate_id;
    if (c.raster.width() != s.source.width() || c.raster.height() != s.source.height()) {
      return "candidate raster shape mismatch: " + c.candidate_id;
    }
    if (c.raster.digest() != c.digest) return "candidate digest mismatch: " + c.candidate_id;
    if (c.targets.empty()) return "candidate without targets: " + c.candidate_id;
    for (const auto& t : c.targets) {
      if (!object_ids.contains(t)) return "candidate targets unknown object " + t;
    }
  }
  for (const auto& [id, r] : s.responses) {
    if (!candidate_ids.contains(id)) return "response for unknown candidate " + id;
    if (r.image_digest == s.source.digest) return "response attributed to the original image";
  }
  for (const auto& [id, m] : s.metrics) {
    if (!candidate_ids.contains(id)) return "metrics for unknown candidate " + id;
    if (!m.identities_hold()) return "metric identities violated for " + id;
  }
  if (s.selection && !candidate_ids.contains(*s.selection)) return "selection names unknown candidate";
  return std::nullopt;
}

}  // namespace ppa
