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

// JSON mapping for the domain types. Key names follow the field names.
// Rasters are never embedded; images travel as PNG blobs addressed by digest.

#include "json.hpp"
#include "ppa/core.hpp"

namespace ppa {

using nlohmann::json;

inline void to_json(json& j, const Rgb& c) { j = json::array({c.r, c.g, c.b}); }
inline void from_json(const json& j, Rgb& c) {
  c.r = j.at(0).get<std::uint8_t>();
  c.g = j.at(1).get<std::uint8_t>();
  c.b = j.at(2).get<std::uint8_t>();
}

inline void to_json(json& j, const TaskPrompt& p) { j = {{"text", p.text}, {"prompt_id", p.prompt_id}}; }
inline void from_json(const json& j, TaskPrompt& p) {
  p.text = j.at("text").get<std::string>();
  p.prompt_id = j.at("prompt_id").get<std::string>();
}

inline void to_json(json& j, const SensitiveCategory& c) {
  j = {{"id", c.id}, {"display_name", c.display_name}, {"weight", c.weight}, {"terms", c.terms},
       {"patterns", c.patterns}};
}
inline void from_json(const json& j, SensitiveCategory& c) {
  c.id = j.at("id").get<std::string>();
  c.display_name = j.value("display_name", c.id);
  c.weight = j.value("weight", 1.0);
  c.terms = j.value("terms", std::vector<std::string>{});
  c.patterns = j.value("patterns", std::vector<std::string>{});
}

inline void to_json(json& j, const BoundingBox& b) { j = {{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}}; }
inline void from_json(const json& j, BoundingBox& b) {
  b.x = j.at("x").get<int>();
  b.y = j.at("y").get<int>();
  b.w = j.at("w").get<int>();
  b.h = j.at("h").get<int>();
}

inline void to_json(json& j, const DetectedObject& o) {
  j = {{"object_id", o.object_id}, {"box", o.box},          {"category_id", o.category_id},
       {"confidence", o.confidence}, {"label", o.label}};
}
inline void from_json(const json& j, DetectedObject& o) {
  o.object_id = j.at("object_id").get<std::string>();
  o.box = j.at("box").get<BoundingBox>();
  o.category_id = j.at("category_id").get<std::string>();
  o.confidence = j.at("confidence").get<double>();
  o.label = j.value("label", "");
}

inline void to_json(json& j, const ManifestEntry& m) {
  j = {{"object_id", m.object_id}, {"box", m.box}, {"category_id", m.category_id},
       {"technique", to_string(m.technique)}};
  if (m.technique == Technique::Remove) {
    j["params"] = {{"sigma", m.sigma}, {"margin", m.margin}, {"radius", m.radius}};
  } else {
    j["params"] = {{"fill_color", m.fill}, {"render_label", m.label_rendered}};
  }
}
inline void from_json(const json& j, ManifestEntry& m) {
  m.object_id = j.at("object_id").get<std::string>();
  m.box = j.at("box").get<BoundingBox>();
  m.category_id = j.at("category_id").get<std::string>();
  m.technique = technique_from_string(j.at("technique").get<std::string>());
  const json& p = j.at("params");
  if (m.technique == Technique::Remove) {
    m.sigma = p.at("sigma").get<double>();
    m.margin = p.at("margin").get<int>();
    m.radius = p.at("radius").get<int>();
  } else {
    m.fill = p.at("fill_color").get<Rgb>();
    m.label_rendered = p.value("render_label", false);
  }
}

inline void to_json(json& j, const CandidateImage& c) {
  j = {{"candidate_id", c.candidate_id}, {"parent_digest", c.parent_digest},
       {"technique", to_string(c.technique)}, {"targets", c.targets},
       {"all_objects", c.all_objects},     {"digest", c.digest},
       {"width", c.raster.width()},        {"height", c.raster.height()},
       {"manifest", c.manifest}};
}
// Leaves the raster empty; the session store fills it from the blob.
inline void from_json(const json& j, CandidateImage& c) {
  c.candidate_id = j.at("candidate_id").get<std::string>();
  c.parent_digest = j.at("parent_digest").get<std::string>();
  c.technique = technique_from_string(j.at("technique").get<std::string>());
  c.targets = j.at("targets").get<std::vector<std::string>>();
  c.all_objects = j.value("all_objects", false);
  c.digest = j.at("digest").get<std::string>();
  c.manifest = j.at("manifest").get<std::vector<ManifestEntry>>();
}

inline void to_json(json& j, const ModelResponse& r) {
  j = {{"text", r.text},
       {"backend_id", r.backend_id},
       {"prompt_id", r.prompt_id},
       {"image_digest", r.image_digest},
       {"elapsed", r.elapsed_ms}};
}
inline void from_json(const json& j, ModelResponse& r) {
  r.text = j.at("text").get<std::string>();
  r.backend_id = j.at("backend_id").get<std::string>();
  r.prompt_id = j.at("prompt_id").get<std::string>();
  r.image_digest = j.at("image_digest").get<std::string>();
  r.elapsed_ms = j.value("elapsed", 0.0);
}

inline void to_json(json& j, const MetricSet& m) {
  j = {{"leakage_orig", m.leakage_orig}, {"leakage_mod", m.leakage_mod},
       {"privacy_gain", m.privacy_gain}, {"utility", m.utility},
       {"utility_impact", m.utility_impact}, {"change_count", m.change_count}};
}
inline void from_json(const json& j, MetricSet& m) {
  m.leakage_orig = j.at("leakage_orig").get<double>();
  m.leakage_mod = j.at("leakage_mod").get<double>();
  m.privacy_gain = j.at("privacy_gain").get<double>();
  m.utility = j.at("utility").get<double>();
  m.utility_impact = j.at("utility_impact").get<double>();
  m.change_count = j.at("change_count").get<std::int64_t>();
}

template <typename T>
json optional_to_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> optional_from_json(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

inline void to_json(json& j, const Session& s) {
  j = {{"session_id", s.session_id},
       {"created_at", s.created_at},
       {"updated_at", s.updated_at},
       {"input",
        {{"image", {{"width", s.source.width()}, {"height", s.source.height()}, {"digest", s.source.digest}}},
         {"prompt", s.prompt}}},
       {"annotations", optional_to_json(s.annotations)},
       {"detected", s.detected},
       {"candidates", s.candidates},
       {"original_response", optional_to_json(s.original_response)},
       {"responses", s.responses},
       {"metrics", s.metrics},
       {"failures", s.failures},
       {"state", to_string(s.state)},
       {"selection", optional_to_json(s.selection)},
       {"final_response", optional_to_json(s.final_response)}};
}

// Leaves source and candidate rasters empty; see SessionStore::load.
inline void from_json(const json& j, Session& s) {
  s.session_id = j.at("session_id").get<std::string>();
  s.created_at = j.value("created_at", "");
  s.updated_at = j.value("updated_at", "");
  const json& input = j.at("input");
  s.source.digest = input.at("image").at("digest").get<std::string>();
  s.prompt = input.at("prompt").get<TaskPrompt>();
  s.annotations = optional_from_json<std::string>(j, "annotations");
  s.detected = j.at("detected").get<std::vector<DetectedObject>>();
  s.candidates = j.at("candidates").get<std::vector<CandidateImage>>();
  s.original_response = optional_from_json<ModelResponse>(j, "original_response");
  s.responses = j.at("responses").get<std::map<std::string, ModelResponse>>();
  s.metrics = j.at("metrics").get<std::map<std::string, MetricSet>>();
  s.failures = j.value("failures", std::map<std::string, std::string>{});
  s.state = session_state_from_string(j.at("state").get<std::string>());
  s.selection = optional_from_json<std::string>(j, "selection");
  s.final_response = optional_from_json<ModelResponse>(j, "final_response");
}

}  // namespace ppa
