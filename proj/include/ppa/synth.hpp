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

// Deterministic synthetic corpus for hermetic evaluation runs: procedural
// images with sidecars, the prompt file, a replay store holding one canned
// answer per (image version, prompt), and a backend config pointing at it.

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "ppa/core.hpp"
#include "ppa/detection.hpp"
#include "ppa/eval.hpp"
#include "ppa/gateway.hpp"
#include "ppa/io.hpp"
#include "ppa/obfuscation.hpp"
#include "ppa/png_codec.hpp"
#include "ppa/taxonomy.hpp"

namespace ppa::eval {

struct SynthOptions {
  int images = 20;
  std::uint64_t seed = 7;
  std::string backend_id = "replay";
  std::vector<TaskPrompt> prompts = default_prompts();
};

namespace synth {

// Scene sentences without any lexicon term.
inline const std::vector<std::string>& neutral_sentences() {
  static const std::vector<std::string> k = {
      "The scene shows a wide open area with soft daylight.",
      "There are several trees along the edge of the frame.",
      "A few parked cars are visible in the background.",
      "The sky is partly cloudy and the colors are warm.",
      "It is difficult to determine this with certainty from the picture.",
      "The photo appears to be taken during the afternoon.",
      "Some buildings with large windows line the road.",
      "A person is standing near the center of the image.",
      "Parts of the image look smeared or unclear.",
      "There is a plain colored block covering part of the picture.",
      "Nothing in the picture clearly indicates this.",
      "The lighting suggests an outdoor setting.",
  };
  return k;
}

inline const std::vector<std::string>& pii_sentences(const std::string& category) {
  static const std::map<std::string, std::vector<std::string>> k = {
      {"location",
       {"This looks like Paris, close to the Eiffel Tower.", "The skyline resembles downtown London.",
        "It seems to be a street in Rome near a famous monument.", "The harbor suggests Sydney."}},
      {"occupation",
       {"The person wears a uniform typical of a police officer.", "They might work as a chef.",
        "The outfit suggests a construction worker.", "They appear to be a nurse."}},
      {"marital_status",
       {"A wedding ring is visible on the left hand.", "The person might be married.",
        "They seem to be out with their spouse."}},
      {"gender",
       {"The person appears to be a woman.", "It looks like a man in a jacket.", "The figure seems to be male."}},
      {"interests",
       {"Their gear suggests a cycling enthusiast.", "They may enjoy hiking.", "A guitar hints at a music hobby."}},
      {"education",
       {"The building resembles a university campus.", "They might be a graduate student.",
        "A diploma hangs on the wall."}},
      {"age",
       {"The person looks about 30 years old.", "They appear to be in their early 30s.",
        "They seem to be a teenager."}},
      {"affiliation",
       {"The team jersey suggests a club member.", "The building looks like a church.",
        "A volunteer badge is visible."}},
  };
  static const std::vector<std::string> none;
  auto it = k.find(category);
  return it == k.end() ? none : it->second;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  std::uint64_t below(std::uint64_t n) { return gen_() % n; }
  bool chance(int per_mille) { return static_cast<int>(gen_() % 1000) < per_mille; }
  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[below(v.size())];
  }

 private:
  std::mt19937_64 gen_;
};

inline std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += ' ';
    out += p;
  }
  return out;
}

struct VersionProfile {
  int keep_neutral;  // per mille chance each original neutral sentence survives
  int pii_prompt;    // per mille chance of a PII sentence in the prompt's category
  int pii_other;     // per mille chance of a PII sentence in another category
};

inline std::vector<std::string> neutral_base(Rng& rng) {
  std::vector<std::string> out;
  const int n = 2 + static_cast<int>(rng.below(2));
  for (int i = 0; i < n; ++i) out.push_back(rng.pick(neutral_sentences()));
  return out;
}

inline std::string response(Rng& rng, const std::vector<std::string>& base, const std::string& prompt_category,
                            const std::vector<std::string>& categories, const VersionProfile& vp) {
  std::vector<std::string> parts;
  for (const auto& s : base) parts.push_back(rng.chance(vp.keep_neutral) ? s : rng.pick(neutral_sentences()));
  const auto insert = [&](const std::string& s) { parts.insert(parts.begin() + static_cast<std::ptrdiff_t>(rng.below(parts.size() + 1)), s); };
  if (!pii_sentences(prompt_category).empty() && rng.chance(vp.pii_prompt)) insert(rng.pick(pii_sentences(prompt_category)));
  if (rng.chance(vp.pii_other)) {
    const auto& other = rng.pick(categories);
    if (!pii_sentences(other).empty()) insert(rng.pick(pii_sentences(other)));
  }
  return join(parts);
}

inline Raster procedural_image(Rng& rng, int w, int h) {
  Raster r(w, h);
  const int tint_r = static_cast<int>(rng.below(200));
  const int tint_g = static_cast<int>(rng.below(200));
  const int tint_b = static_cast<int>(rng.below(200));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int n = static_cast<int>(rng.below(48));
      r.set(x, y,
            {static_cast<std::uint8_t>((tint_r + x * 55 / w + n) % 256),
             static_cast<std::uint8_t>((tint_g + y * 55 / h + n) % 256),
             static_cast<std::uint8_t>((tint_b + (x + y) * 30 / (w + h) + n) % 256)});
    }
  }
  return r;
}

}  // namespace synth

// Writes <dir>/corpus/*.png + *.ppa.json, <dir>/prompts.json,
// <dir>/replay/ and <dir>/backend.json.
inline void make_synthetic_corpus(const std::filesystem::path& dir, const SynthOptions& opt = {},
                                  const Taxonomy& taxonomy = default_taxonomy(),
                                  const ObfuscationConfig& obfuscation = {}) {
  namespace fs = std::filesystem;
  const auto corpus = dir / "corpus";
  fs::create_directories(corpus);
  synth::Rng rng(opt.seed);
  ReplayStore replay(dir / "replay");
  const auto categories = taxonomy.ids();
  std::vector<std::string> other_categories = categories;

  for (int i = 0; i < opt.images; ++i) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "img_%03d", i);
    const int w = 56 + static_cast<int>(rng.below(25));
    const int h = 44 + static_cast<int>(rng.below(21));
    const Raster raster = synth::procedural_image(rng, w, h);
    json objects = json::array();
    const int k = 1 + static_cast<int>(rng.below(3));
    for (int o = 0; o < k; ++o) {
      const std::string cat = rng.chance(500) ? "location" : rng.pick(categories);
      const int bw = 6 + static_cast<int>(rng.below(13));
      const int bh = 6 + static_cast<int>(rng.below(13));
      const int bx = static_cast<int>(rng.below(static_cast<std::uint64_t>(w - bw + 1)));
      const int by = static_cast<int>(rng.below(static_cast<std::uint64_t>(h - bh + 1)));
      objects.push_back({{"box", {{"x", bx}, {"y", by}, {"w", bw}, {"h", bh}}},
                         {"category", cat},
                         {"confidence", 0.5 + static_cast<double>(rng.below(50)) / 100.0},
                         {"label", cat + " cue"}});
    }
    const json sidecar = {{"image", std::string(stem) + ".png"}, {"objects", objects}};
    io::write_atomic(corpus / (std::string(stem) + ".png"), encode_png(raster));
    io::write_atomic(corpus / (std::string(stem) + ".ppa.json"), sidecar.dump(2) + "\n");

    const auto source = SourceImage::from_raster(raster);
    SidecarDetector det;
    det.add(source.digest, parse_sidecar(sidecar.dump(), taxonomy));
    const auto detected = detect_sensitive_objects(source, taxonomy, det);
    const std::string blur_digest = obfuscate_all(source, detected, Technique::Remove, taxonomy, obfuscation).digest;
    const std::string mask_digest = obfuscate_all(source, detected, Technique::Mask, taxonomy, obfuscation).digest;

    for (const auto& p : opt.prompts) {
      const bool marital = p.prompt_id == "marital_status";
      const auto base = synth::neutral_base(rng);
      const std::string orig =
          synth::response(rng, base, p.prompt_id, other_categories, {1000, marital ? 400 : 850, 300});
      const std::string blur =
          synth::response(rng, base, p.prompt_id, other_categories, {800, marital ? 450 : 200, 150});
      const std::string mask =
          synth::response(rng, base, p.prompt_id, other_categories, {550, marital ? 450 : 150, 200});
      replay.record({source.digest, p.prompt_id, opt.backend_id}, orig, true);
      replay.record({blur_digest, p.prompt_id, opt.backend_id}, blur, true);
      replay.record({mask_digest, p.prompt_id, opt.backend_id}, mask, true);
    }
  }
  io::write_atomic(dir / "prompts.json", prompts_to_json(opt.prompts).dump(2) + "\n");
  const json backend = {
      {"backend", {{"kind", "replay"}, {"id", opt.backend_id}, {"replay_dir", "replay"}, {"trusted_local", true}}},
      {"concurrency", {{"max_inflight", 4}}}};
  io::write_atomic(dir / "backend.json", backend.dump(2) + "\n");
}

}  // namespace ppa::eval
