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

// Slow reference implementations. Each one is written from the metric and
// filter definitions directly, without calling the production code path it
// checks: nested-loop term matching, 2-D direct convolution, map-based term
// counting, full-matrix edit distance, linear-scan binning. Used by the test
// oracles and by `ppa-eval oracle` to regenerate golden fixtures.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <regex>
#include <string>
#include <vector>

#include "json.hpp"
#include "ppa/core.hpp"
#include "ppa/gateway.hpp"
#include "ppa/io.hpp"
#include "ppa/png_codec.hpp"
#include "ppa/raster.hpp"
#include "ppa/taxonomy.hpp"

namespace ppa::reference {

using nlohmann::json;

inline std::vector<std::string> words(const std::string& s) {
  std::vector<std::string> out;
  std::string w;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    const unsigned char c = i < s.size() ? static_cast<unsigned char>(s[i]) : ' ';
    const bool word = std::isdigit(c) || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 128;
    if (word) {
      w += (c >= 'A' && c <= 'Z') ? static_cast<char>(c + 32) : static_cast<char>(c);
    } else if (!w.empty()) {
      out.push_back(w);
      w.clear();
    }
  }
  return out;
}

inline std::uint64_t fnv(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) h = (h ^ c) * 1099511628211ULL;
  return h;
}

// ---- image operations ----

inline std::vector<std::uint64_t> kernel(double sigma) {
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  double total = 0.0;
  for (int i = -r; i <= r; ++i) total += std::exp(-(double(i) * i) / (2.0 * sigma * sigma));
  std::vector<std::uint64_t> k;
  std::int64_t sum = 0;
  for (int i = -r; i <= r; ++i) {
    const auto v = std::llround(std::exp(-(double(i) * i) / (2.0 * sigma * sigma)) / total * 65536.0);
    k.push_back(static_cast<std::uint64_t>(v));
    sum += v;
  }
  k[static_cast<std::size_t>(r)] = static_cast<std::uint64_t>(static_cast<std::int64_t>(k[static_cast<std::size_t>(r)]) + 65536 - sum);
  return k;
}

struct BlurSettings {
  double sigma_scale = 0.15;
  double sigma_min = 8.0;
  int margin = -1;  // -1: ceil(3*sigma)
};

// Direct 2-D convolution with the outer product of the quantized taps.
inline Raster blur(const Raster& in, const BoundingBox& box, const BlurSettings& s = {}) {
  const double sigma = std::max(s.sigma_min, s.sigma_scale * std::min(box.w, box.h));
  const auto k = kernel(sigma);
  const int r = static_cast<int>(k.size() / 2);
  const int margin = s.margin >= 0 ? s.margin : static_cast<int>(std::ceil(3.0 * sigma));
  const int fx0 = std::max(0, box.x - margin);
  const int fy0 = std::max(0, box.y - margin);
  const int fx1 = std::min(in.width() - 1, box.x + box.w - 1 + margin);
  const int fy1 = std::min(in.height() - 1, box.y + box.h - 1 + margin);
  Raster out = in;
  for (int y = box.y; y < box.y + box.h; ++y) {
    for (int x = box.x; x < box.x + box.w; ++x) {
      std::uint64_t acc[3] = {0, 0, 0};
      for (int i = -r; i <= r; ++i) {
        const int sy = std::min(std::max(y + i, fy0), fy1);
        for (int j = -r; j <= r; ++j) {
          const int sx = std::min(std::max(x + j, fx0), fx1);
          const Rgb p = in.at(sx, sy);
          const std::uint64_t w = k[static_cast<std::size_t>(i + r)] * k[static_cast<std::size_t>(j + r)];
          acc[0] += w * p.r;
          acc[1] += w * p.g;
          acc[2] += w * p.b;
        }
      }
      out.set(x, y,
              {static_cast<std::uint8_t>((acc[0] + 2147483648ULL) / 4294967296ULL),
               static_cast<std::uint8_t>((acc[1] + 2147483648ULL) / 4294967296ULL),
               static_cast<std::uint8_t>((acc[2] + 2147483648ULL) / 4294967296ULL)});
    }
  }
  return out;
}

inline Rgb fill_color(const std::string& category_id) {
  const std::uint64_t h = fnv("ppa-mask:" + category_id);
  return {static_cast<std::uint8_t>(h & 0xff), static_cast<std::uint8_t>((h >> 8) & 0xff),
          static_cast<std::uint8_t>((h >> 16) & 0xff)};
}

inline Raster mask(const Raster& in, const BoundingBox& box, const std::string& category_id) {
  Raster out = in;
  const Rgb c = fill_color(category_id);
  for (int y = 0; y < in.height(); ++y) {
    for (int x = 0; x < in.width(); ++x) {
      if (x >= box.x && x < box.x + box.w && y >= box.y && y < box.y + box.h) out.set(x, y, c);
    }
  }
  return out;
}

// ---- text metrics ----

inline bool boundary_before(const std::string& t, std::size_t s) {
  if (s == 0) return true;
  const char c = t[s - 1];
  return !((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9'));
}
inline bool boundary_after(const std::string& t, std::size_t e) {
  if (e == t.size()) return true;
  const char c = t[e];
  return !((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9'));
}

// Longest span tried for a pattern match.
inline constexpr std::size_t kMaxPatternSpan = 64;

inline bool category_hit(const SensitiveCategory& c, const std::vector<std::string>& text_words,
                         const std::string& folded) {
  for (const auto& term : c.terms) {
    const auto tw = words(term);
    if (tw.empty()) continue;
    for (std::size_t i = 0; i + tw.size() <= text_words.size(); ++i) {
      bool all = true;
      for (std::size_t k = 0; k < tw.size(); ++k) all = all && text_words[i + k] == tw[k];
      if (all) return true;
    }
  }
  for (const auto& p : c.patterns) {
    const std::regex re(p);
    for (std::size_t s = 0; s <= folded.size(); ++s) {
      if (!boundary_before(folded, s)) continue;
      for (std::size_t e = s; e <= folded.size() && e - s <= kMaxPatternSpan; ++e) {
        if (boundary_after(folded, e) && std::regex_match(folded.begin() + s, folded.begin() + e, re)) return true;
      }
    }
  }
  return false;
}

inline double leakage(const std::string& text, const Taxonomy& taxonomy) {
  const auto tw = words(text);
  std::string folded = text;
  for (char& ch : folded) {
    if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch + 32);
  }
  double num = 0.0;
  double den = 0.0;
  for (const auto& c : taxonomy.categories()) {
    if (category_hit(c, tw, folded)) num += c.weight;
    den += c.weight;
  }
  return num / den;
}

inline std::vector<double> embed(const std::string& text, std::size_t dim = 16384) {
  std::map<std::string, int> counts;
  for (const auto& w : words(text)) ++counts[w];
  std::vector<double> v(dim, 0.0);
  for (const auto& [w, n] : counts) v[fnv(w) % dim] += n;
  double sq = 0.0;
  for (double x : v) sq += x * x;
  if (sq > 0.0) {
    const double norm = std::sqrt(sq);
    for (double& x : v) x /= norm;
  }
  return v;
}

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  if (a == b) return 1.0;
  const double c = dot / (std::sqrt(na) * std::sqrt(nb));
  return c > 1.0 ? 1.0 : (c < -1.0 ? -1.0 : c);
}

inline std::size_t edit_distance(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1, 0));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0u : 1u)});
    }
  }
  return d[a.size()][b.size()];
}

struct Metrics {
  double leakage_orig;
  double leakage_mod;
  double privacy_gain;
  double utility;
  double utility_impact;
  std::int64_t change_count;
};

inline Metrics metrics(const std::string& r_orig, const std::string& r_mod, const Taxonomy& taxonomy) {
  Metrics m{};
  m.leakage_orig = leakage(r_orig, taxonomy);
  m.leakage_mod = leakage(r_mod, taxonomy);
  m.privacy_gain = m.leakage_orig - m.leakage_mod;
  m.utility = cosine(embed(r_orig), embed(r_mod));
  m.utility_impact = 1.0 - m.utility;
  m.change_count = static_cast<std::int64_t>(edit_distance(words(r_orig), words(r_mod)));
  return m;
}

// Counts per bin: first bin [e0,e1], later bins (e_k, e_k+1].
inline std::vector<std::size_t> bin_counts(const std::vector<double>& values, const std::vector<double>& edges) {
  std::vector<std::size_t> counts(edges.size() - 1, 0);
  for (double v : values) {
    for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
      const bool lower_ok = k == 0 ? v >= edges[0] : v > edges[k];
      if (lower_ok && v <= edges[k + 1]) {
        ++counts[k];
        break;
      }
    }
  }
  return counts;
}

inline json histogram(const std::vector<double>& values, const std::vector<double>& edges) {
  const auto counts = bin_counts(values, edges);
  json fr = json::array();
  for (auto c : counts) fr.push_back(values.empty() ? 0.0 : double(c) / double(values.size()));
  return {{"edges", edges}, {"counts", counts}, {"fractions", fr}, {"degenerate", values.empty()}};
}

// ---- full evaluation report ----

struct OracleInputs {
  std::filesystem::path corpus;
  json prompts;  // [{"id","text"}]
  std::vector<std::string> versions = {"blur", "mask"};
  std::vector<double> leakage_edges;
  std::vector<double> ui_edges;
  Taxonomy taxonomy = default_taxonomy();
  BlurSettings blur;
  std::string local_backend_id = "replay";
  std::string remote_backend_id = "replay";
};

inline json report(const OracleInputs& in, const ReplayStore& replay) {
  std::vector<std::string> images;
  for (const auto& e : std::filesystem::directory_iterator(in.corpus)) {
    if (e.path().extension() == ".png") images.push_back(e.path().stem().string());
  }
  std::sort(images.begin(), images.end());

  json samples = json::array();
  json skipped = json::array();
  for (const auto& stem : images) {
    const Raster original = decode_png(io::read_bytes(in.corpus / (stem + ".png")));
    const json sc = json::parse(io::read_file(in.corpus / (stem + ".ppa.json")));
    struct Obj {
      std::string category;
      int y, x;
      std::string id;
      BoundingBox box;
    };
    std::vector<Obj> objs;
    for (std::size_t i = 0; i < sc["objects"].size(); ++i) {
      const auto& o = sc["objects"][i];
      const BoundingBox b{o["box"]["x"], o["box"]["y"], o["box"]["w"], o["box"]["h"]};
      const std::string id = o.contains("id") ? o["id"].get<std::string>() : "obj-" + std::to_string(i);
      objs.push_back({o["category"], b.y, b.x, id, b});
    }
    std::sort(objs.begin(), objs.end(), [](const Obj& a, const Obj& b) {
      if (a.category != b.category) return a.category < b.category;
      if (a.y != b.y) return a.y < b.y;
      if (a.x != b.x) return a.x < b.x;
      return a.id < b.id;
    });
    std::map<std::string, Raster> variant;
    for (const auto& v : in.versions) {
      Raster r = original;
      for (const auto& o : objs) r = v == "blur" ? blur(r, o.box, in.blur) : mask(r, o.box, o.category);
      variant[v] = r;
    }
    const std::string orig_digest = original.digest();
    for (const auto& p : in.prompts) {
      const std::string pid = p["id"];
      const ReplayKey ko{orig_digest, pid, in.local_backend_id};
      if (!replay.contains(ko)) {
        skipped.push_back({{"image", stem}, {"prompt_id", pid}, {"version", "original"}, {"reason", "ReplayMiss"}});
        for (const auto& v : in.versions) {
          skipped.push_back({{"image", stem}, {"prompt_id", pid}, {"version", v}, {"reason", "ReplayMiss"}});
        }
        continue;
      }
      const std::string r_orig = replay.lookup(ko);
      const Metrics self = metrics(r_orig, r_orig, in.taxonomy);
      samples.push_back({{"image", stem}, {"prompt_id", pid}, {"version", "original"},
                         {"leakage", self.leakage_orig}, {"privacy_gain", self.privacy_gain},
                         {"utility", self.utility}, {"utility_impact", self.utility_impact},
                         {"change_count", self.change_count}, {"response", r_orig}});
      for (const auto& v : in.versions) {
        const std::string d = variant[v].digest();
        if (d == orig_digest) {
          skipped.push_back({{"image", stem}, {"prompt_id", pid}, {"version", v}, {"reason", "ProtectedModeViolation"}});
          continue;
        }
        const ReplayKey km{d, pid, in.remote_backend_id};
        if (!replay.contains(km)) {
          skipped.push_back({{"image", stem}, {"prompt_id", pid}, {"version", v}, {"reason", "ReplayMiss"}});
          continue;
        }
        const std::string r_mod = replay.lookup(km);
        const Metrics m = metrics(r_orig, r_mod, in.taxonomy);
        samples.push_back({{"image", stem}, {"prompt_id", pid}, {"version", v},
                           {"leakage", m.leakage_mod}, {"privacy_gain", m.privacy_gain},
                           {"utility", m.utility}, {"utility_impact", m.utility_impact},
                           {"change_count", m.change_count}, {"response", r_mod}});
      }
    }
  }

  const auto column = [&](const std::string& version, const std::string& prompt, const char* field) {
    std::vector<double> out;
    for (const auto& s : samples) {
      if (s["version"] == version && (prompt.empty() || s["prompt_id"] == prompt)) out.push_back(s[field].get<double>());
    }
    return out;
  };
  const auto mean = [](const std::vector<double>& v) -> json {
    if (v.empty()) return nullptr;
    double sum = 0.0;
    for (double x : v) sum += x;
    return sum / double(v.size());
  };

  json techniques = json::object();
  for (const auto& v : in.versions) {
    const auto leak = column(v, "", "leakage");
    techniques[v] = {{"samples", leak.size()},
                     {"mean_similarity", mean(column(v, "", "utility"))},
                     {"leakage", histogram(leak, in.leakage_edges)},
                     {"utility_impact", histogram(column(v, "", "utility_impact"), in.ui_edges)}};
  }
  json per_question = json::array();
  for (const auto& p : in.prompts) {
    json row = {{"prompt_id", p["id"]}};
    for (const auto& v : in.versions) {
      const auto gains = column(v, p["id"], "privacy_gain");
      row[v] = {{"samples", gains.size()},
                {"mean_privacy_gain", mean(gains)},
                {"mean_utility_impact", mean(column(v, p["id"], "utility_impact"))}};
    }
    per_question.push_back(row);
  }
  json per_image = json::object();
  for (const auto& stem : images) {
    std::size_t n = 0;
    for (const auto& s : samples) n += s["image"] == stem ? 1 : 0;
    per_image[stem] = n;
  }
  const auto orig_leak = column("original", "", "leakage");
  return {{"schema", "ppa-eval-report/1"},
          {"config",
           {{"prompts", in.prompts},
            {"techniques", in.versions},
            {"leakage_edges", in.leakage_edges},
            {"ui_edges", in.ui_edges}}},
          {"images", images},
          {"responses_per_image", per_image},
          {"totals", {{"images", images.size()}, {"samples", samples.size()}, {"skipped", skipped.size()}}},
          {"techniques", techniques},
          {"original", {{"samples", orig_leak.size()}, {"leakage", histogram(orig_leak, in.leakage_edges)}}},
          {"per_question", per_question},
          {"samples", samples},
          {"skipped", skipped}};
}

}  // namespace ppa::reference
