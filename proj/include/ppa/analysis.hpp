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
#include <cmath>
#include <cstdint>
#include <memory>
#include <regex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ppa/core.hpp"
#include "ppa/error.hpp"
#include "ppa/raster.hpp"
#include "ppa/taxonomy.hpp"
#include "ppa/text.hpp"

namespace ppa {

// Compiled form of a taxonomy's terms and patterns.
//
// P(R) = sum_c w_c * s_c / sum_c w_c, where s_c is 1 when any term or
// pattern of category c occurs in the case-folded response on word
// boundaries. Terms are matched as whole token sequences, so "paris" never
// fires inside "comparison".
class LeakageLexicon {
 public:
  explicit LeakageLexicon(const Taxonomy& taxonomy) {
    double total = 0.0;
    for (const auto& c : taxonomy.categories()) {
      Category cat;
      cat.id = c.id;
      cat.weight = c.weight;
      total += c.weight;
      for (const auto& term : c.terms) {
        auto tokens = text::tokenize(term);
        if (tokens.empty()) continue;
        const std::size_t term_index = cat_terms_.size();
        cat_terms_.push_back({categories_.size(), std::move(tokens)});
        by_first_token_[cat_terms_.back().tokens.front()].push_back(term_index);
        ++cat.term_count;
      }
      for (const auto& p : c.patterns) {
        try {
          cat.patterns.emplace_back("(?:^|[^a-z0-9])(?:" + p + ")(?![a-z0-9])", std::regex::ECMAScript);
        } catch (const std::regex_error& e) {
          fail(ErrorCode::ConfigError, "category '" + c.id + "': bad pattern '" + p + "': " + e.what());
        }
      }
      if (cat.term_count == 0 && cat.patterns.empty()) {
        fail(ErrorCode::ConfigError, "category '" + c.id + "' has an empty lexicon");
      }
      categories_.push_back(std::move(cat));
    }
    if (!(total > 0.0)) fail(ErrorCode::ConfigError, "lexicon total weight must be positive");
  }

  std::size_t size() const noexcept { return categories_.size(); }

  // Per-category indicator s_c, in taxonomy order.
  std::vector<bool> hits(std::string_view response) const {
    std::vector<bool> hit(categories_.size(), false);
    const auto tokens = text::tokenize(response);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      auto it = by_first_token_.find(tokens[i]);
      if (it == by_first_token_.end()) continue;
      for (std::size_t ti : it->second) {
        const auto& t = cat_terms_[ti];
        if (hit[t.category] || i + t.tokens.size() > tokens.size()) continue;
        if (std::equal(t.tokens.begin(), t.tokens.end(), tokens.begin() + static_cast<std::ptrdiff_t>(i))) {
          hit[t.category] = true;
        }
      }
    }
    const std::string folded = text::fold_case(response);
    for (std::size_t c = 0; c < categories_.size(); ++c) {
      if (hit[c]) continue;
      for (const auto& re : categories_[c].patterns) {
        if (std::regex_search(folded, re)) {
          hit[c] = true;
          break;
        }
      }
    }
    return hit;
  }

  double score(std::string_view response) const {
    const auto hit = hits(response);
    double num = 0.0;
    double den = 0.0;
    for (std::size_t c = 0; c < categories_.size(); ++c) {
      if (hit[c]) num += categories_[c].weight;
      den += categories_[c].weight;
    }
    return num / den;
  }

 private:
  struct Category {
    std::string id;
    double weight = 1.0;
    std::size_t term_count = 0;
    std::vector<std::regex> patterns;
  };
  struct Term {
    std::size_t category;
    std::vector<std::string> tokens;
  };
  std::vector<Category> categories_;
  std::vector<Term> cat_terms_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_first_token_;
};

inline double leakage_score(std::string_view response, const LeakageLexicon& lexicon) { return lexicon.score(response); }

inline double privacy_gain(double p_orig, double p_mod) {
  if (!(p_orig >= 0.0 && p_orig <= 1.0) || !(p_mod >= 0.0 && p_mod <= 1.0)) {
    fail(ErrorCode::DomainError, "leakage scores must lie in [0,1]");
  }
  return p_orig - p_mod;
}

inline double utility_impact(double u) {
  if (!(u >= -1.0 && u <= 1.0)) fail(ErrorCode::DomainError, "utility must lie in [-1,1]");
  return 1.0 - u;
}

class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;
  virtual std::string id() const = 0;
  virtual std::size_t dimension() const = 0;
  virtual std::vector<double> embed(std::string_view text) const = 0;
};

// Bag-of-words embedder: token counts hashed into `dimension` buckets with
// FNV-1a (64 bit) modulo the dimension, then L2-normalized. Token-free input
// yields the zero vector.
class HashedTermEmbedder : public EmbeddingBackend {
 public:
  static constexpr std::size_t kDefaultDimension = 16384;

  explicit HashedTermEmbedder(std::size_t dimension = kDefaultDimension) : dimension_(dimension) {
    if (dimension_ == 0) fail(ErrorCode::ConfigError, "embedding dimension must be positive");
  }

  std::string id() const override { return "hashed-tf-" + std::to_string(dimension_); }
  std::size_t dimension() const override { return dimension_; }

  std::vector<double> embed(std::string_view input) const override {
    std::vector<double> v(dimension_, 0.0);
    for (const auto& tok : text::tokenize(input)) v[fnv1a64(tok) % dimension_] += 1.0;
    double sq = 0.0;
    for (double x : v) sq += x * x;
    if (sq == 0.0) return v;
    const double norm = std::sqrt(sq);
    for (double& x : v) x /= norm;
    return v;
  }

 private:
  std::size_t dimension_;
};

inline std::vector<double> embed(const EmbeddingBackend& backend, std::string_view text) {
  auto v = backend.embed(text);
  if (v.size() != backend.dimension()) {
    fail(ErrorCode::DimensionMismatch, "backend " + backend.id() + " returned a vector of the wrong dimension");
  }
  return v;
}

// dot(a,b) / (|a| |b|), clamped to [-1,1]. Zero vectors give 0.0, identical
// nonzero vectors give exactly 1.0.
inline double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    fail(ErrorCode::DimensionMismatch, std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  bool same = true;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
    same = same && a[i] == b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  if (same) return 1.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

struct PromptDifference {
  double similarity = 1.0;
  std::int64_t change_count = 0;
};

inline PromptDifference prompt_difference(const ModelResponse& r_orig, const ModelResponse& r_mod,
                                          const EmbeddingBackend& backend) {
  const auto a = embed(backend, r_orig.text);
  const auto b = embed(backend, r_mod.text);
  return {cosine(a, b),
          static_cast<std::int64_t>(text::edit_distance(text::tokenize(r_orig.text), text::tokenize(r_mod.text)))};
}

inline MetricSet analyze_candidate(const ModelResponse& r_orig, const ModelResponse& r_mod,
                                   const LeakageLexicon& lexicon, const EmbeddingBackend& backend) {
  MetricSet m;
  m.leakage_orig = leakage_score(r_orig.text, lexicon);
  m.leakage_mod = leakage_score(r_mod.text, lexicon);
  m.privacy_gain = privacy_gain(m.leakage_orig, m.leakage_mod);
  const auto diff = prompt_difference(r_orig, r_mod, backend);
  m.utility = diff.similarity;
  m.utility_impact = utility_impact(m.utility);
  m.change_count = diff.change_count;
  return m;
}

}  // namespace ppa
