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
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ppa/core.hpp"
#include "ppa/error.hpp"

namespace ppa {

// PrivacyGainDesc and UtilityImpactAsc are the two user-facing orders.
// Composite(lambda) scores lambda*G_p - (1-lambda)*U_i, highest first.
// Every order breaks ties by candidate_id ascending.
struct RankingKey {
  enum class Kind { PrivacyGainDesc, UtilityImpactAsc, Composite };
  Kind kind = Kind::PrivacyGainDesc;
  double lambda = 1.0;

  static RankingKey privacy_gain_desc() { return {Kind::PrivacyGainDesc, 1.0}; }
  static RankingKey utility_impact_asc() { return {Kind::UtilityImpactAsc, 0.0}; }
  static RankingKey composite(double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) fail(ErrorCode::DomainError, "lambda must lie in [0,1]");
    return {Kind::Composite, lambda};
  }

  // API spelling: gp | ui | composite.
  static RankingKey parse(std::string_view key, std::optional<double> lambda) {
    if (key == "gp") return privacy_gain_desc();
    if (key == "ui") return utility_impact_asc();
    if (key == "composite") return composite(lambda.value_or(0.5));
    fail(ErrorCode::DomainError, "unknown ranking key '" + std::string(key) + "'");
  }

  std::string name() const {
    switch (kind) {
      case Kind::PrivacyGainDesc: return "gp";
      case Kind::UtilityImpactAsc: return "ui";
      case Kind::Composite: return "composite";
    }
    return "gp";
  }

  // Larger is better.
  double score(const MetricSet& m) const {
    switch (kind) {
      case Kind::PrivacyGainDesc: return m.privacy_gain;
      case Kind::UtilityImpactAsc: return -m.utility_impact;
      case Kind::Composite: return lambda * m.privacy_gain - (1.0 - lambda) * m.utility_impact;
    }
    return 0.0;
  }
};

inline std::vector<std::string> rank_candidates(const std::map<std::string, MetricSet>& metrics, const RankingKey& key) {
  std::vector<std::pair<double, std::string>> rows;
  rows.reserve(metrics.size());
  for (const auto& [id, m] : metrics) rows.emplace_back(key.score(m), id);
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<std::string> out;
  out.reserve(rows.size());
  for (auto& r : rows) out.push_back(std::move(r.second));
  return out;
}

}  // namespace ppa
