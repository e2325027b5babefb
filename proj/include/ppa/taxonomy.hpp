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
#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "ppa/core.hpp"
#include "ppa/core_json.hpp"
#include "ppa/error.hpp"
#include "ppa/io.hpp"

namespace ppa {

// Ordered set of sensitive categories with unique ids. Doubles as the
// leakage lexicon: each category carries its terms, patterns and weight.
class Taxonomy {
 public:
  Taxonomy() = default;
  explicit Taxonomy(std::vector<SensitiveCategory> categories) : categories_(std::move(categories)) {
    std::set<std::string> seen;
    for (auto& c : categories_) {
      if (c.id.empty()) fail(ErrorCode::ConfigError, "category id must be non-empty");
      if (!seen.insert(c.id).second) fail(ErrorCode::ConfigError, "duplicate category id '" + c.id + "'");
      if (!(c.weight >= 0.0)) fail(ErrorCode::ConfigError, "negative weight for category '" + c.id + "'");
      for (auto& t : c.terms) {
        std::transform(t.begin(), t.end(), t.begin(), [](unsigned char ch) { return std::tolower(ch); });
      }
      if (c.display_name.empty()) c.display_name = c.id;
    }
  }

  const std::vector<SensitiveCategory>& categories() const noexcept { return categories_; }
  std::size_t size() const noexcept { return categories_.size(); }
  bool empty() const noexcept { return categories_.empty(); }

  const SensitiveCategory* find(std::string_view id) const {
    for (const auto& c : categories_) {
      if (c.id == id) return &c;
    }
    return nullptr;
  }
  bool contains(std::string_view id) const { return find(id) != nullptr; }

  std::vector<std::string> ids() const {
    std::vector<std::string> out;
    for (const auto& c : categories_) out.push_back(c.id);
    return out;
  }

  // Restricts to the given ids, preserving this taxonomy's order.
  Taxonomy subset(const std::vector<std::string>& ids) const {
    std::vector<SensitiveCategory> out;
    for (const auto& c : categories_) {
      if (std::find(ids.begin(), ids.end(), c.id) != ids.end()) out.push_back(c);
    }
    for (const auto& id : ids) {
      if (!contains(id)) fail(ErrorCode::ConfigError, "unknown category '" + id + "'");
    }
    return Taxonomy(std::move(out));
  }

  static Taxonomy from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("categories") || !j.at("categories").is_array()) {
      fail(ErrorCode::ConfigError, "lexicon must be an object with a 'categories' array");
    }
    try {
      return Taxonomy(j.at("categories").get<std::vector<SensitiveCategory>>());
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::ConfigError, std::string("malformed lexicon: ") + e.what());
    }
  }

  static Taxonomy load(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(io::read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
      fail(ErrorCode::ConfigError, path.string() + ": " + e.what());
    }
    return from_json(j);
  }

  nlohmann::json to_json() const { return {{"categories", categories_}}; }

 private:
  std::vector<SensitiveCategory> categories_;
};

// The eight question-aligned categories shipped by default.
inline Taxonomy default_taxonomy() {
  return Taxonomy({
      {"location",
       "Location",
       {"city", "country", "street", "landmark", "address", "neighborhood", "downtown", "skyline", "harbor",
        "cathedral", "monument", "paris", "london", "new york", "tokyo", "rome", "berlin", "sydney", "eiffel tower",
        "big ben", "colosseum", "statue of liberty"},
       {R"(\d{5}(-\d{4})?)"},
       1.0},
      {"occupation",
       "Occupation",
       {"doctor", "nurse", "teacher", "engineer", "chef", "lawyer", "firefighter", "police officer", "pilot",
        "construction worker", "farmer", "accountant", "mechanic", "barista", "uniform", "employee", "profession"},
       {},
       1.0},
      {"marital_status",
       "Marital status",
       {"married", "divorced", "widowed", "wedding ring", "wedding", "husband", "wife", "spouse", "engaged",
        "fiance", "fiancee"},
       {},
       1.0},
      {"gender",
       "Gender",
       {"male", "female", "man", "woman", "men", "women", "boy", "girl", "gentleman", "lady", "masculine",
        "feminine"},
       {},
       1.0},
      {"interests",
       "Interests",
       {"hobby", "hobbies", "hiking", "football", "soccer", "painting", "gaming", "cycling", "photography",
        "fishing", "surfing", "yoga", "guitar", "enthusiast"},
       {},
       1.0},
      {"education",
       "Education",
       {"university", "college", "degree", "graduate", "graduation", "phd", "diploma", "campus", "student",
        "alumni", "bachelor", "master's"},
       {},
       1.0},
      {"age",
       "Age range",
       {"teenager", "elderly", "toddler", "middle-aged", "young adult", "senior citizen", "retiree", "child"},
       {R"(\d{1,3} years? old)", R"((early|mid|late) (20|30|40|50|60|70)s)"},
       1.0},
      {"affiliation",
       "Affiliation",
       {"church", "mosque", "synagogue", "temple", "political party", "union", "team jersey", "religious",
        "volunteer", "organization", "club member"},
       {},
       1.0},
  });
}

}  // namespace ppa
