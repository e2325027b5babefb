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


#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "ppa/analysis.hpp"
#include "ppa/error.hpp"
#include "ppa/io.hpp"
#include "ppa/reference.hpp"
#include "ppa/taxonomy.hpp"
#include "ppa/text.hpp"

namespace ppa {
namespace {

ModelResponse resp(std::string text) { return {std::move(text), "b", "p", std::string(64, 'a'), 0.0}; }

class LeakageTest : public ::testing::Test {
 protected:
  Taxonomy taxonomy_ = default_taxonomy();
  LeakageLexicon lexicon_{taxonomy_};
};

TEST_F(LeakageTest, NoHitsIsZero) {
  EXPECT_EQ(leakage_score("The sky is blue and the grass is green.", lexicon_), 0.0);
  EXPECT_EQ(leakage_score("", lexicon_), 0.0);
}

TEST_F(LeakageTest, TwoOfEightCategoriesIsQuarter) {
  const std::string text = "A teacher walking through Paris.";
  EXPECT_EQ(reference::leakage(text, taxonomy_), 0.25);
  EXPECT_EQ(leakage_score(text, lexicon_), 0.25);
}

TEST_F(LeakageTest, EveryCategoryIsOne) {
  std::string text;
  for (const auto& c : taxonomy_.categories()) text += c.terms.front() + ", ";
  EXPECT_EQ(leakage_score(text, lexicon_), 1.0);
}

TEST_F(LeakageTest, WordBoundariesAndCase) {
  EXPECT_EQ(leakage_score("a careful comparison", lexicon_), 0.0);
  EXPECT_GT(leakage_score("PARIS at night", lexicon_), 0.0);
  EXPECT_GT(leakage_score("She is 34 years old", lexicon_), 0.0);
  EXPECT_EQ(leakage_score("model x34 years oldish", lexicon_), 0.0);
  EXPECT_GT(leakage_score("zip 75001", lexicon_), 0.0);
  EXPECT_EQ(leakage_score("serial 750012", lexicon_), 0.0);
}

TEST_F(LeakageTest, WeightsApply) {
  Taxonomy t({{"a", "A", {"alpha"}, {}, 3.0}, {"b", "B", {"beta"}, {}, 1.0}});
  LeakageLexicon lex(t);
  EXPECT_EQ(leakage_score("alpha", lex), 0.75);
  EXPECT_EQ(leakage_score("beta", lex), 0.25);
  EXPECT_EQ(leakage_score("alpha beta", lex), 1.0);
}

TEST(LexiconTest, EmptyLexiconOrZeroWeightIsConfigError) {
  EXPECT_THROW(LeakageLexicon(Taxonomy({{"a", "A", {}, {}, 1.0}})), Error);
  EXPECT_THROW(LeakageLexicon(Taxonomy({{"a", "A", {"x"}, {}, 0.0}})), Error);
  EXPECT_THROW(LeakageLexicon(Taxonomy({{"a", "A", {}, {"("}, 1.0}})), Error);
}

std::string random_text(std::mt19937_64& rng, const std::vector<std::string>& vocab, int words) {
  std::string s;
  for (int i = 0; i < words; ++i) {
    if (i) s += rng() % 7 == 0 ? ", " : " ";
    s += vocab[rng() % vocab.size()];
  }
  return s;
}

std::vector<std::string> mixed_vocab(const Taxonomy& t) {
  std::vector<std::string> v = {"the", "a", "photo", "shows", "blue", "sky", "tree", "near", "Comparison",
                                "34", "years", "old", "late", "30s", "75001", "x1"};
  for (const auto& c : t.categories()) {
    for (const auto& term : c.terms) v.push_back(term);
  }
  return v;
}

// Properties: range, monotonicity under appending text.
TEST_F(LeakageTest, RangeAndMonotonicity) {
  std::mt19937_64 rng(31);
  const auto vocab = mixed_vocab(taxonomy_);
  for (int i = 0; i < 300; ++i) {
    const std::string a = random_text(rng, vocab, static_cast<int>(rng() % 6));
    const std::string b = random_text(rng, vocab, static_cast<int>(rng() % 6));
    const double sa = leakage_score(a, lexicon_);
    EXPECT_GE(sa, 0.0);
    EXPECT_LE(sa, 1.0);
    EXPECT_GE(leakage_score(a + " " + b, lexicon_), sa);
  }
}

TEST(MetricTest, PrivacyGainExamplesAndAntisymmetry) {
  EXPECT_EQ(privacy_gain(0.5, 0.5), 0.0);
  EXPECT_EQ(privacy_gain(1.0, 0.0), 1.0);
  EXPECT_LT(privacy_gain(0.25, 0.5), 0.0);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const double a = u(rng);
    const double b = u(rng);
    EXPECT_EQ(privacy_gain(a, b), -privacy_gain(b, a));
  }
  EXPECT_THROW(privacy_gain(1.5, 0.0), Error);
  EXPECT_THROW(privacy_gain(0.0, -0.1), Error);
}

TEST(MetricTest, UtilityImpactExamples) {
  EXPECT_EQ(utility_impact(1.0), 0.0);
  EXPECT_EQ(utility_impact(0.0), 1.0);
  EXPECT_NEAR(utility_impact(0.6), 0.4, 1e-15);
  EXPECT_EQ(utility_impact(-1.0), 2.0);
  EXPECT_THROW(utility_impact(1.0001), Error);
}

TEST(EmbeddingTest, DeterministicBagOfWords) {
  const HashedTermEmbedder e;
  EXPECT_EQ(embed(e, "hello world"), embed(e, "hello world"));
  EXPECT_EQ(embed(e, "hello world"), embed(e, "world hello"));
  EXPECT_EQ(embed(e, "Hello, WORLD!"), embed(e, "world hello"));
  const auto z = embed(e, "");
  EXPECT_EQ(z.size(), e.dimension());
  EXPECT_TRUE(std::all_of(z.begin(), z.end(), [](double x) { return x == 0.0; }));
}

TEST(EmbeddingTest, MatchesTokenMultisetOracle) {
  std::mt19937_64 rng(8);
  const auto vocab = mixed_vocab(default_taxonomy());
  for (std::size_t dim : {std::size_t{7}, std::size_t{64}, HashedTermEmbedder::kDefaultDimension}) {
    const HashedTermEmbedder e(dim);
    for (int i = 0; i < 50; ++i) {
      const std::string t = random_text(rng, vocab, static_cast<int>(rng() % 15));
      EXPECT_EQ(embed(e, t), reference::embed(t, dim));
    }
  }
}

class WrongDimension : public EmbeddingBackend {
 public:
  std::string id() const override { return "wrong"; }
  std::size_t dimension() const override { return 8; }
  std::vector<double> embed(std::string_view) const override { return std::vector<double>(3, 1.0); }
};

TEST(EmbeddingTest, WrongDimensionIsDetected) {
  try {
    embed(WrongDimension(), "x");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
}

TEST(CosineTest, Conventions) {
  const std::vector<double> v = {0.3, -1.2, 4.0, 0.01, 2.5};
  EXPECT_EQ(cosine(v, v), 1.0);
  EXPECT_EQ(cosine(std::vector<double>{1, 0}, std::vector<double>{0, 1}), 0.0);
  EXPECT_EQ(cosine(std::vector<double>{0, 0}, std::vector<double>{0, 1}), 0.0);
  EXPECT_EQ(cosine(std::vector<double>{0, 0}, std::vector<double>{0, 0}), 0.0);
  EXPECT_NEAR(cosine(std::vector<double>{1, 2}, std::vector<double>{-1, -2}), -1.0, 1e-15);
  EXPECT_THROW(cosine(std::vector<double>{1, 2}, std::vector<double>{1, 2, 3}), Error);
}

long double direct_cosine(const std::vector<double>& a, const std::vector<double>& b) {
  long double dot = 0;
  long double na = 0;
  long double nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<long double>(a[i]) * b[i];
    na += static_cast<long double>(a[i]) * a[i];
    nb += static_cast<long double>(b[i]) * b[i];
  }
  return dot / std::sqrt(na * nb);
}

TEST(CosineTest, RandomFiveDimPairsMatchDirectFormula) {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> a(5);
    std::vector<double> b(5);
    for (auto& x : a) x = n(rng);
    for (auto& x : b) x = n(rng);
    EXPECT_NEAR(cosine(a, b), static_cast<double>(direct_cosine(a, b)), 1e-12);
    EXPECT_EQ(cosine(a, b), cosine(b, a));
    std::vector<double> scaled = a;
    const double alpha = 0.1 + std::abs(n(rng)) * 10.0;
    for (auto& x : scaled) x *= alpha;
    EXPECT_NEAR(cosine(scaled, b), cosine(a, b), 1e-12);
  }
}

TEST(EditDistanceTest, SubstitutionAndAxioms) {
  EXPECT_EQ(text::edit_distance(text::tokenize("the cat sat on the mat"), text::tokenize("the dog sat on the mat")), 1u);
  std::mt19937_64 rng(17);
  const std::vector<std::string> vocab = {"a", "b", "c", "d"};
  const auto rand_words = [&] {
    std::vector<std::string> w(rng() % 7);
    for (auto& x : w) x = vocab[rng() % 4];
    return w;
  };
  for (int i = 0; i < 300; ++i) {
    const auto x = rand_words();
    const auto y = rand_words();
    const auto z = rand_words();
    EXPECT_EQ(text::edit_distance(x, x), 0u);
    EXPECT_EQ(text::edit_distance(x, y), text::edit_distance(y, x));
    EXPECT_LE(text::edit_distance(x, z), text::edit_distance(x, y) + text::edit_distance(y, z));
    EXPECT_EQ(text::edit_distance(x, y), reference::edit_distance(x, y));
    EXPECT_EQ(text::edit_distance(x, y) == 0, x == y);
  }
}

TEST(TokenizeTest, FoldsAsciiAndKeepsHighBytes) {
  EXPECT_EQ(text::tokenize("Hello, World! 42x"), (std::vector<std::string>{"hello", "world", "42x"}));
  EXPECT_EQ(text::tokenize("Caf\xc3\xa9 au lait"), (std::vector<std::string>{"caf\xc3\xa9", "au", "lait"}));
  EXPECT_TRUE(text::tokenize(" ,.; ").empty());
  EXPECT_EQ(text::tokenize("caf\xc3\xa9"), reference::words("caf\xc3\xa9"));
}

TEST(PromptDifferenceTest, Examples) {
  const HashedTermEmbedder e;
  const auto same = prompt_difference(resp("a red car"), resp("a red car"), e);
  EXPECT_EQ(same.similarity, 1.0);
  EXPECT_EQ(same.change_count, 0);
  const auto disjoint = prompt_difference(resp("alpha beta"), resp("gamma delta"), e);
  EXPECT_EQ(disjoint.similarity, 0.0);
  EXPECT_EQ(disjoint.change_count, 2);
}

TEST(AnalyzeCandidateTest, SelfComparisonAndEmptyModified) {
  const Taxonomy t = default_taxonomy();
  const LeakageLexicon lex(t);
  const HashedTermEmbedder e;
  const auto r = resp("A teacher in Paris, probably married.");
  const MetricSet self = analyze_candidate(r, r, lex, e);
  EXPECT_EQ(self.privacy_gain, 0.0);
  EXPECT_EQ(self.utility, 1.0);
  EXPECT_EQ(self.utility_impact, 0.0);
  EXPECT_EQ(self.change_count, 0);
  EXPECT_TRUE(self.identities_hold());
  const MetricSet empty = analyze_candidate(r, resp(""), lex, e);
  EXPECT_EQ(empty.utility, 0.0);
  EXPECT_EQ(empty.utility_impact, 1.0);
  EXPECT_EQ(analyze_candidate(r, resp(""), lex, e), empty);
}

TEST(AnalyzeCandidateTest, MatchesCheckedInGoldenPairs) {
  const auto golden = nlohmann::json::parse(
      io::read_file(std::filesystem::path(PPA_FIXTURE_DIR) / "golden" / "metrics.json"));
  const Taxonomy t = default_taxonomy();
  const LeakageLexicon lex(t);
  const HashedTermEmbedder e;
  ASSERT_GE(golden["pairs"].size(), 40u);
  for (const auto& p : golden["pairs"]) {
    const MetricSet m = analyze_candidate(resp(p["r_orig"]), resp(p["r_mod"]), lex, e);
    EXPECT_EQ(m.leakage_orig, p["leakage_orig"].get<double>());
    EXPECT_EQ(m.leakage_mod, p["leakage_mod"].get<double>());
    EXPECT_EQ(m.privacy_gain, p["privacy_gain"].get<double>());
    EXPECT_EQ(m.utility, p["utility"].get<double>());
    EXPECT_EQ(m.utility_impact, p["utility_impact"].get<double>());
    EXPECT_EQ(m.change_count, p["change_count"].get<std::int64_t>());
  }
}

}  // namespace
}  // namespace ppa
