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


// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails.

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "ppa/analysis.hpp"
#include "ppa/core_json.hpp"
#include "ppa/eval.hpp"
#include "ppa/obfuscation.hpp"
#include "ppa/reference.hpp"
#include "ppa/service.hpp"
#include "ppa/synth.hpp"
#include "service_harness.hpp"
#include "test_support.hpp"

namespace {

using nlohmann::json;
using ppa::testing::TempDir;

// Thrown by check() to stop a criterion at its first violation.
struct CriterionFailure {
  std::string message;
};

void check(bool ok, const std::string& what) {
  if (!ok) throw CriterionFailure{what};
}

struct Outcome {
  std::string name;
  bool pass;
  std::string detail;
  double seconds;
};

std::vector<Outcome> g_outcomes;

void criterion(const std::string& name, double limit_s, const std::function<std::string()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o{name, true, "", 0.0};
  try {
    o.detail = body();
  } catch (const CriterionFailure& f) {
    o.pass = false;
    o.detail = f.message;
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("unexpected exception: ") + e.what();
  }
  o.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (o.pass && limit_s > 0 && o.seconds >= limit_s) {
    o.pass = false;
    o.detail += "; exceeded time limit of " + std::to_string(limit_s) + " s";
  }
  char line[512];
  std::snprintf(line, sizeof line, "%s %-22s %7.3f s  %s", o.pass ? "PASS" : "FAIL", name.c_str(), o.seconds,
                o.detail.c_str());
  std::cout << line << std::endl;
  g_outcomes.push_back(o);
}

// ---------------------------------------------------------------------------

std::string metric_identity() {
  std::mt19937_64 rng(1001);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    // Mix continuous draws with the discrete values real leakage scores take.
    const double p_orig = i % 3 == 0 ? static_cast<double>(rng() % 9) / 8.0 : unit(rng);
    const double p_mod = i % 5 == 0 ? static_cast<double>(rng() % 9) / 8.0 : unit(rng);
    const double u = i % 7 == 0 ? 1.0 : sym(rng);
    ppa::MetricSet m;
    m.leakage_orig = p_orig;
    m.leakage_mod = p_mod;
    m.privacy_gain = ppa::privacy_gain(p_orig, p_mod);
    m.utility = u;
    m.utility_impact = ppa::utility_impact(u);
    const auto stored = json::parse(json(m).dump()).get<ppa::MetricSet>();
    for (const ppa::MetricSet* s : std::initializer_list<const ppa::MetricSet*>{&m, &stored}) {
      check(s->privacy_gain == s->leakage_orig - s->leakage_mod, "G_p identity broken at triple " + std::to_string(i));
      check(s->utility_impact == 1.0 - s->utility, "U_i identity broken at triple " + std::to_string(i));
      check(s->privacy_gain >= -1.0 && s->privacy_gain <= 1.0, "G_p outside [-1,1]");
      check(s->utility_impact >= 0.0 && s->utility_impact <= 2.0, "U_i outside [0,2]");
      check(s->identities_hold(), "identities_hold() false");
    }
    check(stored == m, "JSON round trip changed a metric");
  }
  check(ppa::utility_impact(1.0) == 0.0, "U_i(1) != 0");
  return "1000 triples";
}

std::string random_response(std::mt19937_64& rng, const std::vector<std::string>& vocab) {
  static const char* kSep[] = {" ", " ", " ", ", ", ". ", "; ", " - ", "\n", "! "};
  std::string s;
  const int n = 3 + static_cast<int>(rng() % 30);
  for (int i = 0; i < n; ++i) {
    if (i) s += kSep[rng() % 9];
    std::string w = vocab[rng() % vocab.size()];
    if (rng() % 4 == 0) {
      for (char& c : w) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    } else if (rng() % 4 == 0 && !w.empty()) {
      w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
    }
    s += w;
  }
  return s;
}

std::vector<std::string> response_vocab(const ppa::Taxonomy& t) {
  std::vector<std::string> v = {"the",     "a",       "photo",  "shows",   "sky",      "blue",     "near",
                                "comparison", "cityscape", "woman's", "xparis", "parisian", "34",   "years",
                                "old",     "1 year old", "107 years old", "mid 40s", "late 90s", "75001",
                                "75001-1234", "750011", "caf\xc3\xa9", "na\xc3\xafve", "new", "york"};
  for (const auto& c : t.categories()) {
    for (const auto& term : c.terms) v.push_back(term);
  }
  return v;
}

std::string leakage_oracle() {
  const ppa::Taxonomy taxonomy = ppa::default_taxonomy();
  const ppa::LeakageLexicon lexicon(taxonomy);
  const auto vocab = response_vocab(taxonomy);
  std::mt19937_64 rng(2002);
  std::set<double> distinct;
  for (int i = 0; i < 200; ++i) {
    const std::string r = random_response(rng, vocab);
    const double got = ppa::leakage_score(r, lexicon);
    const double want = ppa::reference::leakage(r, taxonomy);
    check(got == want, "mismatch on response " + std::to_string(i) + ": '" + r + "' got " + std::to_string(got) +
                           " want " + std::to_string(want));
    distinct.insert(got);
  }
  check(distinct.size() >= 4, "synthetic corpus does not exercise enough score levels");
  return "200 responses, " + std::to_string(distinct.size()) + " distinct scores";
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
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::string cosine_oracle() {
  std::mt19937_64 rng(3003);
  std::normal_distribution<double> n(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 500; ++i) {
    const std::size_t dim = 2 + rng() % 63;
    std::vector<double> a(dim);
    std::vector<double> b(dim);
    for (auto& x : a) x = n(rng);
    for (auto& x : b) x = n(rng);
    const double err = std::abs(ppa::cosine(a, b) - static_cast<double>(direct_cosine(a, b)));
    worst = std::max(worst, err);
    check(err <= 1e-12, "pair " + std::to_string(i) + " differs by " + std::to_string(err));
  }
  const ppa::Taxonomy taxonomy = ppa::default_taxonomy();
  const auto vocab = response_vocab(taxonomy);
  const ppa::HashedTermEmbedder embedder;
  for (int i = 0; i < 200; ++i) {
    const std::string t = random_response(rng, vocab);
    check(ppa::embed(embedder, t) == ppa::reference::embed(t), "embedding differs from token-multiset oracle");
  }
  const std::vector<double> zero(16, 0.0);
  std::vector<double> v(16, 0.0);
  v[3] = 2.0;
  check(ppa::cosine(zero, v) == 0.0 && ppa::cosine(v, zero) == 0.0 && ppa::cosine(zero, zero) == 0.0,
        "zero-vector convention");
  const auto empty = ppa::embed(embedder, "");
  check(std::all_of(empty.begin(), empty.end(), [](double x) { return x == 0.0; }), "empty text must embed to zero");
  char buf[64];
  std::snprintf(buf, sizeof buf, "500 pairs, max error %.2e; 200 embeddings exact", worst);
  return buf;
}

std::string obfuscation_region() {
  std::mt19937_64 rng(4004);
  const ppa::Taxonomy taxonomy = ppa::default_taxonomy();
  int boxes = 0;
  for (int img = 0; img < 10; ++img) {
    const int w = 24 + static_cast<int>(rng() % 57);
    const int h = 24 + static_cast<int>(rng() % 41);
    const ppa::Raster r = img % 4 == 3 ? ppa::Raster(w, h, ppa::Rgb{90, 160, 30}) : ppa::testing::random_raster(rng, w, h);
    for (int k = 0; k < 6; ++k, ++boxes) {
      const int bw = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(w));
      const int bh = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(h));
      const ppa::BoundingBox b{static_cast<int>(rng() % static_cast<std::uint64_t>(w - bw + 1)),
                               static_cast<int>(rng() % static_cast<std::uint64_t>(h - bh + 1)), bw, bh};
      const auto& cat = taxonomy.categories()[rng() % taxonomy.size()];
      const std::string where = "image " + std::to_string(img) + " box " + std::to_string(k);

      const ppa::Raster masked = ppa::mask_region(r, b, cat);
      const ppa::Rgb fill = ppa::category_fill_color(cat.id);
      for (int y = b.y; y < b.y + b.h; ++y) {
        for (int x = b.x; x < b.x + b.w; ++x) check(masked.at(x, y) == fill, where + ": mask interior not constant");
      }
      check(ppa::mask_region(masked, b, cat) == masked, where + ": mask not idempotent");

      const ppa::Raster blurred = ppa::blur_region(r, b);
      check(blurred == ppa::reference::blur(r, b), where + ": blur differs from direct convolution");

      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          if (b.contains(x, y)) continue;
          check(masked.at(x, y) == r.at(x, y), where + ": mask touched outside its box");
          check(blurred.at(x, y) == r.at(x, y), where + ": blur touched outside its box");
        }
      }
    }
  }
  return "10 images, " + std::to_string(boxes) + " boxes";
}

std::string candidate_count_law() {
  TempDir dir;
  auto parts = ppa::testing::make_parts();
  auto service = ppa::testing::make_service(dir.path(), parts);
  std::mt19937_64 rng(5005);
  int sessions = 0;
  for (int n = 0; n <= 10; ++n) {
    for (int rep = 0; rep < 3; ++rep, ++sessions) {
      const int w = 30 + static_cast<int>(rng() % 40);
      const int h = 30 + static_cast<int>(rng() % 40);
      const auto raster = ppa::testing::random_raster(rng, w, h);
      auto s = service->create_session(ppa::encode_png(raster), "What is in this picture?",
                                       ppa::testing::random_sidecar(rng, n, w, h));
      service->run_detection(s.session_id);
      s = service->run_modification(s.session_id);
      check(s.detected.size() == static_cast<std::size_t>(n), "detected count");
      check(s.candidates.size() == static_cast<std::size_t>(2 * n),
            "n_sen=" + std::to_string(n) + " gave " + std::to_string(s.candidates.size()) + " candidates");
      std::set<std::string> ids;
      for (const auto& c : s.candidates) ids.insert(c.candidate_id);
      check(ids.size() == s.candidates.size(), "duplicate candidate ids");
      check(!ppa::check_session_invariants(service->get(s.session_id)), "invariants after reload");
    }
  }
  return std::to_string(sessions) + " sessions, n_sen 0..10";
}

std::string zero_leak() {
  TempDir dir;
  auto audit = std::make_shared<ppa::AuditLog>(dir / "audit.ndjson");
  auto parts = ppa::testing::make_parts(nullptr, audit);
  auto service = ppa::testing::make_service(dir / "store", parts);
  std::mt19937_64 rng(6006);
  std::set<std::string> originals;
  std::size_t refused = 0;
  for (int i = 0; i < 50; ++i) {
    const int w = 24 + static_cast<int>(rng() % 40);
    const int h = 24 + static_cast<int>(rng() % 40);
    // Every fifth image is uniform, so its blur candidates equal the original.
    const auto raster = i % 5 == 4 ? ppa::Raster(w, h, ppa::Rgb{40, 40, 200}) : ppa::testing::random_raster(rng, w, h);
    originals.insert(raster.digest());
    auto s = service->create_session(ppa::encode_png(raster), "Where is this image located?",
                                     ppa::testing::random_sidecar(rng, 1 + static_cast<int>(rng() % 4), w, h));
    service->run_detection(s.session_id);
    service->run_modification(s.session_id);
    s = service->run_analysis(s.session_id);
    refused += s.failures.size();
    const auto ranked = ppa::PpaService::rank(s, ppa::RankingKey::composite(0.5));
    check(!ranked.empty(), "session without usable candidates");
    service->select_and_submit(s.session_id, ranked.front().candidate_id);
  }
  const auto sent = parts.transport->sent_digests();
  for (const auto& d : sent) check(!originals.contains(d), "original digest " + d + " reached the transport");

  std::multiset<std::string> audited_remote;
  for (const auto& r : ppa::AuditLog::read_file(dir / "audit.ndjson")) {
    if (r.destination == parts.remote->destination()) audited_remote.insert(r.image_digest);
    if (r.mode == ppa::QueryMode::Protected) check(!originals.contains(r.image_digest), "Protected audit of original");
  }
  check(audited_remote == std::multiset<std::string>(sent.begin(), sent.end()), "audit log and transport sends differ");
  check(refused > 0, "guard never exercised");
  return "50 sessions, " + std::to_string(sent.size()) + " sends, " + std::to_string(refused) +
         " identical-to-original candidates refused";
}

bool fractions_sum_to_one(const json& h) {
  if (h["degenerate"].get<bool>()) return true;
  double s = 0.0;
  for (const auto& f : h["fractions"]) s += f.get<double>();
  return std::abs(s - 1.0) <= 1e-9;
}

std::string protocol_shape() {
  TempDir dir;
  ppa::eval::SynthOptions opt;  // 20 images, seed 7, the eight default prompts
  ppa::eval::make_synthetic_corpus(dir.path(), opt);

  ppa::eval::EvalConfig cfg;
  cfg.corpus = dir / "corpus";
  cfg.prompts = ppa::eval::load_prompts(dir / "prompts.json");
  cfg.workers = 4;
  auto replay = ppa::ReplayStore::load(dir / "replay");
  ppa::eval::EvalBackends be;
  be.local = be.remote = std::make_shared<ppa::ReplayBackend>("replay", replay);
  const auto report = ppa::eval::run_eval(cfg, be);
  const json j = ppa::eval::to_json(report);

  check(report.images.size() == 20, "expected 20 images");
  check(cfg.prompts.size() == 8, "expected 8 prompts");
  for (const auto& [img, n] : report.responses_per_image) check(n == 24, img + " has " + std::to_string(n) + " responses");
  check(report.skipped.empty(), "unexpected skipped samples");

  check(fractions_sum_to_one(j["original"]["leakage"]), "original leakage fractions");
  for (const auto& [name, t] : j["techniques"].items()) {
    check(fractions_sum_to_one(t["leakage"]), name + " leakage fractions");
    check(fractions_sum_to_one(t["utility_impact"]), name + " utility-impact fractions");
  }

  // Golden report regenerated by the CLI's oracle path (reference code only).
  const auto golden_dir = dir / "golden";
  const std::string cmd = std::string("\"") + PPA_EVAL_BIN + "\" oracle --out \"" + golden_dir.string() + "\" > /dev/null";
  check(std::system(cmd.c_str()) == 0, "ppa-eval oracle failed");
  const json regenerated = json::parse(ppa::io::read_file(golden_dir / "golden_report.json"));
  check(j == regenerated, "report differs from the regenerated golden report");

  const json frozen = json::parse(ppa::io::read_file(std::filesystem::path(PPA_FIXTURE_DIR) / "golden" / "report.json"));
  check(j == frozen, "report differs from the checked-in golden report");

  char buf[160];
  std::snprintf(buf, sizeof buf, "20 images x 8 prompts x 3 versions = %zu samples; blur sim %.3f, mask sim %.3f",
                report.samples.size(), *report.by_technique.at("blur").mean_similarity,
                *report.by_technique.at("mask").mean_similarity);
  return buf;
}

// Session document with the fields that legitimately differ between runs
// removed: identifiers, wall-clock timestamps and measured latencies.
json comparable(json doc) {
  doc.erase("session_id");
  doc.erase("created_at");
  doc.erase("updated_at");
  const auto strip = [](json& r) {
    if (r.is_object()) r.erase("elapsed");
  };
  strip(doc["original_response"]);
  strip(doc["final_response"]);
  for (auto& [k, r] : doc["responses"].items()) strip(r);
  return doc;
}

constexpr int kStages = 5;  // create, detect, modify, analyze, select

std::string run_stage(ppa::PpaService& service, int stage, const std::string& id, const ppa::Raster& image,
                      const std::string& sidecar) {
  switch (stage) {
    case 0: return service.create_session(ppa::encode_png(image), "Where is this image located?", sidecar).session_id;
    case 1: service.run_detection(id); break;
    case 2: service.run_modification(id); break;
    case 3: service.run_analysis(id); break;
    case 4: {
      const auto ranked = service.rank(id, ppa::RankingKey::privacy_gain_desc());
      service.select_and_submit(id, ranked.front().candidate_id);
      break;
    }
  }
  return id;
}

int next_stage(const ppa::Session& s) {
  switch (s.state) {
    case ppa::SessionState::Created: return 1;
    case ppa::SessionState::Detected: return 2;
    case ppa::SessionState::Modified: return 3;
    case ppa::SessionState::Analyzed:
    case ppa::SessionState::Selected: return 4;
    case ppa::SessionState::Submitted: return kStages;
  }
  return kStages;
}

// Runs the pipeline in a child process that is SIGKILLed either right after
// `stop_after` completes or after `delay_us` microseconds, then resumes from
// the store with a fresh service instance.
json run_with_kill(const std::filesystem::path& store, const ppa::Raster& image, const std::string& sidecar,
                   int stop_after, int delay_us) {
  std::cout.flush();
  const pid_t pid = fork();
  if (pid == 0) {
    auto parts = ppa::testing::make_parts();
    auto service = ppa::testing::make_service(store, parts);
    std::string id;
    for (int stage = 0; stage < kStages; ++stage) {
      id = run_stage(*service, stage, id, image, sidecar);
      if (stage == stop_after) raise(SIGKILL);
    }
    raise(SIGKILL);
  }
  if (delay_us >= 0) {
    usleep(static_cast<useconds_t>(delay_us));
    kill(pid, SIGKILL);
  }
  int status = 0;
  waitpid(pid, &status, 0);
  check(WIFSIGNALED(status) && WTERMSIG(status) == SIGKILL, "child was not killed");

  auto parts = ppa::testing::make_parts();
  auto service = ppa::testing::make_service(store, parts);
  const auto ids = service->store().list();
  check(ids.size() <= 1, "more than one session in store");
  std::string id;
  int stage = 0;
  if (!ids.empty()) {
    id = ids.front();
    const auto s = service->get(id);
    check(!ppa::check_session_invariants(s), "stored session violates invariants after kill");
    stage = next_stage(s);
  }
  for (; stage < kStages; ++stage) id = run_stage(*service, stage, id, image, sidecar);
  for (const auto& d : parts.transport->sent_digests()) check(d != image.digest(), "original sent after resume");
  return comparable(service->store().load_document(id));
}

std::string crash_safety() {
  std::mt19937_64 rng(8008);
  const ppa::Raster image = ppa::testing::random_raster(rng, 48, 40);
  const std::string sidecar = ppa::testing::random_sidecar(rng, 3, 48, 40);

  TempDir clean;
  json expected;
  {
    auto parts = ppa::testing::make_parts();
    auto service = ppa::testing::make_service(clean.path(), parts);
    std::string id;
    for (int stage = 0; stage < kStages; ++stage) id = run_stage(*service, stage, id, image, sidecar);
    expected = comparable(service->store().load_document(id));
  }
  check(expected["state"] == "Submitted", "uninterrupted run did not finish");

  int runs = 0;
  for (int stop_after = 0; stop_after < kStages; ++stop_after, ++runs) {
    TempDir store;
    check(run_with_kill(store.path(), image, sidecar, stop_after, -1) == expected,
          "resume after stage " + std::to_string(stop_after) + " diverged");
  }
  for (int delay : {0, 200, 1000, 3000, 8000, 15000, 30000, 60000}) {
    TempDir store;
    check(run_with_kill(store.path(), image, sidecar, kStages, delay) == expected,
          "resume after kill at " + std::to_string(delay) + " us diverged");
    ++runs;
  }
  return std::to_string(runs) + " killed runs resumed identically";
}

}  // namespace

int main() {
  criterion("metric-identity", 1.0, metric_identity);
  criterion("leakage-oracle", 5.0, leakage_oracle);
  criterion("cosine-embedding-oracle", 0.0, cosine_oracle);
  criterion("obfuscation-regions", 30.0, obfuscation_region);
  criterion("candidate-count-law", 0.0, candidate_count_law);
  criterion("zero-leak-end-to-end", 0.0, zero_leak);
  criterion("protocol-shape", 60.0, protocol_shape);
  criterion("crash-safety", 0.0, crash_safety);

  std::size_t failed = 0;
  for (const auto& o : g_outcomes) failed += o.pass ? 0 : 1;
  std::cout << (failed == 0 ? "ALL PASS" : "FAILURES") << ": " << g_outcomes.size() - failed << "/" << g_outcomes.size()
            << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
