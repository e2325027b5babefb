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


// ppa-eval: batch evaluation over an image corpus, plus golden-fixture
// regeneration through the reference implementations.
//
//   ppa-eval run --corpus DIR --prompts FILE --backend CFG --out DIR
//                [--bins-leakage N|e0,e1,...] [--bins-ui N|e0,e1,...] [--seed N] [--workers N]
//   ppa-eval synth --out DIR [--images 20] [--seed 7]
//   ppa-eval oracle --out DIR [--images 20] [--seed 7]
//
// Exit codes: 0 success, 2 config error, 3 partial (skipped samples), 4 total failure.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ppa/config.hpp"
#include "ppa/error.hpp"
#include "ppa/eval.hpp"
#include "ppa/io.hpp"
#include "ppa/reference.hpp"
#include "ppa/synth.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitPartial = 3;
constexpr int kExitFailure = 4;

// "N" gives N equal-width bins over [0, hi]; "a,b,c" gives explicit edges.
std::vector<double> parse_edges(const std::string& spec, double hi) {
  if (spec.find(',') == std::string::npos) {
    int n = 0;
    try {
      std::size_t used = 0;
      n = std::stoi(spec, &used);
      if (used != spec.size()) throw std::invalid_argument(spec);
    } catch (const std::exception&) {
      ppa::fail(ppa::ErrorCode::ConfigError, "bad bin spec '" + spec + "'");
    }
    if (n < 1) ppa::fail(ppa::ErrorCode::ConfigError, "bin count must be >= 1");
    return ppa::eval::uniform_edges(0.0, hi, n);
  }
  std::vector<double> edges;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      edges.push_back(std::stod(item));
    } catch (const std::exception&) {
      ppa::fail(ppa::ErrorCode::ConfigError, "bad bin edge '" + item + "'");
    }
  }
  return edges;
}

struct RunArgs {
  std::string corpus;
  std::string prompts;
  std::string backend;
  std::string out;
  std::string bins_leakage = "10";
  std::string bins_ui = "10";
  std::uint64_t seed = 0;
  int workers = 4;
};

int run(const RunArgs& a) {
  ppa::eval::EvalConfig cfg;
  ppa::eval::EvalBackends be;
  try {
    cfg.corpus = a.corpus;
    if (!a.prompts.empty()) cfg.prompts = ppa::eval::load_prompts(a.prompts);
    cfg.leakage_edges = parse_edges(a.bins_leakage, 1.0);
    cfg.ui_edges = parse_edges(a.bins_ui, 2.0);
    cfg.seed = a.seed;
    cfg.workers = a.workers;
    auto loaded = ppa::load_config_file(a.backend);
    cfg.taxonomy = loaded.service.taxonomy;
    cfg.obfuscation = loaded.service.obfuscation;
    cfg.obfuscation.mask.render_label = false;
    cfg.detection = loaded.service.detection;
    be.local = loaded.backends.local;
    be.remote = loaded.backends.remote;
    be.gateway = loaded.backends.gateway;
    if (loaded.backends.embedder) be.embedder = loaded.backends.embedder;
    if (!be.local) ppa::fail(ppa::ErrorCode::ConfigError, "no trusted local backend for the original images");
    cfg.validate();
  } catch (const ppa::Error& e) {
    std::cerr << "ppa-eval: " << e.what() << "\n";
    return kExitConfig;
  }

  ppa::eval::EvalReport report;
  try {
    report = ppa::eval::run_eval(cfg, be);
    ppa::eval::emit_report(report, a.out);
  } catch (const ppa::Error& e) {
    std::cerr << "ppa-eval: " << e.what() << "\n";
    return e.code() == ppa::ErrorCode::ConfigError ? kExitConfig : kExitFailure;
  }
  std::cout << "images " << report.images.size() << ", samples " << report.samples.size() << ", skipped "
            << report.skipped.size() << "\n";
  for (const auto& [name, t] : report.by_technique) {
    std::cout << name << ": mean similarity "
              << (t.mean_similarity ? std::to_string(*t.mean_similarity) : std::string("n/a")) << "\n";
  }
  if (!report.images.empty() && report.samples.empty()) return kExitFailure;
  if (!report.skipped.empty()) return kExitPartial;
  return kExitOk;
}

int synth(const std::string& out, int images, std::uint64_t seed) {
  ppa::eval::SynthOptions opt;
  opt.images = images;
  opt.seed = seed;
  ppa::eval::make_synthetic_corpus(out, opt);
  std::cout << "wrote " << images << " images to " << (std::filesystem::path(out) / "corpus").string() << "\n";
  return kExitOk;
}

// Builds the hermetic corpus, then scores it with the reference code only.
int oracle(const std::string& out, int images, std::uint64_t seed) {
  synth(out, images, seed);
  const std::filesystem::path dir(out);
  const auto replay = ppa::ReplayStore::load(dir / "replay");
  ppa::reference::OracleInputs in;
  in.corpus = dir / "corpus";
  in.prompts = nlohmann::json::parse(ppa::io::read_file(dir / "prompts.json"))["prompts"];
  in.leakage_edges = ppa::eval::uniform_edges(0.0, 1.0, 10);
  in.ui_edges = ppa::eval::uniform_edges(0.0, 2.0, 10);
  const auto report = ppa::reference::report(in, *replay);
  ppa::io::write_atomic(dir / "golden_report.json", report.dump(2) + "\n");
  std::cout << "wrote " << (dir / "golden_report.json").string() << "\n";

  // Per-pair metric fixtures: the first 40 (original, obfuscated) response
  // pairs of the corpus plus the degenerate cases.
  std::vector<std::pair<std::string, std::string>> pairs = {
      {"", ""}, {"A street in Paris.", ""}, {"", "A street in Paris."}, {"same words here", "same words here"}};
  std::map<std::string, std::string> originals;
  for (const auto& s : report["samples"]) {
    const std::string key = s["image"].get<std::string>() + "/" + s["prompt_id"].get<std::string>();
    if (s["version"] == "original") {
      originals[key] = s["response"];
    } else if (pairs.size() < 44 && originals.contains(key)) {
      pairs.emplace_back(originals[key], s["response"]);
    }
  }
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& [a, b] : pairs) {
    const auto m = ppa::reference::metrics(a, b, in.taxonomy);
    rows.push_back({{"r_orig", a},
                    {"r_mod", b},
                    {"leakage_orig", m.leakage_orig},
                    {"leakage_mod", m.leakage_mod},
                    {"privacy_gain", m.privacy_gain},
                    {"utility", m.utility},
                    {"utility_impact", m.utility_impact},
                    {"change_count", m.change_count}});
  }
  ppa::io::write_atomic(dir / "golden_metrics.json", nlohmann::json{{"pairs", rows}}.dump(2) + "\n");
  std::cout << "wrote " << (dir / "golden_metrics.json").string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Privacy/utility evaluation harness"};
  app.require_subcommand(1);

  RunArgs ra;
  auto* run_cmd = app.add_subcommand("run", "Evaluate a corpus against a backend");
  run_cmd->add_option("--corpus", ra.corpus, "Directory of <stem>.png + <stem>.ppa.json")->required();
  run_cmd->add_option("--prompts", ra.prompts, "Prompt set JSON (default: the eight PII questions)");
  run_cmd->add_option("--backend", ra.backend, "Backend config JSON")->required();
  run_cmd->add_option("--out", ra.out, "Output directory")->required();
  run_cmd->add_option("--bins-leakage", ra.bins_leakage, "Bin count over [0,1] or comma-separated edges");
  run_cmd->add_option("--bins-ui", ra.bins_ui, "Bin count over [0,2] or comma-separated edges");
  run_cmd->add_option("--seed", ra.seed, "Work-order shuffle seed (results do not depend on it)");
  run_cmd->add_option("--workers", ra.workers, "Image-level worker threads")->check(CLI::PositiveNumber);

  std::string synth_out;
  int synth_images = 20;
  std::uint64_t synth_seed = 7;
  auto* synth_cmd = app.add_subcommand("synth", "Write the hermetic synthetic corpus and replay store");
  synth_cmd->add_option("--out", synth_out, "Output directory")->required();
  synth_cmd->add_option("--images", synth_images, "Number of images")->check(CLI::NonNegativeNumber);
  synth_cmd->add_option("--seed", synth_seed, "Generator seed");

  std::string oracle_out;
  int oracle_images = 20;
  std::uint64_t oracle_seed = 7;
  auto* oracle_cmd = app.add_subcommand("oracle", "Regenerate golden fixtures with the reference implementations");
  oracle_cmd->add_option("--out", oracle_out, "Output directory")->required();
  oracle_cmd->add_option("--images", oracle_images, "Number of images")->check(CLI::NonNegativeNumber);
  oracle_cmd->add_option("--seed", oracle_seed, "Generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }
  try {
    if (*run_cmd) return run(ra);
    if (*synth_cmd) return synth(synth_out, synth_images, synth_seed);
    if (*oracle_cmd) return oracle(oracle_out, oracle_images, oracle_seed);
  } catch (const ppa::Error& e) {
    std::cerr << "ppa-eval: " << e.what() << "\n";
    return e.code() == ppa::ErrorCode::ConfigError ? kExitConfig : kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "ppa-eval: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitConfig;
}
