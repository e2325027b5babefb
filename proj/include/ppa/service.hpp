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

#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ppa/analysis.hpp"
#include "ppa/core.hpp"
#include "ppa/detection.hpp"
#include "ppa/error.hpp"
#include "ppa/gateway.hpp"
#include "ppa/obfuscation.hpp"
#include "ppa/png_codec.hpp"
#include "ppa/ranking.hpp"
#include "ppa/session_store.hpp"
#include "ppa/taxonomy.hpp"

namespace ppa {

struct ServiceConfig {
  Taxonomy taxonomy = default_taxonomy();
  ObfuscationConfig obfuscation;
  DetectionOptions detection;
};

struct ServiceBackends {
  std::shared_ptr<DetectorBackend> detector;  // used when a session carries no annotations
  std::shared_ptr<VlmBackend> remote;         // Protected-mode target
  std::shared_ptr<VlmBackend> local;          // trusted_local backend producing R_orig
  std::shared_ptr<EmbeddingBackend> embedder = std::make_shared<HashedTermEmbedder>();
  std::shared_ptr<Gateway> gateway = std::make_shared<Gateway>();
};

struct RankedCandidate {
  std::string candidate_id;
  double score = 0.0;
  MetricSet metrics;
};

inline std::string new_session_id() {
  static std::mutex mu;
  static std::mt19937_64 rng{std::random_device{}()};
  std::lock_guard lock(mu);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string id = "s-";
  for (int i = 0; i < 2; ++i) {
    std::uint64_t v = rng();
    for (int k = 0; k < 16; ++k, v >>= 4) id.push_back(kHex[v & 0xf]);
  }
  return id;
}

// Drives the four workflow stages. Each stage works on a copy of the stored
// session and persists only on success, so a failed stage leaves the stored
// state untouched. Calls for the same session are serialized.
class PpaService {
 public:
  PpaService(SessionStore store, ServiceConfig config, ServiceBackends backends)
      : store_(std::move(store)),
        config_(std::move(config)),
        backends_(std::move(backends)),
        lexicon_(config_.taxonomy) {
    if (!backends_.gateway) backends_.gateway = std::make_shared<Gateway>();
    if (!backends_.embedder) backends_.embedder = std::make_shared<HashedTermEmbedder>();
    for (const auto& id : store_.list()) backends_.gateway->protect(store_.load_document(id)["input"]["image"]["digest"]);
  }

  const SessionStore& store() const noexcept { return store_; }
  const ServiceConfig& config() const noexcept { return config_; }
  Gateway& gateway() noexcept { return *backends_.gateway; }

  // Input stage.
  Session create_session(std::span<const std::uint8_t> image_bytes, std::string_view prompt_text,
                         std::optional<std::string> annotations = std::nullopt) {
    Session s;
    s.prompt = TaskPrompt::make(prompt_text);
    s.source = SourceImage::from_raster(decode_png(image_bytes));
    if (annotations) {
      parse_sidecar(*annotations, config_.taxonomy, ImageSize{s.source.width(), s.source.height()}, "annotations");
      s.annotations = std::move(annotations);
    }
    s.session_id = new_session_id();
    s.created_at = s.updated_at = utc_timestamp();
    backends_.gateway->protect(s.source.digest);
    store_.save(s);
    return s;
  }

  Session get(const std::string& id) const { return store_.load(id); }

  Session run_detection(const std::string& id) {
    auto lock = lock_session(id);
    Session s = store_.load(id);
    if (s.state != SessionState::Created) fail(ErrorCode::IllegalTransition, "detect requires state Created");
    s.detected = detect(s);
    advance(s, SessionState::Detected);
    return s;
  }

  // Modification stage: 2*n_sen candidates.
  Session run_modification(const std::string& id) {
    auto lock = lock_session(id);
    Session s = store_.load(id);
    if (s.state != SessionState::Detected) fail(ErrorCode::IllegalTransition, "modify requires state Detected");
    s.candidates = generate_candidates(s.source, s.detected, config_.taxonomy, config_.obfuscation);
    advance(s, SessionState::Modified);
    return s;
  }

  // Analysis stage. R_orig comes from the trusted local backend; every
  // candidate goes to the remote backend in Protected mode. A failing
  // candidate is recorded and skipped.
  Session run_analysis(const std::string& id) {
    auto lock = lock_session(id);
    Session s = store_.load(id);
    if (s.state != SessionState::Modified) fail(ErrorCode::IllegalTransition, "analyze requires state Modified");
    if (!backends_.local) fail(ErrorCode::ConfigError, "no trusted local backend configured for R_orig");
    if (!backends_.remote) fail(ErrorCode::ConfigError, "no remote backend configured");
    Gateway& gw = *backends_.gateway;
    s.responses.clear();
    s.metrics.clear();
    s.failures.clear();
    if (!s.candidates.empty()) {
      const ModelResponse r_orig = gw.query(*backends_.local, s.source.raster, s.prompt, QueryMode::Local, s.session_id);
      std::vector<std::future<ModelResponse>> futures;
      for (const auto& c : s.candidates) {
        futures.push_back(std::async(std::launch::async, [&gw, this, &c, &s] {
          return gw.query(*backends_.remote, c.raster, s.prompt, QueryMode::Protected, s.session_id);
        }));
      }
      for (std::size_t i = 0; i < futures.size(); ++i) {
        const auto& cid = s.candidates[i].candidate_id;
        try {
          ModelResponse r = futures[i].get();
          s.metrics[cid] = analyze_candidate(r_orig, r, lexicon_, *backends_.embedder);
          s.responses[cid] = std::move(r);
        } catch (const Error& e) {
          s.failures[cid] = e.what();
        }
      }
      if (s.responses.empty()) fail(ErrorCode::AllCandidatesFailed, "no candidate produced a response");
      s.original_response = r_orig;
    }
    advance(s, SessionState::Analyzed);
    return s;
  }

  std::vector<RankedCandidate> rank(const std::string& id, const RankingKey& key) const {
    return rank(store_.load(id), key);
  }

  static std::vector<RankedCandidate> rank(const Session& s, const RankingKey& key) {
    if (s.state < SessionState::Analyzed) fail(ErrorCode::NotAnalyzed, "session " + s.session_id + " is not analyzed");
    std::vector<RankedCandidate> out;
    for (const auto& cid : rank_candidates(s.metrics, key)) {
      const auto& m = s.metrics.at(cid);
      out.push_back({cid, key.score(m), m});
    }
    return out;
  }

  // User decision stage: records the selection, then sends the chosen
  // candidate with the task prompt in Protected mode.
  Session select_and_submit(const std::string& id, const std::string& candidate_id) {
    auto lock = lock_session(id);
    Session s = store_.load(id);
    if (s.state != SessionState::Analyzed && s.state != SessionState::Selected) {
      fail(ErrorCode::IllegalTransition, "select requires state Analyzed or Selected, not " +
                                             std::string(to_string(s.state)));
    }
    const CandidateImage* c = s.find_candidate(candidate_id);
    if (c == nullptr) fail(ErrorCode::UnknownCandidate, "no candidate " + candidate_id + " in session " + id);
    if (c->digest == s.source.digest) {
      fail(ErrorCode::ProtectedModeViolation, "candidate " + candidate_id + " is identical to the original");
    }
    if (!backends_.remote) fail(ErrorCode::ConfigError, "no remote backend configured");
    s.selection = candidate_id;
    if (s.state == SessionState::Analyzed) advance(s, SessionState::Selected);
    ModelResponse final_response =
        backends_.gateway->query(*backends_.remote, c->raster, s.prompt, QueryMode::Protected, s.session_id);
    s.final_response = std::move(final_response);
    advance(s, SessionState::Submitted);
    return s;
  }

 private:
  std::unique_lock<std::mutex> lock_session(const std::string& id) {
    std::shared_ptr<std::mutex> m;
    {
      std::lock_guard guard(locks_mu_);
      auto& slot = locks_[id];
      if (!slot) slot = std::make_shared<std::mutex>();
      m = slot;
    }
    return std::unique_lock<std::mutex>(*m);
  }

  std::vector<DetectedObject> detect(const Session& s) const {
    if (s.annotations) {
      SidecarDetector inline_detector;
      inline_detector.add(s.source.digest, parse_sidecar(*s.annotations, config_.taxonomy, std::nullopt, "annotations"));
      return detect_sensitive_objects(s.source, config_.taxonomy, inline_detector, config_.detection);
    }
    if (!backends_.detector) fail(ErrorCode::BackendUnavailable, "no detector backend configured");
    return detect_sensitive_objects(s.source, config_.taxonomy, *backends_.detector, config_.detection);
  }

  void advance(Session& s, SessionState next) {
    validate_session_transition(s, next);
    s.state = next;
    s.updated_at = utc_timestamp();
    store_.save(s);
  }

  SessionStore store_;
  ServiceConfig config_;
  ServiceBackends backends_;
  LeakageLexicon lexicon_;
  std::mutex locks_mu_;
  std::map<std::string, std::shared_ptr<std::mutex>> locks_;
};

}  // namespace ppa
