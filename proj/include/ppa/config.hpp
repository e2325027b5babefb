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

// Backend configuration file:
//
//   {
//     "backend":       {"kind": "http"|"replay", "id": "...", "endpoint": "...",
//                       "auth_env": "ENV_VAR", "trusted_local": false,
//                       "request_format": "json"|"multipart", "timeout_ms": 30000,
//                       "replay_dir": "..."},
//     "local_backend": { same shape; must be trusted_local },
//     "concurrency":   {"max_inflight": 4},
//     "embedding":     {"kind": "hashed"|"http", "dimension": 16384, "endpoint": "..."},
//     "detector":      {"kind": "sidecar"|"http", "sidecar_dir": "...", "endpoint": "...",
//                       "min_confidence": 0.0},
//     "obfuscation":   {"sigma_scale": 0.15, "sigma_min": 8.0, "margin": null,
//                       "render_label": false, "all_objects": false},
//     "lexicon":       "path/to/lexicon.json",
//     "audit_log":     "path/to/audit.ndjson"
//   }
//
// Relative paths resolve against the config file's directory. Secrets are
// never read from this file, only from the variable named by auth_env.

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "json.hpp"
#include "ppa/analysis.hpp"
#include "ppa/detection.hpp"
#include "ppa/error.hpp"
#include "ppa/gateway.hpp"
#include "ppa/http_adapters.hpp"
#include "ppa/io.hpp"
#include "ppa/obfuscation.hpp"
#include "ppa/service.hpp"
#include "ppa/taxonomy.hpp"

namespace ppa {

struct LoadedConfig {
  ServiceConfig service;
  ServiceBackends backends;
  std::shared_ptr<ReplayStore> replay;  // set when any backend replays
};

namespace detail {

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

inline void reject_secrets(const nlohmann::json& section, const std::string& where) {
  for (const char* k : {"api_key", "apikey", "token", "secret", "password", "authorization"}) {
    if (section.contains(k)) {
      fail(ErrorCode::ConfigError, where + "." + k + ": secrets must come from the environment (use auth_env)");
    }
  }
}

inline std::shared_ptr<VlmBackend> make_vlm_backend(const nlohmann::json& j, const std::string& where,
                                                    const std::filesystem::path& base,
                                                    std::shared_ptr<ReplayStore>& replay,
                                                    std::shared_ptr<Transport> transport) {
  reject_secrets(j, where);
  const std::string kind = j.value("kind", "replay");
  const std::string id = j.value("id", kind == "replay" ? "replay" : "ovlm");
  if (kind == "replay") {
    if (!replay) {
      if (!j.contains("replay_dir")) fail(ErrorCode::ConfigError, where + ".replay_dir is required for replay");
      replay = ReplayStore::load(resolve(base, j["replay_dir"].get<std::string>()));
    }
    return std::make_shared<ReplayBackend>(id, replay, j.value("trusted_local", true));
  }
  if (kind == "http") {
    HttpBackendConfig cfg;
    cfg.id = id;
    cfg.endpoint = j.value("endpoint", "");
    cfg.auth_env = j.value("auth_env", "");
    cfg.auth_header = j.value("auth_header", cfg.auth_header);
    cfg.auth_scheme = j.value("auth_scheme", cfg.auth_scheme);
    cfg.request_format = j.value("request_format", cfg.request_format);
    cfg.trusted_local = j.value("trusted_local", false);
    if (!transport) transport = std::make_shared<HttplibTransport>(j.value("timeout_ms", 30000));
    return std::make_shared<HttpVlmBackend>(cfg, transport);
  }
  fail(ErrorCode::ConfigError, where + ".kind must be http or replay");
}

}  // namespace detail

// `transport` overrides the HTTP transport (tests inject a stub).
inline LoadedConfig load_config(const nlohmann::json& j, const std::filesystem::path& base = ".",
                                std::shared_ptr<Transport> transport = nullptr) {
  if (!j.is_object()) fail(ErrorCode::ConfigError, "config must be a JSON object");
  LoadedConfig out;
  try {
    if (j.contains("lexicon")) out.service.taxonomy = Taxonomy::load(detail::resolve(base, j["lexicon"].get<std::string>()));

    if (j.contains("obfuscation")) {
      const auto& o = j["obfuscation"];
      auto& ob = out.service.obfuscation;
      ob.blur.sigma_scale = o.value("sigma_scale", ob.blur.sigma_scale);
      ob.blur.sigma_min = o.value("sigma_min", ob.blur.sigma_min);
      if (o.contains("margin") && !o["margin"].is_null()) ob.blur.margin = o["margin"].get<int>();
      ob.mask.render_label = o.value("render_label", false);
      ob.all_objects = o.value("all_objects", false);
      if (!(ob.blur.sigma_scale > 0.0) || !(ob.blur.sigma_min > 0.0)) {
        fail(ErrorCode::ConfigError, "obfuscation sigma_scale and sigma_min must be positive");
      }
    }

    int max_inflight = 4;
    if (j.contains("concurrency")) max_inflight = j["concurrency"].value("max_inflight", 4);
    if (max_inflight < 1) fail(ErrorCode::ConfigError, "concurrency.max_inflight must be >= 1");
    std::shared_ptr<AuditLog> audit = j.contains("audit_log")
                                          ? std::make_shared<AuditLog>(detail::resolve(base, j["audit_log"].get<std::string>()))
                                          : std::make_shared<AuditLog>();
    out.backends.gateway = std::make_shared<Gateway>(audit, max_inflight);

    if (!j.contains("backend")) fail(ErrorCode::ConfigError, "missing 'backend' section");
    out.backends.remote = detail::make_vlm_backend(j["backend"], "backend", base, out.replay, transport);
    if (j.contains("local_backend")) {
      out.backends.local = detail::make_vlm_backend(j["local_backend"], "local_backend", base, out.replay, transport);
      if (!out.backends.local->trusted_local()) {
        fail(ErrorCode::ConfigError, "local_backend must set trusted_local: true");
      }
    } else if (out.backends.remote->trusted_local()) {
      out.backends.local = out.backends.remote;
    }

    if (j.contains("embedding")) {
      const auto& e = j["embedding"];
      const std::string kind = e.value("kind", "hashed");
      const std::size_t dim = e.value("dimension", HashedTermEmbedder::kDefaultDimension);
      if (kind == "hashed") {
        out.backends.embedder = std::make_shared<HashedTermEmbedder>(dim);
      } else if (kind == "http") {
        out.backends.embedder = std::make_shared<HttpEmbeddingBackend>(
            e.value("endpoint", ""), dim, transport ? transport : std::make_shared<HttplibTransport>());
      } else {
        fail(ErrorCode::ConfigError, "embedding.kind must be hashed or http");
      }
    }

    if (j.contains("detector")) {
      const auto& d = j["detector"];
      const std::string kind = d.value("kind", "sidecar");
      out.service.detection.min_confidence = d.value("min_confidence", 0.0);
      if (kind == "sidecar") {
        if (d.contains("sidecar_dir")) {
          out.backends.detector = std::make_shared<SidecarDetector>(SidecarDetector::from_directory(
              detail::resolve(base, d["sidecar_dir"].get<std::string>()), out.service.taxonomy));
        }
      } else if (kind == "http") {
        if (!d.value("trusted_local", false)) {
          fail(ErrorCode::ConfigError, "detector receives original images and must set trusted_local: true");
        }
        out.backends.detector = std::make_shared<HttpDetector>(
            d.value("endpoint", ""), transport ? transport : std::make_shared<HttplibTransport>(), out.service.taxonomy);
      } else {
        fail(ErrorCode::ConfigError, "detector.kind must be sidecar or http");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ConfigError, std::string("malformed config: ") + e.what());
  }
  return out;
}

inline LoadedConfig load_config_file(const std::filesystem::path& path, std::shared_ptr<Transport> transport = nullptr) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::ConfigError, path.string() + ": " + e.what());
  }
  return load_config(j, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path(), std::move(transport));
}

}  // namespace ppa
