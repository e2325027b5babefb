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

#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <span>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <semaphore>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "ppa/core.hpp"
#include "ppa/core_json.hpp"
#include "ppa/error.hpp"
#include "ppa/io.hpp"
#include "ppa/png_codec.hpp"
#include "ppa/raster.hpp"

namespace ppa {

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[40];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

inline std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(), static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

inline std::vector<std::uint8_t> base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) fail(ErrorCode::DecodeError, "base64 length must be a multiple of 4");
  std::vector<std::uint8_t> out(3 * text.size() / 4);
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()), static_cast<int>(text.size()));
  if (n < 0) fail(ErrorCode::DecodeError, "invalid base64");
  std::size_t len = static_cast<std::size_t>(n);
  // EVP_DecodeBlock counts padding bytes as output.
  if (!text.empty() && text.back() == '=') --len;
  if (text.size() > 1 && text[text.size() - 2] == '=') --len;
  out.resize(len);
  return out;
}

enum class QueryMode { Protected, Local };

inline std::string_view to_string(QueryMode m) { return m == QueryMode::Protected ? "Protected" : "Local"; }

// Bytes exactly as they would go on the wire.
struct OutboundRequest {
  std::string url;
  std::map<std::string, std::string> headers;
  std::string content_type;
  std::string body;
  std::string image_digest;  // digest of the raster encoded into `body`
};

struct TransportResponse {
  int status = 0;
  std::string body;
};

class Transport {
 public:
  virtual ~Transport() = default;
  // Throws Error(BackendTimeout) or Error(BackendUnavailable) on transport failure.
  virtual TransportResponse send(const OutboundRequest& request) = 0;
};

class VlmBackend {
 public:
  virtual ~VlmBackend() = default;
  virtual std::string id() const = 0;
  virtual std::string destination() const = 0;
  // Requests leave the host.
  virtual bool remote() const = 0;
  // May receive original images (Local mode).
  virtual bool trusted_local() const = 0;
  virtual std::string complete(const Raster& image, const std::string& digest, const TaskPrompt& prompt) = 0;
};

struct ReplayKey {
  std::string image_digest;
  std::string prompt_id;
  std::string backend_id;

  std::string str() const { return image_digest + "|" + prompt_id + "|" + backend_id; }
  friend auto operator<=>(const ReplayKey&, const ReplayKey&) = default;
};

namespace detail {

inline bool safe_component(std::string_view s) {
  if (s.empty() || s.size() > 128 || s == "." || s == "..") return false;
  for (unsigned char c : s) {
    if (!(std::isalnum(c) || c == '-' || c == '_' || c == '.')) return false;
  }
  return true;
}

}  // namespace detail

// Exact-match cache (image digest, prompt id, backend id) -> response text.
// With a root directory, each key is persisted as one JSON file under
// <root>/<backend_id>/<digest[0:2]>/.
class ReplayStore {
 public:
  ReplayStore() = default;
  explicit ReplayStore(std::filesystem::path root) : root_(std::move(root)) {}

  static std::shared_ptr<ReplayStore> load(const std::filesystem::path& root) {
    auto store = std::make_shared<ReplayStore>(root);
    if (!std::filesystem::exists(root)) return store;
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
      if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      try {
        const auto j = nlohmann::json::parse(io::read_file(f));
        ReplayKey k{j.at("image_digest").get<std::string>(), j.at("prompt_id").get<std::string>(),
                    j.at("backend_id").get<std::string>()};
        store->entries_[k] = j.at("text").get<std::string>();
      } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ParseError, f.string() + ": " + e.what());
      }
    }
    return store;
  }

  void record(const ReplayKey& key, const std::string& text, bool overwrite = false) {
    if (!detail::safe_component(key.backend_id) || !detail::safe_component(key.prompt_id) ||
        !detail::safe_component(key.image_digest)) {
      fail(ErrorCode::ConfigError, "malformed replay key " + key.str());
    }
    std::unique_lock lock(mu_);
    if (!overwrite && entries_.contains(key)) fail(ErrorCode::DuplicateKey, key.str());
    if (root_) {
      const nlohmann::json j = {{"image_digest", key.image_digest}, {"prompt_id", key.prompt_id},
                                {"backend_id", key.backend_id}, {"text", text}};
      io::write_atomic(path_for(key), j.dump(2) + "\n");
    }
    entries_[key] = text;
  }

  std::string lookup(const ReplayKey& key) const {
    std::shared_lock lock(mu_);
    auto it = entries_.find(key);
    if (it == entries_.end()) fail(ErrorCode::ReplayMiss, "no replay entry for " + key.str());
    return it->second;
  }

  bool contains(const ReplayKey& key) const {
    std::shared_lock lock(mu_);
    return entries_.contains(key);
  }

  std::size_t size() const {
    std::shared_lock lock(mu_);
    return entries_.size();
  }

  const std::optional<std::filesystem::path>& root() const noexcept { return root_; }

 private:
  std::filesystem::path path_for(const ReplayKey& key) const {
    return *root_ / key.backend_id / key.image_digest.substr(0, 2) /
           (key.image_digest.substr(0, 24) + "_" + key.prompt_id + ".json");
  }

  std::optional<std::filesystem::path> root_;
  mutable std::shared_mutex mu_;
  std::map<ReplayKey, std::string> entries_;
};

// Serves canned responses; nothing leaves the host.
class ReplayBackend : public VlmBackend {
 public:
  ReplayBackend(std::string id, std::shared_ptr<const ReplayStore> store, bool trusted_local = true)
      : id_(std::move(id)), store_(std::move(store)), trusted_(trusted_local) {}

  std::string id() const override { return id_; }
  std::string destination() const override { return "replay://" + id_; }
  bool remote() const override { return false; }
  bool trusted_local() const override { return trusted_; }
  std::string complete(const Raster&, const std::string& digest, const TaskPrompt& prompt) override {
    return store_->lookup({digest, prompt.prompt_id, id_});
  }

 private:
  std::string id_;
  std::shared_ptr<const ReplayStore> store_;
  bool trusted_;
};

struct HttpBackendConfig {
  std::string id = "ovlm";
  std::string endpoint;  // full URL, e.g. http://127.0.0.1:8080/v1/describe
  std::string auth_env;  // name of the environment variable holding the key
  std::string auth_header = "Authorization";
  std::string auth_scheme = "Bearer";
  std::string request_format = "json";  // json | multipart
  bool trusted_local = false;
};

// Posts the re-encoded PNG and the prompt; expects {"text": "..."} back.
class HttpVlmBackend : public VlmBackend {
 public:
  HttpVlmBackend(HttpBackendConfig config, std::shared_ptr<Transport> transport)
      : cfg_(std::move(config)), transport_(std::move(transport)) {
    if (cfg_.endpoint.empty()) fail(ErrorCode::ConfigError, "http backend '" + cfg_.id + "' needs an endpoint");
    if (cfg_.request_format != "json" && cfg_.request_format != "multipart") {
      fail(ErrorCode::ConfigError, "request_format must be json or multipart");
    }
  }

  std::string id() const override { return cfg_.id; }
  std::string destination() const override { return cfg_.endpoint; }
  bool remote() const override { return true; }
  bool trusted_local() const override { return cfg_.trusted_local; }

  OutboundRequest build_request(const Raster& image, const std::string& digest, const TaskPrompt& prompt) const {
    OutboundRequest req;
    req.url = cfg_.endpoint;
    req.image_digest = digest;
    const auto png = encode_png(image);
    if (cfg_.request_format == "json") {
      req.content_type = "application/json";
      req.body = nlohmann::json{{"prompt", prompt.text},
                                {"prompt_id", prompt.prompt_id},
                                {"image_png_base64", base64_encode(png)}}
                     .dump();
    } else {
      const std::string boundary = "ppa-" + digest.substr(0, 24);
      req.content_type = "multipart/form-data; boundary=" + boundary;
      std::string& b = req.body;
      b += "--" + boundary + "\r\nContent-Disposition: form-data; name=\"prompt\"\r\n\r\n" + prompt.text + "\r\n";
      b += "--" + boundary + "\r\nContent-Disposition: form-data; name=\"prompt_id\"\r\n\r\n" + prompt.prompt_id + "\r\n";
      b += "--" + boundary +
           "\r\nContent-Disposition: form-data; name=\"image\"; filename=\"image.png\"\r\nContent-Type: image/png\r\n\r\n";
      b.append(reinterpret_cast<const char*>(png.data()), png.size());
      b += "\r\n--" + boundary + "--\r\n";
    }
    if (!cfg_.auth_env.empty()) {
      if (const char* key = std::getenv(cfg_.auth_env.c_str()); key != nullptr && *key != '\0') {
        req.headers[cfg_.auth_header] = cfg_.auth_scheme.empty() ? key : cfg_.auth_scheme + " " + key;
      }
    }
    return req;
  }

  std::string complete(const Raster& image, const std::string& digest, const TaskPrompt& prompt) override {
    const auto resp = transport_->send(build_request(image, digest, prompt));
    if (resp.status < 200 || resp.status >= 300) {
      fail(ErrorCode::BackendHttpError, cfg_.id + " returned HTTP " + std::to_string(resp.status));
    }
    try {
      const auto j = nlohmann::json::parse(resp.body);
      return j.at("text").get<std::string>();
    } catch (const nlohmann::json::exception&) {
      fail(ErrorCode::BackendHttpError, cfg_.id + " returned a body without a 'text' field");
    }
  }

 private:
  HttpBackendConfig cfg_;
  std::shared_ptr<Transport> transport_;
};

struct AuditRecord {
  std::string timestamp;
  std::string destination;
  std::string backend_id;
  std::string image_digest;
  std::string prompt_id;
  std::string session_id;
  QueryMode mode = QueryMode::Protected;
};

inline void to_json(nlohmann::json& j, const AuditRecord& r) {
  j = {{"timestamp", r.timestamp},   {"destination", r.destination}, {"backend_id", r.backend_id},
       {"image_digest", r.image_digest}, {"prompt_id", r.prompt_id},    {"session_id", r.session_id},
       {"mode", to_string(r.mode)}};
}
inline void from_json(const nlohmann::json& j, AuditRecord& r) {
  r.timestamp = j.at("timestamp").get<std::string>();
  r.destination = j.at("destination").get<std::string>();
  r.backend_id = j.value("backend_id", "");
  r.image_digest = j.at("image_digest").get<std::string>();
  r.prompt_id = j.at("prompt_id").get<std::string>();
  r.session_id = j.at("session_id").get<std::string>();
  r.mode = j.at("mode").get<std::string>() == "Local" ? QueryMode::Local : QueryMode::Protected;
}

// Append-only; optionally mirrored to a newline-delimited JSON file.
class AuditLog {
 public:
  AuditLog() = default;
  explicit AuditLog(std::filesystem::path file) : file_(std::move(file)) {
    if (file_->has_parent_path()) std::filesystem::create_directories(file_->parent_path());
  }

  void append(const AuditRecord& record) {
    std::lock_guard lock(mu_);
    if (file_) {
      std::ofstream out(*file_, std::ios::app | std::ios::binary);
      if (!out) fail(ErrorCode::IoError, "cannot append to audit log " + file_->string());
      out << nlohmann::json(record).dump() << '\n';
      out.flush();
      if (!out) fail(ErrorCode::IoError, "audit log write failed");
    }
    records_.push_back(record);
  }

  std::vector<AuditRecord> records() const {
    std::lock_guard lock(mu_);
    return records_;
  }

  static std::vector<AuditRecord> read_file(const std::filesystem::path& path) {
    std::vector<AuditRecord> out;
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty()) out.push_back(nlohmann::json::parse(line).get<AuditRecord>());
    }
    return out;
  }

 private:
  std::optional<std::filesystem::path> file_;
  mutable std::mutex mu_;
  std::vector<AuditRecord> records_;
};

// The only path from the application to a VLM backend.
class Gateway {
 public:
  explicit Gateway(std::shared_ptr<AuditLog> audit = std::make_shared<AuditLog>(), int max_inflight = 4)
      : audit_(std::move(audit)), inflight_(std::max(1, std::min(max_inflight, 1024))) {}

  // Registers an original-image digest; Protected queries with it are refused.
  void protect(const std::string& digest) {
    std::lock_guard lock(mu_);
    originals_.insert(digest);
  }
  bool is_protected(const std::string& digest) const {
    std::lock_guard lock(mu_);
    return originals_.contains(digest);
  }

  ModelResponse query(VlmBackend& backend, const Raster& image, const TaskPrompt& prompt, QueryMode mode,
                      const std::string& session_id = {}) {
    const std::string digest = image.digest();
    if (mode == QueryMode::Protected && is_protected(digest)) {
      fail(ErrorCode::ProtectedModeViolation,
           "refusing to send original image " + digest + " to " + backend.destination());
    }
    if (mode == QueryMode::Local && !backend.trusted_local()) {
      fail(ErrorCode::ProtectedModeViolation,
           "Local mode requires a trusted_local backend; " + backend.id() + " is not trusted");
    }
    inflight_.acquire();
    struct Release {
      std::counting_semaphore<1024>& s;
      ~Release() { s.release(); }
    } release{inflight_};
    audit_->append({utc_timestamp(), backend.destination(), backend.id(), digest, prompt.prompt_id, session_id, mode});
    const auto start = std::chrono::steady_clock::now();
    std::string text = backend.complete(image, digest, prompt);
    const double elapsed =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return {std::move(text), backend.id(), prompt.prompt_id, digest, elapsed};
  }

  const AuditLog& audit() const noexcept { return *audit_; }
  std::shared_ptr<AuditLog> audit_log() const noexcept { return audit_; }

 private:
  std::shared_ptr<AuditLog> audit_;
  mutable std::mutex mu_;
  std::set<std::string> originals_;
  std::counting_semaphore<1024> inflight_;
};

}  // namespace ppa
