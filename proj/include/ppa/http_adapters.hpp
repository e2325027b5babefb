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

// HTTP realizations of the backend contracts, over cpp-httplib.

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "ppa/analysis.hpp"
#include "ppa/detection.hpp"
#include "ppa/error.hpp"
#include "ppa/gateway.hpp"
#include "ppa/png_codec.hpp"

namespace ppa {

struct ParsedUrl {
  std::string base;  // scheme://host[:port]
  std::string path;
};

inline ParsedUrl split_url(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) fail(ErrorCode::ConfigError, "endpoint must be an absolute URL: " + url);
  const auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

class HttplibTransport : public Transport {
 public:
  explicit HttplibTransport(int timeout_ms = 30000) : timeout_ms_(timeout_ms) {}

  TransportResponse send(const OutboundRequest& request) override {
    const auto url = split_url(request.url);
    httplib::Client cli(url.base);
    cli.set_connection_timeout(std::chrono::milliseconds(timeout_ms_));
    cli.set_read_timeout(std::chrono::milliseconds(timeout_ms_));
    cli.set_write_timeout(std::chrono::milliseconds(timeout_ms_));
    httplib::Headers headers;
    for (const auto& [k, v] : request.headers) headers.emplace(k, v);
    auto res = cli.Post(url.path, headers, request.body, request.content_type);
    if (!res) {
      const auto err = res.error();
      if (err == httplib::Error::Read || err == httplib::Error::Write || err == httplib::Error::ConnectionTimeout) {
        fail(ErrorCode::BackendTimeout, request.url + ": " + httplib::to_string(err));
      }
      fail(ErrorCode::BackendUnavailable, request.url + ": " + httplib::to_string(err));
    }
    return {res->status, res->body};
  }

 private:
  int timeout_ms_;
};

// Detector service speaking the sidecar format. It receives original images,
// so it must be a trusted local endpoint.
class HttpDetector : public DetectorBackend {
 public:
  HttpDetector(std::string endpoint, std::shared_ptr<Transport> transport, const Taxonomy& taxonomy)
      : endpoint_(std::move(endpoint)), transport_(std::move(transport)), taxonomy_(taxonomy) {}

  std::string id() const override { return "http-detector"; }

  std::vector<DetectedObject> detect(const SourceImage& image, const Taxonomy& taxonomy) const override {
    OutboundRequest req;
    req.url = endpoint_;
    req.content_type = "application/json";
    req.image_digest = image.digest;
    req.body = nlohmann::json{{"image_png_base64", base64_encode(encode_png(image.raster))},
                              {"categories", taxonomy.ids()}}
                   .dump();
    TransportResponse resp;
    try {
      resp = transport_->send(req);
    } catch (const Error& e) {
      fail(ErrorCode::BackendUnavailable, e.detail());
    }
    if (resp.status != 200) fail(ErrorCode::BackendUnavailable, endpoint_ + " returned HTTP " + std::to_string(resp.status));
    // Boxes are validated by detect_sensitive_objects, which reports them as
    // MalformedDetection.
    const auto sc = parse_sidecar(resp.body, taxonomy_, std::nullopt, endpoint_);
    std::vector<DetectedObject> out;
    for (const auto& r : sc.records) out.push_back({r.object_id, r.box, r.category_id, r.confidence, r.label});
    return out;
  }

 private:
  std::string endpoint_;
  std::shared_ptr<Transport> transport_;
  Taxonomy taxonomy_;
};

// Remote sentence embedder: POST {"text": ...} -> {"embedding": [...]}.
class HttpEmbeddingBackend : public EmbeddingBackend {
 public:
  HttpEmbeddingBackend(std::string endpoint, std::size_t dimension, std::shared_ptr<Transport> transport)
      : endpoint_(std::move(endpoint)), dimension_(dimension), transport_(std::move(transport)) {}

  std::string id() const override { return "http-embedding"; }
  std::size_t dimension() const override { return dimension_; }

  std::vector<double> embed(std::string_view text) const override {
    OutboundRequest req;
    req.url = endpoint_;
    req.content_type = "application/json";
    req.body = nlohmann::json{{"text", std::string(text)}}.dump();
    TransportResponse resp;
    try {
      resp = transport_->send(req);
    } catch (const Error& e) {
      fail(ErrorCode::BackendUnavailable, e.detail());
    }
    if (resp.status != 200) fail(ErrorCode::BackendUnavailable, endpoint_ + " returned HTTP " + std::to_string(resp.status));
    try {
      auto v = nlohmann::json::parse(resp.body).at("embedding").get<std::vector<double>>();
      if (v.size() != dimension_) fail(ErrorCode::DimensionMismatch, "embedding has wrong dimension");
      return v;
    } catch (const nlohmann::json::exception&) {
      fail(ErrorCode::BackendUnavailable, endpoint_ + " returned a body without 'embedding'");
    }
  }

 private:
  std::string endpoint_;
  std::size_t dimension_;
  std::shared_ptr<Transport> transport_;
};

}  // namespace ppa
