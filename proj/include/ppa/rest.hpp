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

// REST surface of the session service. Errors are problem+json documents
// carrying a machine-readable `code`.

#include <optional>
#include <string>

#include "httplib.h"
#include "json.hpp"
#include "ppa/core_json.hpp"
#include "ppa/error.hpp"
#include "ppa/service.hpp"

namespace ppa::rest {

using nlohmann::json;

inline int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::DecodeError:
    case ErrorCode::EmptyPrompt:
    case ErrorCode::ParseError:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::DomainError:
      return 400;
    case ErrorCode::Forbidden:
    case ErrorCode::ProtectedModeViolation:
      return 403;
    case ErrorCode::NotFound:
    case ErrorCode::UnknownCandidate:
      return 404;
    case ErrorCode::IllegalTransition:
    case ErrorCode::NotAnalyzed:
      return 409;
    case ErrorCode::MalformedDetection:
      return 422;
    case ErrorCode::BackendUnavailable:
    case ErrorCode::BackendHttpError:
    case ErrorCode::ReplayMiss:
    case ErrorCode::AllCandidatesFailed:
      return 502;
    case ErrorCode::BackendTimeout:
      return 504;
    default:
      return 500;
  }
}

inline void write_problem(httplib::Response& res, int status, const std::string& code, const std::string& detail) {
  res.status = status;
  const json body = {{"type", "about:blank"},
                     {"title", httplib::status_message(status)},
                     {"status", status},
                     {"code", code},
                     {"detail", detail}};
  res.set_content(body.dump(), "application/problem+json");
}

inline void write_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <typename F>
void guarded(httplib::Response& res, F&& f) {
  try {
    f();
  } catch (const Error& e) {
    write_problem(res, http_status(e.code()), std::string(to_string(e.code())), e.detail());
  } catch (const json::exception& e) {
    write_problem(res, 400, "ParseError", e.what());
  } catch (const std::exception& e) {
    write_problem(res, 500, "InternalError", e.what());
  }
}

inline json candidate_summary(const CandidateImage& c) {
  return {{"candidate_id", c.candidate_id}, {"technique", to_string(c.technique)}, {"targets", c.targets},
          {"all_objects", c.all_objects},   {"digest", c.digest},                  {"manifest", c.manifest}};
}

inline json metric_row(const Session& s, const std::string& cid) {
  const CandidateImage* c = s.find_candidate(cid);
  json row = {{"candidate_id", cid}};
  if (c != nullptr) {
    row["technique"] = to_string(c->technique);
    row["targets"] = c->targets;
    row["digest"] = c->digest;
  }
  if (auto it = s.metrics.find(cid); it != s.metrics.end()) {
    row["metrics"] = it->second;
    row["similarity"] = it->second.utility;
  }
  if (auto it = s.responses.find(cid); it != s.responses.end()) row["response"] = it->second.text;
  return row;
}

// Session document as served: no pixels, and the original response stays
// local.
inline json public_document(const Session& s) {
  json doc = s;
  doc["original_response"] = s.original_response ? json{{"text", s.original_response->text}} : json(nullptr);
  return doc;
}

inline void mount(httplib::Server& server, PpaService& service) {
  server.Post("/sessions", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      if (!req.has_file("image")) fail(ErrorCode::DecodeError, "multipart field 'image' is required");
      const auto& image = req.get_file_value("image").content;
      const std::string prompt = req.has_file("prompt") ? req.get_file_value("prompt").content : "";
      std::optional<std::string> annotations;
      if (req.has_file("annotations")) annotations = req.get_file_value("annotations").content;
      const auto s = service.create_session(
          std::span(reinterpret_cast<const std::uint8_t*>(image.data()), image.size()), prompt, annotations);
      write_json(res, {{"session_id", s.session_id}, {"state", to_string(s.state)}, {"digest", s.source.digest}},
                 201);
    });
  });

  server.Post("/sessions/:id/detect", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto s = service.run_detection(req.path_params.at("id"));
      write_json(res, {{"session_id", s.session_id},
                       {"state", to_string(s.state)},
                       {"n_sen", s.detected.size()},
                       {"detected", s.detected}});
    });
  });

  server.Post("/sessions/:id/modify", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto s = service.run_modification(req.path_params.at("id"));
      json cands = json::array();
      for (const auto& c : s.candidates) cands.push_back(candidate_summary(c));
      write_json(res, {{"session_id", s.session_id}, {"state", to_string(s.state)}, {"candidates", cands}});
    });
  });

  server.Post("/sessions/:id/analyze", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto s = service.run_analysis(req.path_params.at("id"));
      json rows = json::array();
      for (const auto& c : s.candidates) {
        if (s.metrics.contains(c.candidate_id)) rows.push_back(metric_row(s, c.candidate_id));
      }
      write_json(res, {{"session_id", s.session_id},
                       {"state", to_string(s.state)},
                       {"metrics", rows},
                       {"failures", s.failures}});
    });
  });

  server.Get("/sessions/:id", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { write_json(res, public_document(service.get(req.path_params.at("id")))); });
  });

  server.Get("/sessions/:id/ranking", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string key = req.has_param("key") ? req.get_param_value("key") : "gp";
      std::optional<double> lambda;
      if (req.has_param("lambda")) {
        try {
          lambda = std::stod(req.get_param_value("lambda"));
        } catch (const std::exception&) {
          fail(ErrorCode::DomainError, "lambda must be a number");
        }
      }
      const auto rk = RankingKey::parse(key, lambda);
      const auto s = service.get(req.path_params.at("id"));
      json order = json::array();
      json items = json::array();
      for (const auto& r : PpaService::rank(s, rk)) {
        order.push_back(r.candidate_id);
        json row = metric_row(s, r.candidate_id);
        row["score"] = r.score;
        items.push_back(row);
      }
      write_json(res, {{"key", rk.name()},
                       {"lambda", rk.kind == RankingKey::Kind::Composite ? json(rk.lambda) : json(nullptr)},
                       {"order", order},
                       {"items", items}});
    });
  });

  server.Post("/sessions/:id/select", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = json::parse(req.body);
      if (!body.contains("candidate_id") || !body["candidate_id"].is_string()) {
        fail(ErrorCode::UnknownCandidate, "body must carry a string candidate_id");
      }
      const auto s = service.select_and_submit(req.path_params.at("id"), body["candidate_id"].get<std::string>());
      write_json(res, {{"session_id", s.session_id},
                       {"state", to_string(s.state)},
                       {"selection", *s.selection},
                       {"final_response", *s.final_response}});
    });
  });

  server.Get("/blobs/:digest", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto bytes = service.store().read_blob(req.path_params.at("digest"), BlobAccess::Public);
      res.set_content(std::string(bytes.begin(), bytes.end()), "image/png");
    });
  });
}

}  // namespace ppa::rest
