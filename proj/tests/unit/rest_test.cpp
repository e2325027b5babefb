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


#include <random>
#include <string>
#include <thread>

#include <gtest/gtest.h>

#include "httplib.h"
#include "json.hpp"
#include "ppa/rest.hpp"
#include "service_harness.hpp"
#include "test_support.hpp"

namespace ppa {
namespace {

using nlohmann::json;

class RestTest : public ::testing::Test {
 protected:
  void SetUp() override {
    parts_ = ppa::testing::make_parts();
    service_ = ppa::testing::make_service(dir_.path(), parts_);
    start();
    std::mt19937_64 rng(77);
    image_ = ppa::testing::random_raster(rng, 40, 30);
  }
  void TearDown() override { stop(); }

  void start() {
    server_ = std::make_unique<httplib::Server>();
    rest::mount(*server_, *service_);
    port_ = server_->bind_to_any_port("127.0.0.1");
    ASSERT_GT(port_, 0);
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
  }
  void stop() {
    server_->stop();
    thread_.join();
  }

  httplib::Result create(const std::string& prompt, const std::string& annotations = "") {
    httplib::MultipartFormDataItems items = {{"image", ppa::testing::png_string(image_), "upload.png", "image/png"},
                                             {"prompt", prompt, "", ""}};
    if (!annotations.empty()) items.push_back({"annotations", annotations, "", "application/json"});
    return client_->Post("/sessions", items);
  }

  std::string created_id() {
    auto r = create("Where is this image located?", R"({"image": "upload.png", "objects": [
      {"id": "sign", "box": {"x": 2, "y": 2, "w": 10, "h": 8}, "category": "location"},
      {"id": "ring", "box": {"x": 25, "y": 15, "w": 6, "h": 6}, "category": "marital_status"}]})");
    EXPECT_EQ(r->status, 201);
    return json::parse(r->body)["session_id"];
  }

  static void expect_problem(const httplib::Result& r, int status, const std::string& code) {
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, status) << r->body;
    EXPECT_EQ(r->get_header_value("Content-Type"), "application/problem+json");
    const auto body = json::parse(r->body);
    EXPECT_EQ(body["code"], code);
    EXPECT_EQ(body["status"], status);
    EXPECT_TRUE(body.contains("title"));
    EXPECT_TRUE(body.contains("detail"));
  }

  ppa::testing::TempDir dir_;
  ppa::testing::ServiceParts parts_;
  std::unique_ptr<PpaService> service_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
  std::unique_ptr<httplib::Client> client_;
  Raster image_;
};

TEST_F(RestTest, FullFlowOverHttp) {
  const std::string id = created_id();
  auto r = client_->Post("/sessions/" + id + "/detect");
  ASSERT_EQ(r->status, 200);
  EXPECT_EQ(json::parse(r->body)["n_sen"], 2);
  r = client_->Post("/sessions/" + id + "/modify");
  ASSERT_EQ(r->status, 200);
  const auto candidates = json::parse(r->body)["candidates"];
  EXPECT_EQ(candidates.size(), 4u);
  r = client_->Post("/sessions/" + id + "/analyze");
  ASSERT_EQ(r->status, 200);
  EXPECT_EQ(json::parse(r->body)["metrics"].size(), 4u);

  for (const char* key : {"gp", "ui"}) {
    r = client_->Get("/sessions/" + id + "/ranking?key=" + key);
    ASSERT_EQ(r->status, 200);
    const auto body = json::parse(r->body);
    EXPECT_EQ(body["key"], key);
    EXPECT_EQ(body["order"].size(), 4u);
  }
  r = client_->Get("/sessions/" + id + "/ranking?key=composite&lambda=1");
  const auto composite = json::parse(r->body);
  const auto gp = json::parse(client_->Get("/sessions/" + id + "/ranking?key=gp")->body);
  EXPECT_EQ(composite["order"], gp["order"]);
  EXPECT_EQ(composite["lambda"], 1.0);

  const std::string chosen = gp["order"][0];
  r = client_->Post("/sessions/" + id + "/select", json{{"candidate_id", chosen}}.dump(), "application/json");
  ASSERT_EQ(r->status, 200) << r->body;
  EXPECT_EQ(json::parse(r->body)["state"], "Submitted");
  expect_problem(client_->Post("/sessions/" + id + "/select", json{{"candidate_id", chosen}}.dump(), "application/json"),
                 409, "IllegalTransition");

  r = client_->Get("/sessions/" + id);
  ASSERT_EQ(r->status, 200);
  const auto doc = json::parse(r->body);
  EXPECT_EQ(doc["state"], "Submitted");
  EXPECT_EQ(doc["selection"], chosen);
}

TEST_F(RestTest, BlobsByDigest) {
  const std::string id = created_id();
  client_->Post("/sessions/" + id + "/detect");
  const auto cands = json::parse(client_->Post("/sessions/" + id + "/modify")->body)["candidates"];
  expect_problem(client_->Get("/blobs/" + image_.digest()), 403, "Forbidden");
  const std::string d = cands[0]["digest"];
  auto r = client_->Get("/blobs/" + d);
  ASSERT_EQ(r->status, 200);
  EXPECT_EQ(r->get_header_value("Content-Type"), "image/png");
  EXPECT_EQ(decode_png(r->body).digest(), d);
  expect_problem(client_->Get("/blobs/" + std::string(64, '0')), 404, "NotFound");
  EXPECT_EQ(client_->Get("/blobs/..%2Fsessions")->status, 404);
}

TEST_F(RestTest, ErrorMapping) {
  expect_problem(create("   "), 400, "EmptyPrompt");
  httplib::MultipartFormDataItems junk = {{"image", "not a png", "x.png", "image/png"}, {"prompt", "Where?", "", ""}};
  expect_problem(client_->Post("/sessions", junk), 400, "DecodeError");
  expect_problem(create("Where?", "{\"image\": 1}"), 400, "ParseError");
  expect_problem(client_->Get("/sessions/s-unknown"), 404, "NotFound");

  const std::string id = created_id();
  expect_problem(client_->Get("/sessions/" + id + "/ranking"), 409, "NotAnalyzed");
  expect_problem(client_->Post("/sessions/" + id + "/modify"), 409, "IllegalTransition");
  client_->Post("/sessions/" + id + "/detect");
  expect_problem(client_->Post("/sessions/" + id + "/detect"), 409, "IllegalTransition");
  client_->Post("/sessions/" + id + "/modify");
  client_->Post("/sessions/" + id + "/analyze");
  expect_problem(client_->Get("/sessions/" + id + "/ranking?key=composite&lambda=2"), 400, "DomainError");
  expect_problem(client_->Get("/sessions/" + id + "/ranking?key=bogus"), 400, "DomainError");
  expect_problem(client_->Post("/sessions/" + id + "/select", R"({"candidate_id": "nope"})", "application/json"), 404,
                 "UnknownCandidate");
  expect_problem(client_->Post("/sessions/" + id + "/select", "{", "application/json"), 400, "ParseError");
}

TEST_F(RestTest, BackendFailureMapsTo502) {
  stop();
  auto failing = std::make_shared<ppa::testing::RecordingTransport>(
      [](const OutboundRequest&, const std::string&) { return TransportResponse{500, "down"}; });
  parts_ = ppa::testing::make_parts(failing);
  ppa::testing::TempDir other;
  service_ = ppa::testing::make_service(other.path(), parts_);
  start();

  const std::string id = created_id();
  client_->Post("/sessions/" + id + "/detect");
  client_->Post("/sessions/" + id + "/modify");
  expect_problem(client_->Post("/sessions/" + id + "/analyze"), 502, "AllCandidatesFailed");
}

}  // namespace
}  // namespace ppa
