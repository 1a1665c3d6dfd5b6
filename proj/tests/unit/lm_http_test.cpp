/*
 * Copyright 2026 The AMRule Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "amrule/error.hpp"
#include "amrule/json_util.hpp"
#include "amrule/lm_client.hpp"
#include "httplib.h"

namespace amrule::prompt_rules {
namespace {

// In-process LM server backed by the stub, with injectable failures.
class FakeLmServer {
 public:
  FakeLmServer() {
    server_.Post("/v1/fill_mask", [this](const httplib::Request& req, httplib::Response& res) {
      if (failures_left_ > 0) {
        --failures_left_;
        res.status = 503;
        return;
      }
      if (garbage_) {
        res.set_content("{\"tokens\": 1}", "application/json");
        return;
      }
      const auto d = stub_.FillMask(Json::parse(req.body).at("prompt").get<std::string>());
      res.set_content(Json{{"tokens", d.tokens}, {"probs", d.probs}}.dump(), "application/json");
    });
    server_.Post("/v1/embed", [this](const httplib::Request& req, httplib::Response& res) {
      ++embed_calls_;
      auto v = stub_.Embed(Json::parse(req.body).at("text").get<std::string>());
      if (short_vectors_) v.resize(3);
      res.set_content(Json{{"vector", v}}.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeLmServer() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

  std::atomic<int> failures_left_{0};
  std::atomic<int> embed_calls_{0};
  bool garbage_ = false;
  bool short_vectors_ = false;

 private:
  StubLmClient stub_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

constexpr char kPrompt[] =
    "Lamp: Acme lamp. Bulb: Acme bulb. The lamp is compatible with the bulb because their "
    "brands are [MASK].";

HttpLmOptions Quick(int retries) {
  HttpLmOptions o;
  o.retries = retries;
  o.timeout_seconds = 2.0;
  return o;
}

TEST(HttpLmClient, AgreesWithStubOverTheWire) {
  FakeLmServer server;
  HttpLmClient client(server.url(), Quick(0));
  StubLmClient stub;
  const auto d = client.FillMask(kPrompt);
  EXPECT_EQ(d.tokens, stub.FillMask(kPrompt).tokens);
  EXPECT_EQ(d.probs, stub.FillMask(kPrompt).probs);
  EXPECT_EQ(client.Embed("their brands are same."), stub.Embed("their brands are same."));
}

TEST(HttpLmClient, RetriesServerErrors) {
  FakeLmServer server;
  server.failures_left_ = 2;
  HttpLmClient client(server.url(), Quick(3));
  EXPECT_NO_THROW(client.FillMask(kPrompt));
  EXPECT_EQ(server.failures_left_, 0);
}

TEST(HttpLmClient, ExhaustedRetriesAreTransportErrors) {
  FakeLmServer server;
  server.failures_left_ = 5;
  HttpLmClient client(server.url(), Quick(1));
  try {
    client.FillMask(kPrompt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTransport);
  }
  EXPECT_EQ(server.failures_left_, 3);  // two attempts consumed
}

TEST(HttpLmClient, MalformedBodyIsProtocolError) {
  FakeLmServer server;
  server.garbage_ = true;
  HttpLmClient client(server.url(), Quick(0));
  try {
    client.FillMask(kPrompt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kProtocol);
  }
}

TEST(HttpLmClient, WrongEmbeddingWidthIsProtocolError) {
  FakeLmServer server;
  server.short_vectors_ = true;
  HttpLmClient client(server.url(), Quick(0));
  EXPECT_THROW(client.Embed("x"), Error);
}

TEST(HttpLmClient, UnreachableHostIsTransportError) {
  int port = 0;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }  // closed again, so nothing listens there
  HttpLmClient client("http://127.0.0.1:" + std::to_string(port), Quick(1));
  try {
    client.Embed("x");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTransport);
  }
}

TEST(HttpLmClient, CacheAvoidsRepeatCalls) {
  FakeLmServer server;
  CachedLmClient cached(std::make_shared<HttpLmClient>(server.url(), Quick(0)));
  cached.Embed("same text");
  cached.Embed("same text");
  EXPECT_EQ(server.embed_calls_, 1);
}

TEST(HttpLmClient, NegativeRetriesRejected) {
  EXPECT_THROW(HttpLmClient("http://127.0.0.1:1", Quick(-1)), Error);
}

}  // namespace
}  // namespace amrule::prompt_rules
