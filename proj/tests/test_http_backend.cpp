// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <atomic>
#include <thread>

#include "httplib.h"
#include "support.hpp"
#include "trajkit/errors.hpp"
#include "trajkit/gateway.hpp"

using namespace trajkit;
using nlohmann::json;

namespace {

/// Local server speaking the chat/embeddings schema; behaviour is chosen by
/// the first word of the user text.
class FakeServer {
 public:
  FakeServer() {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& rq, httplib::Response& rs) {
      last_body = json::parse(rq.body);
      last_auth = rq.get_header_value("Authorization");
      const auto& content = last_body["messages"].back()["content"];
      const std::string text = content[0]["text"];
      if (text == "limit") {
        rs.status = 429;
        return;
      }
      if (text == "bad") {
        rs.status = 400;
        rs.set_content("nope", "text/plain");
        return;
      }
      if (text == "garbage") {
        rs.set_content("{not json", "application/json");
        return;
      }
      if (text == "parts") {
        rs.set_content(R"({"choices":[{"message":{"content":[{"type":"text","text":"a"},{"type":"text","text":"b"}]}}]})",
                       "application/json");
        return;
      }
      json reply = {{"choices", {{{"message", {{"role", "assistant"}, {"content", "echo: " + text}}}}}}};
      rs.set_content(reply.dump(), "application/json");
    });
    server_.Post("/v1/embeddings", [](const httplib::Request& rq, httplib::Response& rs) {
      const auto body = json::parse(rq.body);
      json data = json::array();
      // Reverse order to exercise index handling.
      const auto& input = body["input"];
      for (int i = static_cast<int>(input.size()) - 1; i >= 0; --i) {
        data.push_back({{"index", i}, {"embedding", {static_cast<double>(i), 1.0}}});
      }
      rs.set_content(json{{"data", data}}.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeServer() {
    server_.stop();
    thread_.join();
  }
  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

  json last_body;
  std::string last_auth;

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

ChatRequest req(std::string text) {
  ChatRequest r;
  r.system_text = "sys";
  r.user_text = std::move(text);
  return r;
}

}  // namespace

TEST_CASE("http backend round trip") {
  FakeServer server;
  auto cfg = trajkit::testing::fast_config();
  cfg.endpoint = server.endpoint();
  cfg.timeout_s = 5;
  cfg.api_key_env = "TRAJKIT_TEST_KEY";
  ::setenv("TRAJKIT_TEST_KEY", "secret", 1);
  OpenAiCompatibleBackend http(cfg);

  auto r = req("hi");
  r.images.push_back(make_payload(Image(2, 2), "x"));
  CHECK(http.chat(r) == "echo: hi");
  CHECK(server.last_auth == "Bearer secret");
  CHECK(server.last_body["model"] == "mock");
  CHECK(server.last_body["messages"][0]["role"] == "system");
  const auto& parts = server.last_body["messages"][1]["content"];
  CHECK(parts[1]["type"] == "image_url");
  CHECK(parts[1]["image_url"]["url"].get<std::string>().rfind("data:image/png;base64,", 0) == 0);

  CHECK(http.chat(req("parts")) == "ab");
  CHECK_THROWS_AS(http.chat(req("limit")), RateLimited);
  CHECK_THROWS_AS(http.chat(req("bad")), ProtocolError);
  CHECK_THROWS_AS(http.chat(req("garbage")), ProtocolError);

  const auto v = http.embed({"x", "y", "z"});
  REQUIRE(v.size() == 3);
  CHECK(v[2] == std::vector<double>{2.0, 1.0});
}

TEST_CASE("http backend through the gateway retries 429") {
  FakeServer server;
  auto cfg = trajkit::testing::fast_config();
  cfg.endpoint = server.endpoint();
  auto gw = make_gateway(cfg);
  CHECK(gw->complete(req("ok")) == "echo: ok");
  CHECK_THROWS_AS(gw->complete(req("limit")), RateLimited);
}

TEST_CASE("connection failure is a timeout") {
  auto cfg = trajkit::testing::fast_config();
  cfg.endpoint = "http://127.0.0.1:1/v1";
  cfg.timeout_s = 1;
  OpenAiCompatibleBackend http(cfg);
  CHECK_THROWS_AS(http.chat(req("x")), Timeout);
  CHECK_THROWS_AS(OpenAiCompatibleBackend([] {
                    GatewayConfig c;
                    c.endpoint = "no-scheme";
                    return c;
                  }()),
                  ConfigError);
}
