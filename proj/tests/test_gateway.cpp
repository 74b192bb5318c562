// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>

#include "support.hpp"
#include "trajkit/errors.hpp"
#include "trajkit/gateway.hpp"
#include "trajkit/mock.hpp"

using namespace trajkit;
using trajkit::testing::mock_gateway;

namespace {

ChatRequest req(std::string user = "hello") {
  ChatRequest r;
  r.user_text = std::move(user);
  r.temperature = 1.0;
  return r;
}

MockRule rule(std::vector<std::string> replies) {
  MockRule r;
  r.replies = std::move(replies);
  return r;
}

}  // namespace

TEST_CASE("validate_request") {
  CHECK_THROWS_AS(validate_request(req("")), PreconditionError);
  auto r = req();
  r.images.resize(2);
  CHECK_THROWS_AS(validate_request(r), PreconditionError);
  r = req();
  r.temperature = -0.1;
  CHECK_THROWS_AS(validate_request(r), PreconditionError);
  r = req();
  r.max_tokens = 0;
  CHECK_THROWS_AS(validate_request(r), PreconditionError);
  CHECK_NOTHROW(validate_request(req()));
}

TEST_CASE("complete: scripted reply by hash") {
  auto b = std::make_shared<ScriptedBackend>();
  auto m = rule({"exact"});
  m.hash = prompt_hash(req("question"));
  b->add_rule(m);
  auto gw = mock_gateway(b);
  CHECK(gw->complete(req("question")) == "exact");
  CHECK_THROWS_AS(gw->complete(req("other")), ProtocolError);
}

TEST_CASE("complete: retries") {
  auto b = std::make_shared<ScriptedBackend>();
  auto flaky = rule({"ok"});
  flaky.contains = {"flaky"};
  flaky.fail_times = 2;
  b->add_rule(flaky);
  auto down = rule({"never"});
  down.contains = {"down"};
  down.always_fail = true;
  b->add_rule(down);
  auto broken = rule({"never"});
  broken.contains = {"broken"};
  broken.always_fail = true;
  broken.failure = "protocol";
  b->add_rule(broken);
  auto gw = mock_gateway(b);

  const auto c = gw->complete_detailed(req("flaky"));
  CHECK(c.text == "ok");
  CHECK(c.attempts == 3);

  const int before = b->calls();
  CHECK_THROWS_AS(gw->complete(req("down")), RateLimited);
  CHECK(b->calls() - before == 3);

  const int before2 = b->calls();
  CHECK_THROWS_AS(gw->complete(req("broken")), ProtocolError);
  CHECK(b->calls() - before2 == 1);
}

TEST_CASE("sample_n: slot order, singleton, limiter") {
  auto b = std::make_shared<ScriptedBackend>();
  auto r = rule({"sample {slot}"});
  r.delay_ms = 5;
  b->add_rule(r);
  auto gw = mock_gateway(b, 2);
  const auto out = gw->sample_n(req(), 9);
  REQUIRE(out.size() == 9);
  for (int i = 0; i < 9; ++i) CHECK(out[static_cast<size_t>(i)].text == "sample " + std::to_string(i));
  CHECK(b->peak_concurrency() <= 2);
  CHECK(gw->peak_in_flight() <= 2);

  const auto one = gw->sample_n(req(), 1);
  REQUIRE(one.size() == 1);
  CHECK(one[0].text == gw->complete(req()));
  CHECK_THROWS_AS(gw->sample_n(req(), 0), PreconditionError);
}

TEST_CASE("sample_n: deterministic across runs") {
  std::vector<std::string> first;
  for (int run = 0; run < 5; ++run) {
    auto b = std::make_shared<ScriptedBackend>();
    auto r = rule({"a{slot}"});
    r.delay_ms = (run * 3) % 4;
    b->add_rule(r);
    std::vector<std::string> texts;
    for (const auto& s : mock_gateway(b, 1 + run)->sample_n(req(), 9)) texts.push_back(*s.text);
    if (run == 0) first = texts;
    CHECK(texts == first);
  }
}

TEST_CASE("sample_n: per-slot errors and BatchAborted") {
  auto b = std::make_shared<ScriptedBackend>();
  auto bad = rule({"x"});
  bad.slot = 3;
  bad.always_fail = true;
  b->add_rule(bad);
  b->add_rule(rule({"fine"}));
  auto gw = mock_gateway(b);
  const auto out = gw->sample_n(req(), 5);
  CHECK_FALSE(out[3].ok());
  CHECK(out[3].error.find("RateLimited") != std::string::npos);
  CHECK(out[4].text == "fine");

  auto all_bad = std::make_shared<ScriptedBackend>();
  auto r = rule({"x"});
  r.always_fail = true;
  all_bad->add_rule(r);
  CHECK_THROWS_AS(mock_gateway(all_bad)->sample_n(req(), 3), BatchAborted);
}

TEST_CASE("embed") {
  auto b = std::make_shared<ScriptedBackend>();
  b->set_embedding("a", {1.0, 2.0});
  auto gw = mock_gateway(b);
  CHECK(gw->embed({}).empty());
  CHECK(gw->embed({"a", "a"}) == std::vector<std::vector<double>>{{1.0, 2.0}, {1.0, 2.0}});
  CHECK_THROWS_AS(gw->embed({"unknown"}), EmbedderUnavailable);
  b->set_embedding_fallback("hash");
  const auto v = gw->embed({"some text", "some text"});
  CHECK(v[0] == v[1]);
  CHECK(v[0].size() == 64);

  Gateway no_embedder(trajkit::testing::fast_config(), b);
  CHECK_THROWS_AS(no_embedder.embed({"a"}), EmbedderUnavailable);
}

TEST_CASE("audit log") {
  trajkit::testing::TempDir dir;
  auto cfg = trajkit::testing::fast_config();
  cfg.audit_log = dir / "audit.jsonl";
  auto b = std::make_shared<ScriptedBackend>();
  auto r = rule({"ok"});
  r.fail_times = 1;
  b->add_rule(r);
  Gateway gw(cfg, b);
  gw.complete(req("audited"));
  std::ifstream in(dir / "audit.jsonl");
  std::vector<nlohmann::json> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(nlohmann::json::parse(line));
  REQUIRE(lines.size() == 2);
  CHECK(lines[0].contains("error"));
  CHECK(lines[1]["response"] == "ok");
  CHECK(lines[1]["user"] == "audited");
  CHECK(lines[1]["attempt"] == 2);
}

TEST_CASE("gateway config json") {
  const auto c = gateway_config_from_json(
      {{"endpoint", "http://localhost:1/v1"}, {"model", "m"}, {"concurrency_limit", 3}, {"retry", {{"max_attempts", 5}, {"backoff_ms", {1, 2}}}}});
  CHECK(c.model == "m");
  CHECK(c.concurrency_limit == 3);
  CHECK(c.retry.max_attempts == 5);
  CHECK(c.retry.backoff.size() == 2);
  CHECK(gateway_config_from_json(gateway_config_to_json(c)).retry.backoff == c.retry.backoff);
  CHECK_THROWS_AS(gateway_config_from_json({{"concurrency_limit", 0}}), ConfigError);
  CHECK_THROWS_AS(gateway_config_from_json({{"api_key", "sk-..."}}), ConfigError);
  CHECK_THROWS_AS(gateway_config_from_json({{"timeout_s", "soon"}}), ConfigError);
  CHECK_THROWS_AS(ConcurrencyLimiter(0), ConfigError);
}
