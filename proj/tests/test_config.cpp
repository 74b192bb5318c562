// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>
#include <map>

#include "support.hpp"
#include "trajkit/config.hpp"
#include "trajkit/errors.hpp"

using namespace trajkit;
using trajkit::testing::TempDir;

namespace {

EnvLookup env_of(std::map<std::string, std::string> vars) {
  return [vars = std::move(vars)](const std::string& k) -> std::optional<std::string> {
    auto it = vars.find(k);
    if (it == vars.end()) return std::nullopt;
    return it->second;
  };
}

}  // namespace

TEST_CASE("defaults") {
  const auto c = resolve_config(std::nullopt, {}, env_of({}));
  CHECK(c.workspace == "workspace");
  CHECK(c.gateway.concurrency_limit == 4);
  CHECK_FALSE(c.gateway.mock_script);
  CHECK(c.stage("boost").empty());
}

TEST_CASE("precedence: flag > file > env > default") {
  TempDir dir;
  {
    std::ofstream(dir / "cfg.json") << R"({"workspace": "ws-file", "gateway": {"model": "file-model"},
                                           "stages": {"boost": {"n": 3}}})";
  }
  const auto env = env_of({{"TRAJKIT_WORKSPACE", "ws-env"}, {"TRAJKIT_MODEL", "env-model"},
                           {"TRAJKIT_ENDPOINT", "http://env:1/v1"}});

  auto c = resolve_config(dir / "cfg.json", {}, env);
  CHECK(c.workspace == dir / "ws-file");  // relative to the file
  CHECK(c.gateway.model == "file-model");
  CHECK(c.gateway.endpoint == "http://env:1/v1");
  CHECK(c.stage("boost")["n"] == 3);

  ConfigOverrides flags;
  flags.workspace = "ws-flag";
  flags.model = "flag-model";
  c = resolve_config(dir / "cfg.json", flags, env);
  CHECK(c.workspace == "ws-flag");
  CHECK(c.gateway.model == "flag-model");

  c = resolve_config(std::nullopt, {}, env);
  CHECK(c.workspace == "ws-env");
  CHECK(c.gateway.model == "env-model");
}

TEST_CASE("mock script path resolves against the file") {
  TempDir dir;
  { std::ofstream(dir / "cfg.json") << R"({"gateway": {"mock_script": "mocks/m.json"}})"; }
  const auto c = resolve_config(dir / "cfg.json", {}, env_of({{"TRAJKIT_MOCK_SCRIPT", "/elsewhere.json"}}));
  REQUIRE(c.gateway.mock_script);
  CHECK(*c.gateway.mock_script == dir / "mocks/m.json");
  CHECK(*resolve_config(std::nullopt, {}, env_of({{"TRAJKIT_MOCK_SCRIPT", "/elsewhere.json"}})).gateway.mock_script ==
        "/elsewhere.json");
}

TEST_CASE("errors") {
  TempDir dir;
  CHECK_THROWS_AS(resolve_config(dir / "missing.json", {}, env_of({})), ConfigError);
  { std::ofstream(dir / "bad.json") << "{not json"; }
  CHECK_THROWS_AS(resolve_config(dir / "bad.json", {}, env_of({})), ConfigError);
  { std::ofstream(dir / "arr.json") << "[]"; }
  CHECK_THROWS_AS(resolve_config(dir / "arr.json", {}, env_of({})), ConfigError);
  { std::ofstream(dir / "key.json") << R"({"gateway": {"api_key": "sk-1"}})"; }
  CHECK_THROWS_AS(resolve_config(dir / "key.json", {}, env_of({})), ConfigError);
  { std::ofstream(dir / "type.json") << R"({"workspace": 5})"; }
  CHECK_THROWS_AS(resolve_config(dir / "type.json", {}, env_of({})), ConfigError);
  { std::ofstream(dir / "stages.json") << R"({"stages": []})"; }
  CHECK_THROWS_AS(resolve_config(dir / "stages.json", {}, env_of({})), ConfigError);
}
