// SPDX-License-Identifier: Apache-2.0
#include "trajkit/config.hpp"

#include <cstdlib>
#include <fstream>

#include "trajkit/errors.hpp"

namespace trajkit {

using nlohmann::json;

EnvLookup process_env() {
  return [](const std::string& name) -> std::optional<std::string> {
    const char* v = std::getenv(name.c_str());
    if (!v || !*v) return std::nullopt;
    return std::string(v);
  };
}

json PipelineConfig::stage(const std::string& name) const {
  if (stages.is_object() && stages.contains(name)) return stages[name];
  return json::object();
}

PipelineConfig resolve_config(const std::optional<std::filesystem::path>& file, const ConfigOverrides& flags,
                              const EnvLookup& env) {
  json doc = json::object();
  std::filesystem::path base = ".";
  if (file) {
    std::ifstream in(*file);
    if (!in) throw ConfigError("cannot open config file '" + file->string() + "'");
    try {
      doc = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError("config file '" + file->string() + "': " + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config file must hold a JSON object");
    base = file->parent_path().empty() ? std::filesystem::path(".") : file->parent_path();
  }
  auto from_file_path = [&](const std::string& v) {
    std::filesystem::path p(v);
    return p.is_relative() ? base / p : p;
  };

  PipelineConfig c;
  const json gw = doc.value("gateway", json::object());
  c.gateway = gateway_config_from_json(gw);

  auto pick = [&](const std::optional<std::string>& flag, const json& section, const char* key,
                  const std::string& env_name) -> std::optional<std::pair<std::string, bool>> {
    if (flag) return std::pair{*flag, false};
    if (section.contains(key)) return std::pair{section[key].get<std::string>(), true};
    if (auto v = env(env_name)) return std::pair{*v, false};
    return std::nullopt;
  };

  try {
    if (auto v = pick(flags.workspace, doc, "workspace", "TRAJKIT_WORKSPACE")) {
      c.workspace = v->second ? from_file_path(v->first) : std::filesystem::path(v->first);
    }
    if (auto v = pick(flags.endpoint, gw, "endpoint", "TRAJKIT_ENDPOINT")) c.gateway.endpoint = v->first;
    if (auto v = pick(flags.model, gw, "model", "TRAJKIT_MODEL")) c.gateway.model = v->first;
    if (auto v = pick(flags.mock_script, gw, "mock_script", "TRAJKIT_MOCK_SCRIPT")) {
      c.gateway.mock_script = v->second ? from_file_path(v->first) : std::filesystem::path(v->first);
    }
    if (c.gateway.audit_log && gw.contains("audit_log")) c.gateway.audit_log = from_file_path(gw["audit_log"]);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.stages = doc.value("stages", json::object());
  if (!c.stages.is_object()) throw ConfigError("config 'stages' must be an object");
  return c;
}

}  // namespace trajkit
