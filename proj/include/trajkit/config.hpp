// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include "json.hpp"
#include "trajkit/gateway.hpp"

namespace trajkit {

/// Values given on the command line; they win over everything else.
struct ConfigOverrides {
  std::optional<std::string> workspace;
  std::optional<std::string> endpoint;
  std::optional<std::string> model;
  std::optional<std::string> mock_script;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

/// Reads the process environment.
EnvLookup process_env();

struct PipelineConfig {
  std::filesystem::path workspace = "workspace";
  GatewayConfig gateway;
  nlohmann::json stages = nlohmann::json::object();

  /// Settings for one stage; an empty object when absent.
  nlohmann::json stage(const std::string& name) const;
};

/// Precedence per setting: flags, then the config file, then the
/// environment (TRAJKIT_WORKSPACE, TRAJKIT_ENDPOINT, TRAJKIT_MODEL,
/// TRAJKIT_MOCK_SCRIPT), then built-in defaults. Relative paths in the file
/// resolve against the file's directory. Throws ConfigError.
PipelineConfig resolve_config(const std::optional<std::filesystem::path>& file, const ConfigOverrides& flags,
                              const EnvLookup& env = process_env());

}  // namespace trajkit
