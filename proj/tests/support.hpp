// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <memory>
#include <random>
#include <string>

#include "trajkit/action.hpp"
#include "trajkit/gateway.hpp"
#include "trajkit/mock.hpp"
#include "trajkit/traj_boost.hpp"
#include "trajkit/trajectory.hpp"

namespace trajkit::testing {

std::filesystem::path fixture(const std::string& rel);

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

/// Gateway config with no retry sleeps.
GatewayConfig fast_config(int concurrency = 8);
std::shared_ptr<Gateway> mock_gateway(std::shared_ptr<ScriptedBackend> backend, int concurrency = 8);
std::shared_ptr<Gateway> mock_gateway_from_file(const std::string& fixture_rel, int concurrency = 8);

// Hand-rolled generators for property tests.
int uniform_int(std::mt19937_64& rng, int lo, int hi);  // inclusive
std::string random_word(std::mt19937_64& rng, int min_len = 1, int max_len = 8);
/// Any valid action of any variant, coordinates within `res`.
Action random_action(std::mt19937_64& rng, Resolution res = {});
/// Same, excluding Finish and Fail.
Action random_nonterminal_action(std::mt19937_64& rng, Resolution res = {});
/// Insert, delete, replace or duplicate random characters.
std::string mutate(const std::string& s, std::mt19937_64& rng);

/// `steps` steps, the last one Finish; thoughts filled when asked.
Trajectory synthetic_trajectory(const std::string& id, int steps, std::mt19937_64& rng, bool with_thoughts);

/// Tree over a thought-completed trajectory with `leaves` synthesized
/// non-terminal decisions per step, built without a gateway.
TrajTree synthetic_tree(const Trajectory& t, int leaves, std::mt19937_64& rng);

}  // namespace trajkit::testing
