// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "trajkit/traj_boost.hpp"

namespace trajkit {

struct Provenance {
  std::string trajectory_id;
  int step_index = 0;
  NodeSource source = NodeSource::Human;
  std::optional<int> sample_index;
  bool operator==(const Provenance&) const = default;
};

/// One supervised example in the inference scaffold's exact format.
struct TrainingInstance {
  std::string system_text;
  std::string task;
  std::string history_text;
  std::string image_ref;
  std::string target_text;  // thought + "\nAction: " + canonical action
  Provenance provenance;
  bool operator==(const TrainingInstance&) const = default;

  /// The user turn exactly as the agent runtime would send it.
  std::string user_text() const;
};

/// `s` synthesized decisions per step on top of the human one, so the data
/// grows by the scaling factor s' = s + 1.
struct BoostSelection {
  int s = 9;
  std::uint64_t seed = 0;

  int s_prime() const { return s + 1; }
  static BoostSelection from_scaling_factor(int s_prime, std::uint64_t seed);
};

struct FlattenOptions {
  /// Rough token budget per instance; history entries are dropped oldest
  /// first until the estimate fits. 0 disables the cap.
  int context_token_cap = 8192;
  /// Estimated cost of one 1280x720 screenshot.
  int image_tokens = 1200;
};

/// About four bytes per token.
int estimate_tokens(std::string_view text);

/// Human trunk decisions before step k rendered as the scaffold's history.
/// Leaves never appear; k = 0 gives the "None" marker.
std::string build_history_text(const TrajTree& tree, int k);

/// Fixed pseudo-random order of the leaves of step k. Taking a prefix of
/// length s gives nested subsets as s grows.
std::vector<std::size_t> leaf_order(const TrajTree& tree, int k, std::uint64_t seed);

/// For every trunk step: the human decision plus min(s, leaves) sampled
/// leaves, ordered by (step, human first, sample index).
std::vector<TrainingInstance> flatten(const TrajTree& tree, const BoostSelection& sel,
                                      const FlattenOptions& options = {});

/// Flattens many trees; output is the in-order concatenation.
std::vector<TrainingInstance> flatten_corpus_serial(std::span<const TrajTree> trees, const BoostSelection& sel,
                                                    const FlattenOptions& options = {});
/// OpenMP version of flatten_corpus_serial with identical output.
std::vector<TrainingInstance> flatten_corpus(std::span<const TrajTree> trees, const BoostSelection& sel,
                                             const FlattenOptions& options = {});

enum class DatasetFormat { Messages, ShareGpt };
DatasetFormat dataset_format_from_name(std::string_view name);
std::string_view dataset_format_name(DatasetFormat f);

struct ExportOptions {
  DatasetFormat format = DatasetFormat::Messages;
  BoostSelection selection;
  FlattenOptions flatten;
  /// When set, every image_ref must satisfy it or DanglingImageRef is thrown.
  std::function<bool(const std::string&)> image_exists;
};

struct DatasetManifest {
  std::size_t count = 0;
  std::size_t human = 0;
  std::size_t synthesized = 0;
  std::uint64_t seed = 0;
  int s = 0;
  int s_prime = 1;
  std::string format;
  std::string config_hash;
  std::string content_sha256;

  nlohmann::json to_json() const;
};

nlohmann::json instance_to_json(const TrainingInstance& inst, DatasetFormat format);

/// Writes one record per line and returns the manifest. Output bytes depend
/// only on the instances and options.
DatasetManifest export_dataset(std::span<const TrainingInstance> instances, std::ostream& out,
                               const ExportOptions& options);

/// Markdown summary of a manifest plus the first `preview` instances.
std::string export_dataset_markdown(const DatasetManifest& manifest, std::span<const TrainingInstance> instances,
                                    std::size_t preview = 3);

}  // namespace trajkit
