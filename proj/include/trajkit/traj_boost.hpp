// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "trajkit/gateway.hpp"
#include "trajkit/prompts.hpp"
#include "trajkit/screenshots.hpp"
#include "trajkit/trajectory.hpp"

namespace trajkit {

/// Everything needed to decide step k: the task, the current observation
/// and the (thought, action) history of the k preceding trunk steps.
struct EnvironmentSnapshot {
  std::string task;
  Observation observation;
  std::vector<HistoryEntry> history;
  bool operator==(const EnvironmentSnapshot&) const = default;
};

enum class NodeSource { Human, Synthesized };
std::string_view node_source_name(NodeSource s);

struct DecisionNode {
  std::string thought;
  Action action;
  NodeSource source = NodeSource::Human;
  std::optional<int> sample_index;  // synthesized only
  std::string raw_text;             // synthesized only: the model reply
  bool operator==(const DecisionNode&) const = default;
};

struct TreeStep {
  EnvironmentSnapshot snapshot;
  DecisionNode human;
  std::vector<DecisionNode> leaves;  // never executed
  bool operator==(const TreeStep&) const = default;
};

/// A sample that produced no node (gateway error or unparseable reply).
struct DropRecord {
  std::string trajectory_id;
  int step_index = 0;
  int sample_index = 0;
  std::string reason;
  std::string raw_text;
  bool operator==(const DropRecord&) const = default;
};

struct TrajTree {
  std::string trajectory_id;
  std::string task;
  int n = 0;  // samples requested per step
  std::vector<TreeStep> trunk;
  std::vector<DropRecord> drops;
  bool operator==(const TrajTree&) const = default;

  std::size_t leaf_count() const;
  /// Leaves whose (thought, action) repeats an earlier leaf of the same step.
  std::size_t duplicate_leaves() const;
};

/// Throws MissingThought if any step before k lacks a thought, and
/// PreconditionError if k is out of range.
EnvironmentSnapshot build_snapshot(const Trajectory& t, int k);

struct BoostConfig {
  int n = 9;
  double temperature = 1.0;
  int max_tokens = 1024;
  int step_parallelism = 4;
  std::optional<std::filesystem::path> checkpoint_dir;
  ImageProvider images;  // empty: requests carry no image
};

ChatRequest build_boost_prompt(const EnvironmentSnapshot& snapshot, const BoostConfig& config);

struct BoostStepResult {
  std::vector<DecisionNode> nodes;
  std::vector<DropRecord> drops;  // trajectory_id and step_index left for the caller
};

/// Samples `config.n` decisions for one snapshot. Unparseable replies and
/// failed slots become drop records; BatchAborted propagates.
BoostStepResult boost_step(const EnvironmentSnapshot& snapshot, Gateway& gateway, const BoostConfig& config);

/// One TreeStep per trajectory step, each with up to n synthesized leaves.
/// Steps are sampled concurrently. Completed steps are checkpointed, so a
/// rerun after StageAborted only samples the missing ones.
TrajTree boost_trajectory(const Trajectory& t, Gateway& gateway, const BoostConfig& config);

nlohmann::json node_to_json(const DecisionNode& n);
DecisionNode node_from_json(const nlohmann::json& j);

/// One header line, then one TreeStep per line. Drop records go to a
/// separate stream. Snapshot histories are rebuilt from the trunk on load.
void save_tree(const TrajTree& tree, std::ostream& tree_out, std::ostream& drops_out);
TrajTree load_tree(std::istream& tree_in, std::istream* drops_in = nullptr);

/// Markdown view of the trunk with its leaves under each step.
std::string export_tree_markdown(const TrajTree& tree);

/// Directory holding `<id>.jsonl` trees and `<id>.drops.jsonl` sidecars.
class TreeStore {
 public:
  explicit TreeStore(std::filesystem::path dir);
  std::vector<std::string> ids() const;
  bool contains(const std::string& id) const;
  TrajTree load(const std::string& id) const;
  std::vector<TrajTree> load_all() const;
  void save(const TrajTree& tree) const;
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
};

}  // namespace trajkit
