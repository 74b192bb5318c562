// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "trajkit/gateway.hpp"
#include "trajkit/trajectory.hpp"

namespace trajkit {

// Rule names as they appear in reports.
inline constexpr std::string_view kRuleTrackerUi = "tracker-ui";
inline constexpr std::string_view kRuleDuplicateAction = "duplicate-action";
inline constexpr std::string_view kRuleUnresolvableScreenshot = "unresolvable-screenshot";
inline constexpr std::string_view kRuleEmptyAfterFilter = "empty-after-filter";
inline constexpr std::string_view kRuleMaxSteps = "max-steps";
inline constexpr std::string_view kRuleFailTerminated = "fail-terminated";

struct StepFilterRules {
  bool tracker_ui = true;
  /// Clicks inside any of these regions hit the recorder's own window.
  std::vector<Rect> tracker_regions;
  /// Element names of the recorder's controls; compared case-insensitively.
  std::vector<std::string> tracker_elements{"Start", "Finish", "Fail", "Next Task", "Previous Task", "Bad Task"};

  /// Coordinate action identical to the last kept step.
  bool duplicate_action = true;

  bool unresolvable_screenshot = true;
  /// Returns true when a screenshot reference can be loaded. Unset: every
  /// reference counts as resolvable.
  std::function<bool(const std::string&)> screenshot_exists;
};

StepFilterRules step_filter_rules_from_json(const nlohmann::json& j);

struct FilterReport {
  std::string trajectory_id;
  std::vector<std::pair<int, std::string>> dropped_steps;  // original index, rule
  std::optional<std::string> dropped_trajectory;
  bool operator==(const FilterReport&) const = default;

  bool empty() const { return dropped_steps.empty() && !dropped_trajectory; }
};

nlohmann::json filter_report_to_json(const FilterReport& r);

/// Drops steps matched by the enabled rules and renumbers the rest. Each
/// step is checked against the last kept step, so the result is a fixed
/// point: filtering it again drops nothing.
std::pair<Trajectory, FilterReport> filter_steps(const Trajectory& t, const StepFilterRules& rules);

struct TrajectoryFilterConfig {
  StepFilterRules steps;
  int max_steps = 100;
  bool success_only = false;
};

TrajectoryFilterConfig trajectory_filter_config_from_json(const nlohmann::json& j);

struct FilterOutcome {
  std::vector<Trajectory> kept;
  std::vector<FilterReport> reports;  // one per input, in input order
};

FilterOutcome filter_trajectories(std::span<const Trajectory> ts, const TrajectoryFilterConfig& config);

/// Jaccard similarity of word n-gram sets (see kernels::overlap_score).
double ngram_overlap(std::string_view a, std::string_view b, int n);

/// Cosine of the two embeddings, each normalised first.
double semantic_similarity(std::string_view a, std::string_view b, EmbeddingPort& embedder);

struct DecontaminationThresholds {
  int ngram_n = 3;
  double ngram_max = 0.5;
  double cosine_max = 0.85;
};

struct NamedTask {
  std::string id;
  std::string text;
};

struct DecontaminationVerdict {
  std::string task_id;
  std::optional<std::string> matched_benchmark_task;
  double ngram_score = 0.0;
  std::optional<double> semantic_score;  // absent when run without an embedder
  bool removed = false;
};

nlohmann::json verdict_to_json(const DecontaminationVerdict& v);

struct DecontaminationOptions {
  DecontaminationThresholds thresholds;
  /// Null: n-gram branch only.
  EmbeddingPort* embedder = nullptr;
  /// Use the serial kernels (reference path).
  bool serial = false;
};

/// One verdict per task, sorted by task id. A task is removed when its best
/// n-gram score or best cosine reaches the threshold. The matched benchmark
/// task is the argmax of the score that triggered removal (n-gram first),
/// otherwise of the n-gram score. Embedding failures are rethrown as
/// EmbedderUnavailable carrying every task id.
std::vector<DecontaminationVerdict> decontaminate(std::span<const NamedTask> tasks,
                                                  std::span<const NamedTask> benchmark,
                                                  const DecontaminationOptions& options = {});

/// Plain text (one task per line, id = line number) or a JSON array of
/// strings or {"id", "task"} objects.
std::vector<NamedTask> load_benchmark_tasks(const std::filesystem::path& path);

}  // namespace trajkit
