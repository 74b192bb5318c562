// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "trajkit/agent.hpp"
#include "trajkit/sim_env.hpp"

namespace trajkit {

enum class Feasibility { Feasible, Infeasible };
std::string_view feasibility_name(Feasibility f);

/// Required state name and/or variable values.
struct StatePredicate {
  std::optional<std::string> state;
  std::map<std::string, std::string> variables;

  /// Never holds on a faulted environment.
  bool holds(const SimulatedEnvironment& env) const;
};

struct TaskSpec {
  std::string id;
  std::string app_category;
  std::string instruction;
  Feasibility feasibility = Feasibility::Feasible;
  std::shared_ptr<const Scenario> scenario;
  std::string scenario_key;  // tasks with the same key share a machine when not reset

  /// Setup applied after the restore, before validation.
  std::optional<std::string> init_state;
  std::map<std::string, std::string> init_variables;

  std::vector<StatePredicate> init_rules;
  /// Expected initial state described for the model judge; unset: no judge.
  std::optional<std::string> init_judge;

  /// Feasible tasks only. Infeasible tasks succeed iff the model emits Fail.
  std::optional<StatePredicate> success;
  std::optional<int> max_steps;
};

/// `base_dir` resolves a relative "scenario" path. Scenarios are shared
/// through `cache` (keyed by canonical path) when one is given.
TaskSpec task_spec_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir,
                             std::map<std::string, std::shared_ptr<const Scenario>>* cache = nullptr);

struct Suite {
  std::string name;
  std::vector<TaskSpec> tasks;
};

/// {"name": ..., "tasks": ["task.json" | {inline task}, ...]}; paths are
/// relative to the manifest.
Suite load_suite(const std::filesystem::path& manifest);

/// Independent per-attempt fault with probability p.
class FaultInjector {
 public:
  FaultInjector(double p, std::uint64_t seed);
  bool fire();

 private:
  double p_;
  std::mt19937_64 rng_;
};

/// Empty result: passed. Otherwise the reason for failing.
using InitValidator = std::function<std::optional<std::string>(SimulatedEnvironment&)>;
/// Applies the task's setup for attempt number `attempt` (1-based).
using InitConfigure = std::function<void(SimulatedEnvironment&, int attempt)>;

struct InitResult {
  bool ready = false;
  int attempts = 0;
  std::vector<std::string> failures;  // one per failed attempt
};

/// Up to max_attempts rounds of configure-then-validate. Validators are
/// ANDed. Every retry restarts from `restore_point`.
InitResult validate_init(SimulatedEnvironment& env, const SimulatedEnvironment::Snapshot& restore_point,
                         std::span<const InitValidator> validators, int max_attempts = 3,
                         const InitConfigure& configure = {});

/// Yes/no model judgement of the current screen.
InitValidator judge_validator(Gateway& gateway, std::string task, std::string expectation, ImageProvider images);

enum class TaskOutcomeKind { Success, Failure, InitFailure };
std::string_view outcome_name(TaskOutcomeKind k);

struct TaskOutcome {
  std::string task_id;
  std::string app_category;
  Feasibility feasibility = Feasibility::Feasible;
  TaskOutcomeKind outcome = TaskOutcomeKind::Failure;
  int steps_used = 0;
  int init_attempts = 0;
  std::optional<RunTerminal> terminal;
  std::string note;
  bool operator==(const TaskOutcome&) const = default;
};

struct EvalPolicy {
  bool include_infeasible = false;
  /// Init failures count against the agent; otherwise they leave the
  /// denominators.
  bool init_failure_counts = true;
  /// Restore each task's machine to its pristine snapshot first.
  bool reset_between_tasks = true;
  std::uint64_t seed = 0;
  double init_fault_probability = 0.0;
  int max_init_attempts = 3;
  /// Concurrent tasks; only used with reset_between_tasks.
  int parallelism = 1;
};

/// restore (per policy), validate_init, run_episode, evaluate. Gateway
/// errors during the episode become a failure with a note.
TaskOutcome run_task(const TaskSpec& spec, SimulatedEnvironment& env, const AgentConfig& agent, Gateway& gateway,
                     const EvalPolicy& policy, RunRecord* record_out = nullptr);

struct CategoryScore {
  int success = 0;
  int total = 0;
  double percent() const { return total == 0 ? 0.0 : 100.0 * success / total; }
};

struct EvalReport {
  std::string suite;
  std::vector<TaskOutcome> rows;  // sorted by task id
  std::map<std::string, CategoryScore> per_category;
  std::map<std::string, CategoryScore> per_feasibility;
  CategoryScore total;
  nlohmann::json config;

  nlohmann::json to_json() const;
  std::string to_markdown() const;
};

/// Scores rows under the policy: a row counts in its category and the total
/// unless it is an init failure and init failures do not count.
EvalReport make_report(std::string suite, std::vector<TaskOutcome> rows, const EvalPolicy& policy, int max_steps);

EvalReport run_suite(const Suite& suite, const AgentConfig& agent, Gateway& gateway, const EvalPolicy& policy);

}  // namespace trajkit
