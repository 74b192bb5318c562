// SPDX-License-Identifier: Apache-2.0
#pragma once

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

struct ExecResult {
  bool applied = true;
  std::string reason;  // why the action was rejected, or a note
  bool operator==(const ExecResult&) const = default;
};

/// The boundary between the agent and whatever executes its actions.
class EnvironmentPort {
 public:
  virtual ~EnvironmentPort() = default;
  virtual Observation observe() = 0;
  virtual ExecResult execute(const Action& action) = 0;
  virtual Resolution resolution() const = 0;
};

enum class RunTerminal { Finished, Failed, StepLimit };
std::string_view run_terminal_name(RunTerminal t);
RunTerminal run_terminal_from_name(std::string_view name);

struct AgentState {
  std::string task;
  std::vector<HistoryEntry> history;  // text only; no past screenshots
  int step_count = 0;
  std::optional<RunTerminal> terminal;
};

struct AgentConfig {
  int max_steps = 30;
  ImageProvider images;  // empty: requests carry no image
  double temperature = 0.0;
  int max_tokens = 1024;
};

/// Scaffold system text and a user turn with the task, the textual
/// history and the current screenshot as the only image.
ChatRequest build_scaffold_prompt(const AgentState& state, const Observation& obs, const ImageProvider& images);

struct AgentDecision {
  std::string thought;
  Action action;
  /// Both the reply and the reprompted reply were unparseable; the action
  /// is a forced Fail that does not come from the model.
  bool protocol_failure = false;
  std::string raw_text;
  int model_calls = 0;
};

/// One completion parsed as a decision; one reprompt with a format reminder
/// on a parse failure, then a forced Fail. Gateway errors propagate.
AgentDecision decide(const AgentState& state, const Observation& obs, Gateway& gateway, const AgentConfig& config);

struct RunEntry {
  std::string observation_ref;
  std::string thought;
  Action action;
  std::optional<ExecResult> env_result;  // absent for Finish and Fail
  bool protocol_failure = false;
  double wall_ms = 0.0;
};

struct RunRecord {
  std::string task_id;
  std::string task;
  std::vector<RunEntry> entries;
  RunTerminal terminal = RunTerminal::StepLimit;

  /// True when the model itself emitted Fail at some step.
  bool model_emitted_fail() const;
};

/// observe, decide, record, execute until Finish, Fail or max_steps. Finish
/// and Fail are never executed. Exceptions from execute become rejected
/// results in the record.
RunRecord run_episode(EnvironmentPort& env, const std::string& task_id, const std::string& task, Gateway& gateway,
                      const AgentConfig& config);

/// Header record, then one record per entry. Without timing the output is
/// a pure function of the run's decisions.
void save_run_record(const RunRecord& r, std::ostream& out, bool include_timing = true);
RunRecord load_run_record(std::istream& in);
std::string export_run_markdown(const RunRecord& r);

}  // namespace trajkit
