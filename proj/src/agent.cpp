// SPDX-License-Identifier: Apache-2.0
#include "trajkit/agent.hpp"

#include <chrono>
#include <istream>
#include <ostream>
#include <sstream>

#include "trajkit/errors.hpp"

namespace trajkit {

using nlohmann::json;

std::string_view run_terminal_name(RunTerminal t) {
  switch (t) {
    case RunTerminal::Finished:
      return "finished";
    case RunTerminal::Failed:
      return "failed";
    case RunTerminal::StepLimit:
      return "step-limit";
  }
  return "step-limit";
}

RunTerminal run_terminal_from_name(std::string_view name) {
  if (name == "finished") return RunTerminal::Finished;
  if (name == "failed") return RunTerminal::Failed;
  if (name == "step-limit") return RunTerminal::StepLimit;
  throw SchemaError("unknown run terminal '" + std::string(name) + "'");
}

ChatRequest build_scaffold_prompt(const AgentState& state, const Observation& obs, const ImageProvider& images) {
  ChatRequest req;
  req.system_text = std::string(prompts::scaffold_system());
  req.user_text = prompts::scaffold_user(state.task, render_history(state.history));
  if (images) {
    if (auto img = images(obs)) req.images.push_back(std::move(*img));
  }
  return req;
}

AgentDecision decide(const AgentState& state, const Observation& obs, Gateway& gateway, const AgentConfig& config) {
  if (state.terminal) throw PreconditionError("decide called on a finished episode");
  auto req = build_scaffold_prompt(state, obs, config.images);
  req.temperature = config.temperature;
  req.max_tokens = config.max_tokens;

  AgentDecision d;
  std::string first_error;
  for (int attempt = 0; attempt < 2; ++attempt) {
    if (attempt == 1) req.user_text += "\n\n" + std::string(prompts::format_reminder());
    d.raw_text = gateway.complete(req);
    ++d.model_calls;
    try {
      auto parsed = parse_decision(d.raw_text);
      d.thought = std::move(parsed.thought);
      d.action = std::move(parsed.action);
      return d;
    } catch (const ActionParseError& e) {
      if (attempt == 0) first_error = e.what();
      else d.thought = "Protocol failure: unparseable reply after reprompt (" + first_error + "; " + e.what() + ")";
    }
  }
  d.action = actions::Fail{};
  d.protocol_failure = true;
  return d;
}

bool RunRecord::model_emitted_fail() const {
  for (const auto& e : entries) {
    if (!e.protocol_failure && std::holds_alternative<actions::Fail>(e.action)) return true;
  }
  return false;
}

RunRecord run_episode(EnvironmentPort& env, const std::string& task_id, const std::string& task, Gateway& gateway,
                      const AgentConfig& config) {
  if (config.max_steps < 1) throw PreconditionError("max_steps must be >= 1");
  RunRecord rec;
  rec.task_id = task_id;
  rec.task = task;
  AgentState state;
  state.task = task;

  while (!state.terminal) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto obs = env.observe();
    auto d = decide(state, obs, gateway, config);

    RunEntry entry;
    entry.observation_ref = obs.screenshot_ref;
    entry.thought = d.thought;
    entry.action = d.action;
    entry.protocol_failure = d.protocol_failure;
    state.history.push_back({d.thought, d.action});
    ++state.step_count;

    if (std::holds_alternative<actions::Finish>(d.action)) {
      state.terminal = RunTerminal::Finished;
    } else if (std::holds_alternative<actions::Fail>(d.action)) {
      state.terminal = RunTerminal::Failed;
    } else {
      try {
        entry.env_result = env.execute(d.action);
      } catch (const std::exception& e) {
        entry.env_result = ExecResult{false, std::string("environment fault: ") + e.what()};
      }
      if (state.step_count >= config.max_steps) state.terminal = RunTerminal::StepLimit;
    }
    entry.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    rec.entries.push_back(std::move(entry));
  }
  rec.terminal = *state.terminal;
  return rec;
}

void save_run_record(const RunRecord& r, std::ostream& out, bool include_timing) {
  out << json{{"record", "run"},
              {"task_id", r.task_id},
              {"task", r.task},
              {"terminal", std::string(run_terminal_name(r.terminal))},
              {"steps", r.entries.size()}}
             .dump()
      << '\n';
  for (std::size_t i = 0; i < r.entries.size(); ++i) {
    const auto& e = r.entries[i];
    json j = {{"record", "entry"},
              {"index", i},
              {"observation", e.observation_ref},
              {"thought", e.thought},
              {"action", render_action(e.action)},
              {"protocol_failure", e.protocol_failure}};
    if (include_timing) j["wall_ms"] = e.wall_ms;
    if (e.env_result) {
      j["env_result"] = {{"applied", e.env_result->applied}, {"reason", e.env_result->reason}};
    } else {
      j["env_result"] = nullptr;
    }
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("failed writing run record");
}

RunRecord load_run_record(std::istream& in) {
  RunRecord r;
  std::string line;
  bool header = false;
  int lineno = 0;
  try {
    while (std::getline(in, line)) {
      ++lineno;
      if (trim(line).empty()) continue;
      const auto j = json::parse(line);
      const auto kind = j.at("record").get<std::string>();
      if (kind == "run") {
        r.task_id = j.at("task_id").get<std::string>();
        r.task = j.at("task").get<std::string>();
        r.terminal = run_terminal_from_name(j.at("terminal").get<std::string>());
        header = true;
      } else if (kind == "entry") {
        RunEntry e;
        e.observation_ref = j.at("observation").get<std::string>();
        e.thought = j.at("thought").get<std::string>();
        e.action = parse_action(j.at("action").get<std::string>());
        e.protocol_failure = j.value("protocol_failure", false);
        e.wall_ms = j.value("wall_ms", 0.0);
        if (!j.at("env_result").is_null()) {
          e.env_result = ExecResult{j["env_result"].at("applied").get<bool>(), j["env_result"].at("reason").get<std::string>()};
        }
        r.entries.push_back(std::move(e));
      } else {
        throw SchemaError("line " + std::to_string(lineno) + ": unknown record '" + kind + "'");
      }
    }
  } catch (const json::exception& e) {
    throw SchemaError("run record line " + std::to_string(lineno) + ": " + e.what());
  }
  if (!header) throw SchemaError("run record has no header");
  return r;
}

std::string export_run_markdown(const RunRecord& r) {
  std::ostringstream md;
  md << "# Run " << r.task_id << "\n\n";
  md << "**Task:** " << r.task << "\n\n";
  md << "**Terminal:** " << run_terminal_name(r.terminal) << " after " << r.entries.size() << " steps\n\n";
  for (std::size_t i = 0; i < r.entries.size(); ++i) {
    const auto& e = r.entries[i];
    md << "## Step " << (i + 1) << "\n\n";
    md << "Screen: `" << e.observation_ref << "`\n\n";
    md << "**Thought:** " << e.thought << "\n\n";
    md << "**Action:** `" << render_action(e.action) << "`";
    if (e.protocol_failure) md << " (protocol failure)";
    md << "\n\n";
    if (e.env_result) {
      md << "Result: " << (e.env_result->applied ? "applied" : "rejected");
      if (!e.env_result->reason.empty()) md << " (" << e.env_result->reason << ")";
      md << "\n\n";
    }
  }
  return md.str();
}

}  // namespace trajkit
