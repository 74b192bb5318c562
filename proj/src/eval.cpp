// SPDX-License-Identifier: Apache-2.0
#include "trajkit/eval.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include "trajkit/errors.hpp"
#include "trajkit/hash.hpp"

namespace trajkit {

using nlohmann::json;

namespace {

StatePredicate predicate_from_json(const json& j) {
  StatePredicate p;
  if (j.contains("state")) p.state = j["state"].get<std::string>();
  if (j.contains("variables")) p.variables = j["variables"].get<std::map<std::string, std::string>>();
  return p;
}

std::string describe(const StatePredicate& p) {
  std::string s;
  if (p.state) s += "state=" + *p.state;
  for (const auto& [k, v] : p.variables) s += (s.empty() ? "" : ", ") + k + "=" + v;
  return s.empty() ? "(anything)" : s;
}

}  // namespace

std::string_view feasibility_name(Feasibility f) { return f == Feasibility::Feasible ? "feasible" : "infeasible"; }

bool StatePredicate::holds(const SimulatedEnvironment& env) const {
  if (env.faulted()) return false;
  if (state && env.state() != *state) return false;
  for (const auto& [k, v] : variables) {
    auto it = env.variables().find(k);
    if (it == env.variables().end() || it->second != v) return false;
  }
  return true;
}

TaskSpec task_spec_from_json(const json& j, const std::filesystem::path& base_dir,
                             std::map<std::string, std::shared_ptr<const Scenario>>* cache) {
  TaskSpec t;
  try {
    t.id = j.at("id").get<std::string>();
    t.app_category = j.value("app_category", std::string("General"));
    t.instruction = j.at("instruction").get<std::string>();
    const auto feas = j.value("feasibility", std::string("feasible"));
    if (feas == "feasible") {
      t.feasibility = Feasibility::Feasible;
    } else if (feas == "infeasible") {
      t.feasibility = Feasibility::Infeasible;
    } else {
      throw SchemaError("task '" + t.id + "': feasibility must be feasible or infeasible");
    }

    const auto& sc = j.at("scenario");
    if (sc.is_string()) {
      auto path = std::filesystem::path(sc.get<std::string>());
      if (path.is_relative()) path = base_dir / path;
      std::error_code ec;
      auto canon = std::filesystem::weakly_canonical(path, ec);
      t.scenario_key = (ec ? path : canon).string();
      if (cache) {
        auto it = cache->find(t.scenario_key);
        if (it == cache->end()) {
          it = cache->emplace(t.scenario_key, std::make_shared<const Scenario>(load_scenario_file(path))).first;
        }
        t.scenario = it->second;
      } else {
        t.scenario = std::make_shared<const Scenario>(load_scenario_file(path));
      }
    } else {
      t.scenario = std::make_shared<const Scenario>(scenario_from_json(sc));
      t.scenario_key = "inline:" + t.id;
    }

    if (j.contains("init")) {
      const auto& init = j["init"];
      if (init.contains("state")) t.init_state = init["state"].get<std::string>();
      if (init.contains("variables")) t.init_variables = init["variables"].get<std::map<std::string, std::string>>();
    }
    if (j.contains("init_validators")) {
      const auto& iv = j["init_validators"];
      for (const auto& r : iv.value("rules", json::array())) t.init_rules.push_back(predicate_from_json(r));
      if (iv.contains("judge")) t.init_judge = iv["judge"].get<std::string>();
    }

    const auto& ev = j.at("evaluator");
    const auto type = ev.at("type").get<std::string>();
    if (type == "fail_action") {
      if (t.feasibility != Feasibility::Infeasible) {
        throw SchemaError("task '" + t.id + "': fail_action evaluator is only for infeasible tasks");
      }
    } else if (type == "state") {
      if (t.feasibility != Feasibility::Feasible) {
        throw SchemaError("task '" + t.id + "': infeasible tasks must use the fail_action evaluator");
      }
      t.success = predicate_from_json(ev);
    } else {
      throw SchemaError("task '" + t.id + "': unknown evaluator type '" + type + "'");
    }
    if (j.contains("max_steps")) t.max_steps = j["max_steps"].get<int>();
  } catch (const json::exception& e) {
    throw SchemaError(std::string("task spec: ") + e.what());
  }
  if (t.init_state && !t.scenario->states.contains(*t.init_state)) {
    throw SchemaError("task '" + t.id + "': init state '" + *t.init_state + "' is not in the scenario");
  }
  return t;
}

Suite load_suite(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw IoError("cannot open suite manifest '" + manifest.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError("suite manifest: " + std::string(e.what()));
  }
  Suite s;
  s.name = j.value("name", manifest.stem().string());
  const auto base = manifest.parent_path();
  std::map<std::string, std::shared_ptr<const Scenario>> cache;
  for (const auto& entry : j.value("tasks", json::array())) {
    if (entry.is_string()) {
      const auto path = base / entry.get<std::string>();
      std::ifstream tin(path);
      if (!tin) throw IoError("cannot open task spec '" + path.string() + "'");
      json tj;
      try {
        tj = json::parse(tin);
      } catch (const json::parse_error& e) {
        throw SchemaError("task spec '" + path.string() + "': " + e.what());
      }
      s.tasks.push_back(task_spec_from_json(tj, path.parent_path(), &cache));
    } else {
      s.tasks.push_back(task_spec_from_json(entry, base, &cache));
    }
  }
  std::map<std::string, int> seen;
  for (const auto& t : s.tasks) {
    if (++seen[t.id] > 1) throw SchemaError("duplicate task id '" + t.id + "' in suite");
  }
  return s;
}

FaultInjector::FaultInjector(double p, std::uint64_t seed) : p_(p), rng_(seed) {
  if (p < 0.0 || p > 1.0) throw PreconditionError("fault probability must be in [0, 1]");
}

bool FaultInjector::fire() {
  // 53 random bits as a double in [0, 1).
  const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
  return u < p_;
}

InitResult validate_init(SimulatedEnvironment& env, const SimulatedEnvironment::Snapshot& restore_point,
                         std::span<const InitValidator> validators, int max_attempts, const InitConfigure& configure) {
  if (max_attempts < 1) throw PreconditionError("max_attempts must be >= 1");
  InitResult r;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    if (attempt > 1) env.restore(restore_point);
    r.attempts = attempt;
    if (configure) configure(env, attempt);
    std::optional<std::string> failure;
    for (const auto& v : validators) {
      failure = v(env);
      if (failure) break;
    }
    if (!failure) {
      r.ready = true;
      return r;
    }
    r.failures.push_back("attempt " + std::to_string(attempt) + ": " + *failure);
  }
  return r;
}

InitValidator judge_validator(Gateway& gateway, std::string task, std::string expectation, ImageProvider images) {
  return [&gateway, task = std::move(task), expectation = std::move(expectation),
          images = std::move(images)](SimulatedEnvironment& env) -> std::optional<std::string> {
    ChatRequest req;
    req.system_text = std::string(prompts::init_judge_system());
    req.user_text = prompts::init_judge_user(task, expectation);
    req.max_tokens = 16;
    if (images) {
      if (auto img = images(env.observe())) req.images.push_back(std::move(*img));
    }
    const auto reply = to_lower(trim(gateway.complete(req)));
    if (reply.rfind("yes", 0) == 0) return std::nullopt;
    return "judge answered '" + reply + "'";
  };
}

std::string_view outcome_name(TaskOutcomeKind k) {
  switch (k) {
    case TaskOutcomeKind::Success:
      return "success";
    case TaskOutcomeKind::Failure:
      return "failure";
    case TaskOutcomeKind::InitFailure:
      return "init-failure";
  }
  return "failure";
}

TaskOutcome run_task(const TaskSpec& spec, SimulatedEnvironment& env, const AgentConfig& agent, Gateway& gateway,
                     const EvalPolicy& policy, RunRecord* record_out) {
  TaskOutcome out;
  out.task_id = spec.id;
  out.app_category = spec.app_category;
  out.feasibility = spec.feasibility;

  if (policy.reset_between_tasks) env.restore(env.pristine());
  const auto restore_point = env.snapshot();

  std::vector<InitValidator> validators;
  validators.push_back([&spec](SimulatedEnvironment& e) -> std::optional<std::string> {
    if (e.faulted()) return std::string("environment fault");
    for (const auto& rule : spec.init_rules) {
      if (!rule.holds(e)) return "rule not satisfied: " + describe(rule);
    }
    return std::nullopt;
  });
  if (spec.init_judge) validators.push_back(judge_validator(gateway, spec.instruction, *spec.init_judge, agent.images));

  FaultInjector faults(policy.init_fault_probability, combine_seed(policy.seed, stable_hash(spec.id)));
  const InitConfigure configure = [&](SimulatedEnvironment& e, int) {
    if (spec.init_state) e.set_state(*spec.init_state);
    for (const auto& [k, v] : spec.init_variables) e.set_variable(k, v);
    if (policy.init_fault_probability > 0.0 && faults.fire()) e.inject_fault();
  };

  const auto init = validate_init(env, restore_point, validators, policy.max_init_attempts, configure);
  out.init_attempts = init.attempts;
  if (!init.ready) {
    out.outcome = TaskOutcomeKind::InitFailure;
    out.note = init.failures.empty() ? "" : init.failures.back();
    return out;
  }

  AgentConfig cfg = agent;
  if (spec.max_steps) cfg.max_steps = *spec.max_steps;
  RunRecord rec;
  try {
    rec = run_episode(env, spec.id, spec.instruction, gateway, cfg);
  } catch (const Error& e) {
    out.outcome = TaskOutcomeKind::Failure;
    out.note = e.kind() + ": " + e.what();
    return out;
  }
  out.steps_used = static_cast<int>(rec.entries.size());
  out.terminal = rec.terminal;
  bool ok = false;
  if (spec.feasibility == Feasibility::Infeasible) {
    ok = rec.model_emitted_fail();
  } else {
    ok = spec.success && spec.success->holds(env);
  }
  out.outcome = ok ? TaskOutcomeKind::Success : TaskOutcomeKind::Failure;
  if (record_out) *record_out = std::move(rec);
  return out;
}

EvalReport make_report(std::string suite, std::vector<TaskOutcome> rows, const EvalPolicy& policy, int max_steps) {
  EvalReport r;
  r.suite = std::move(suite);
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.task_id < b.task_id; });
  r.rows = std::move(rows);
  for (const auto& row : r.rows) {
    if (row.outcome == TaskOutcomeKind::InitFailure && !policy.init_failure_counts) continue;
    const int win = row.outcome == TaskOutcomeKind::Success ? 1 : 0;
    for (auto* score : {&r.per_category[row.app_category],
                        &r.per_feasibility[std::string(feasibility_name(row.feasibility))], &r.total}) {
      score->success += win;
      score->total += 1;
    }
  }
  r.config = {{"max_steps", max_steps},
              {"infeasible_policy", policy.include_infeasible ? "include" : "exclude"},
              {"init_failure_policy", policy.init_failure_counts ? "count-as-failure" : "exclude"},
              {"reset_between_tasks", policy.reset_between_tasks},
              {"init_fault_probability", policy.init_fault_probability},
              {"max_init_attempts", policy.max_init_attempts},
              {"seed", policy.seed}};
  return r;
}

json EvalReport::to_json() const {
  auto score = [](const CategoryScore& s) {
    return json{{"success", s.success}, {"total", s.total}, {"percent", s.percent()}};
  };
  json rows_j = json::array();
  for (const auto& row : rows) {
    json j = {{"task_id", row.task_id},
              {"app_category", row.app_category},
              {"feasibility", std::string(feasibility_name(row.feasibility))},
              {"outcome", std::string(outcome_name(row.outcome))},
              {"steps_used", row.steps_used},
              {"init_attempts", row.init_attempts}};
    j["terminal"] = row.terminal ? json(std::string(run_terminal_name(*row.terminal))) : json(nullptr);
    if (!row.note.empty()) j["note"] = row.note;
    rows_j.push_back(std::move(j));
  }
  json cats = json::object();
  for (const auto& [k, v] : per_category) cats[k] = score(v);
  json feas = json::object();
  for (const auto& [k, v] : per_feasibility) feas[k] = score(v);
  return {{"suite", suite}, {"tasks", rows_j},     {"per_category", cats},
          {"per_feasibility", feas}, {"total", score(total)}, {"config", config}};
}

std::string EvalReport::to_markdown() const {
  std::ostringstream md;
  md << std::fixed << std::setprecision(1);
  md << "# Evaluation: " << suite << "\n\n";
  md << "Success rate (%)\n\n|";
  for (const auto& [k, v] : per_category) md << " " << k << " |";
  md << " Total |\n|";
  for (std::size_t i = 0; i <= per_category.size(); ++i) md << "---|";
  md << "\n|";
  for (const auto& [k, v] : per_category) md << " " << v.percent() << " |";
  md << " " << total.percent() << " |\n\n";
  md << "| task | category | feasibility | outcome | steps | init attempts |\n|---|---|---|---|---|---|\n";
  for (const auto& row : rows) {
    md << "| " << row.task_id << " | " << row.app_category << " | " << feasibility_name(row.feasibility) << " | "
       << outcome_name(row.outcome) << " | " << row.steps_used << " | " << row.init_attempts << " |\n";
  }
  md << "\nInfeasible tasks: " << config.value("infeasible_policy", std::string()) << "d. Init failures: "
     << config.value("init_failure_policy", std::string()) << ".\n";
  return md.str();
}

EvalReport run_suite(const Suite& suite, const AgentConfig& agent, Gateway& gateway, const EvalPolicy& policy) {
  std::vector<const TaskSpec*> selected;
  for (const auto& t : suite.tasks) {
    if (t.feasibility == Feasibility::Infeasible && !policy.include_infeasible) continue;
    selected.push_back(&t);
  }
  std::vector<TaskOutcome> rows(selected.size());

  if (policy.reset_between_tasks) {
    // Each task owns a private machine restored to its pristine snapshot.
    std::atomic<std::size_t> next{0};
    std::vector<std::string> errors(selected.size());
    auto worker = [&] {
      for (std::size_t i; (i = next.fetch_add(1)) < selected.size();) {
        try {
          SimulatedEnvironment env(selected[i]->scenario);
          rows[i] = run_task(*selected[i], env, agent, gateway, policy);
        } catch (const std::exception& e) {
          errors[i] = e.what();
        }
      }
    };
    const int threads = std::max(1, std::min<int>(policy.parallelism, static_cast<int>(selected.size())));
    if (threads == 1) {
      worker();
    } else {
      std::vector<std::jthread> pool;
      for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    }
    for (std::size_t i = 0; i < errors.size(); ++i) {
      if (!errors[i].empty()) throw PreconditionError("task '" + selected[i]->id + "': " + errors[i]);
    }
  } else {
    // Tasks on the same scenario share one live machine, in suite order.
    std::map<std::string, std::unique_ptr<SimulatedEnvironment>> machines;
    for (std::size_t i = 0; i < selected.size(); ++i) {
      auto& m = machines[selected[i]->scenario_key];
      if (!m) m = std::make_unique<SimulatedEnvironment>(selected[i]->scenario);
      rows[i] = run_task(*selected[i], *m, agent, gateway, policy);
    }
  }
  return make_report(suite.name, std::move(rows), policy, agent.max_steps);
}

}  // namespace trajkit
