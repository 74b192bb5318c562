// SPDX-License-Identifier: Apache-2.0
#include "trajkit/curation.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "trajkit/errors.hpp"
#include "trajkit/kernels.hpp"

namespace trajkit {

using nlohmann::json;

namespace {

std::optional<std::pair<int, int>> click_point(const Action& a) {
  return std::visit(
      [](const auto& v) -> std::optional<std::pair<int, int>> {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, actions::Click> || std::is_same_v<T, actions::RightClick> ||
                      std::is_same_v<T, actions::DoubleClick>) {
          return std::pair{v.x, v.y};
        } else if constexpr (std::is_same_v<T, actions::Drag>) {
          return std::pair{v.x1, v.y1};
        } else {
          return std::nullopt;
        }
      },
      a);
}

bool hits_tracker(const Step& s, const StepFilterRules& rules) {
  const auto point = click_point(s.action);
  if (!point) return false;
  for (const auto& r : rules.tracker_regions) {
    if (r.contains(point->first, point->second)) return true;
  }
  if (s.element_name) {
    const auto name = to_lower(trim(*s.element_name));
    for (const auto& e : rules.tracker_elements) {
      if (to_lower(e) == name) return true;
    }
  }
  return false;
}

}  // namespace

StepFilterRules step_filter_rules_from_json(const json& j) {
  StepFilterRules r;
  if (j.is_null()) return r;
  try {
    r.tracker_ui = j.value("tracker_ui", r.tracker_ui);
    r.duplicate_action = j.value("duplicate_action", r.duplicate_action);
    r.unresolvable_screenshot = j.value("unresolvable_screenshot", r.unresolvable_screenshot);
    if (j.contains("tracker_elements")) r.tracker_elements = j["tracker_elements"].get<std::vector<std::string>>();
    if (j.contains("tracker_regions")) {
      for (const auto& reg : j["tracker_regions"]) {
        const auto v = reg.get<std::vector<int>>();
        if (v.size() != 4) throw ConfigError("tracker region must be [x, y, width, height]");
        r.tracker_regions.push_back({v[0], v[1], v[2], v[3]});
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("filter rules: ") + e.what());
  }
  return r;
}

json filter_report_to_json(const FilterReport& r) {
  json steps = json::array();
  for (const auto& [idx, rule] : r.dropped_steps) steps.push_back({{"index", idx}, {"rule", rule}});
  json j = {{"trajectory_id", r.trajectory_id}, {"dropped_steps", steps}};
  j["dropped_trajectory"] = r.dropped_trajectory ? json(*r.dropped_trajectory) : json(nullptr);
  return j;
}

std::pair<Trajectory, FilterReport> filter_steps(const Trajectory& t, const StepFilterRules& rules) {
  Trajectory out = t;
  out.steps.clear();
  FilterReport report;
  report.trajectory_id = t.id;

  for (const auto& s : t.steps) {
    std::optional<std::string_view> rule;
    if (rules.unresolvable_screenshot && rules.screenshot_exists &&
        !rules.screenshot_exists(s.observation.screenshot_ref)) {
      rule = kRuleUnresolvableScreenshot;
    } else if (rules.tracker_ui && hits_tracker(s, rules)) {
      rule = kRuleTrackerUi;
    } else if (rules.duplicate_action && has_coordinates(s.action) && !out.steps.empty() &&
               out.steps.back().action == s.action) {
      rule = kRuleDuplicateAction;
    }
    if (rule) {
      report.dropped_steps.emplace_back(s.index, std::string(*rule));
      continue;
    }
    Step kept = s;
    kept.index = static_cast<int>(out.steps.size());
    out.steps.push_back(std::move(kept));
  }
  return {std::move(out), std::move(report)};
}

TrajectoryFilterConfig trajectory_filter_config_from_json(const json& j) {
  TrajectoryFilterConfig c;
  if (j.is_null()) return c;
  try {
    c.steps = step_filter_rules_from_json(j.value("steps", json(nullptr)));
    c.max_steps = j.value("max_steps", c.max_steps);
    c.success_only = j.value("success_only", c.success_only);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("filter config: ") + e.what());
  }
  if (c.max_steps < 1) throw ConfigError("max_steps must be >= 1");
  return c;
}

FilterOutcome filter_trajectories(std::span<const Trajectory> ts, const TrajectoryFilterConfig& config) {
  FilterOutcome out;
  for (const auto& t : ts) {
    auto [filtered, report] = filter_steps(t, config.steps);
    if (filtered.steps.empty()) {
      report.dropped_trajectory = std::string(kRuleEmptyAfterFilter);
    } else if (static_cast<int>(filtered.steps.size()) > config.max_steps) {
      report.dropped_trajectory = std::string(kRuleMaxSteps);
    } else if (config.success_only && filtered.terminal == Terminal::Fail) {
      report.dropped_trajectory = std::string(kRuleFailTerminated);
    } else {
      out.kept.push_back(std::move(filtered));
    }
    out.reports.push_back(std::move(report));
  }
  return out;
}

double ngram_overlap(std::string_view a, std::string_view b, int n) {
  if (n < 1) throw PreconditionError("n-gram size must be >= 1");
  return kernels::overlap_score(kernels::make_profile(a, n), kernels::make_profile(b, n));
}

double semantic_similarity(std::string_view a, std::string_view b, EmbeddingPort& embedder) {
  auto v = embedder.embed({std::string(a), std::string(b)});
  if (v.size() != 2) throw EmbedderUnavailable("embedder returned " + std::to_string(v.size()) + " vectors for 2");
  if (v[0].size() != v[1].size()) throw EmbedderUnavailable("embedding dimensions differ");
  const auto x = kernels::normalized(std::move(v[0]));
  const auto y = kernels::normalized(std::move(v[1]));
  double dot = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) dot += x[i] * y[i];
  return std::clamp(dot, -1.0, 1.0);
}

json verdict_to_json(const DecontaminationVerdict& v) {
  json j = {{"task_id", v.task_id}, {"ngram_score", v.ngram_score}, {"removed", v.removed}};
  j["matched_benchmark_task"] = v.matched_benchmark_task ? json(*v.matched_benchmark_task) : json(nullptr);
  j["semantic_score"] = v.semantic_score ? json(*v.semantic_score) : json(nullptr);
  return j;
}

std::vector<DecontaminationVerdict> decontaminate(std::span<const NamedTask> tasks, std::span<const NamedTask> benchmark,
                                                  const DecontaminationOptions& options) {
  const auto& th = options.thresholds;
  if (th.ngram_n < 1) throw PreconditionError("ngram_n must be >= 1");

  std::vector<kernels::NgramProfile> tp, bp;
  tp.reserve(tasks.size());
  bp.reserve(benchmark.size());
  for (const auto& t : tasks) tp.push_back(kernels::make_profile(t.text, th.ngram_n));
  for (const auto& b : benchmark) bp.push_back(kernels::make_profile(b.text, th.ngram_n));
  const auto overlap = options.serial ? kernels::overlap_matrix_serial(tp, bp) : kernels::overlap_matrix(tp, bp);

  std::optional<kernels::Matrix> cosine;
  if (options.embedder && !tasks.empty() && !benchmark.empty()) {
    std::vector<std::string> texts;
    for (const auto& t : tasks) texts.push_back(t.text);
    for (const auto& b : benchmark) texts.push_back(b.text);
    std::vector<std::vector<double>> vecs;
    try {
      vecs = options.embedder->embed(texts);
      if (vecs.size() != texts.size()) throw EmbedderUnavailable("embedder returned the wrong number of vectors");
    } catch (const EmbedderUnavailable& e) {
      std::vector<std::string> ids;
      for (const auto& t : tasks) ids.push_back(t.id);
      throw EmbedderUnavailable(e.what(), std::move(ids));
    }
    std::vector<std::vector<double>> tv, bv;
    const auto dim = vecs.front().size();
    for (std::size_t i = 0; i < vecs.size(); ++i) {
      if (vecs[i].size() != dim) throw EmbedderUnavailable("embedding dimensions differ");
      (i < tasks.size() ? tv : bv).push_back(kernels::normalized(std::move(vecs[i])));
    }
    cosine = options.serial ? kernels::cosine_matrix_serial(tv, bv) : kernels::cosine_matrix(tv, bv);
  }

  std::vector<DecontaminationVerdict> out;
  out.reserve(tasks.size());
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    DecontaminationVerdict v;
    v.task_id = tasks[i].id;
    if (!benchmark.empty()) {
      std::size_t best_ng = 0, best_cos = 0;
      for (std::size_t j = 1; j < benchmark.size(); ++j) {
        if (overlap.at(i, j) > overlap.at(i, best_ng)) best_ng = j;
        if (cosine && cosine->at(i, j) > cosine->at(i, best_cos)) best_cos = j;
      }
      v.ngram_score = overlap.at(i, best_ng);
      if (cosine) v.semantic_score = std::clamp(cosine->at(i, best_cos), -1.0, 1.0);
      const bool ng_hit = v.ngram_score >= th.ngram_max;
      const bool cos_hit = v.semantic_score && *v.semantic_score >= th.cosine_max;
      v.removed = ng_hit || cos_hit;
      v.matched_benchmark_task = benchmark[(!ng_hit && cos_hit) ? best_cos : best_ng].id;
    }
    out.push_back(std::move(v));
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.task_id < b.task_id; });
  return out;
}

std::vector<NamedTask> load_benchmark_tasks(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open benchmark task file '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  std::vector<NamedTask> out;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '[') {
    try {
      const auto j = json::parse(text);
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (j[i].is_string()) {
          out.push_back({"bench-" + std::to_string(i), j[i].get<std::string>()});
        } else {
          out.push_back({j[i].at("id").get<std::string>(), j[i].at("task").get<std::string>()});
        }
      }
    } catch (const json::exception& e) {
      throw SchemaError("benchmark task file '" + path.string() + "': " + e.what());
    }
    return out;
  }
  std::istringstream lines(text);
  std::string line;
  int lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    const auto t = trim(line);
    if (!t.empty()) out.push_back({"bench-" + std::to_string(lineno), std::string(t)});
  }
  return out;
}

}  // namespace trajkit
