// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>

#include <cmath>
#include <fstream>
#include <map>

#include "support.hpp"
#include "trajkit/curation.hpp"
#include "trajkit/errors.hpp"

using namespace trajkit;
using trajkit::testing::synthetic_trajectory;
using trajkit::testing::uniform_int;

namespace {

/// Returns fixed vectors per text; unknown texts map to a far-away axis.
class StubEmbedder : public EmbeddingPort {
 public:
  std::map<std::string, std::vector<double>> table;
  bool fail = false;
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override {
    if (fail) throw EmbedderUnavailable("stub is down");
    std::vector<std::vector<double>> out;
    for (const auto& t : texts) {
      auto it = table.find(t);
      out.push_back(it == table.end() ? std::vector<double>{0.0, 0.0, 1.0} : it->second);
    }
    return out;
  }
};

Trajectory five_steps() {
  std::mt19937_64 rng(2);
  auto t = synthetic_trajectory("five", 5, rng, false);
  t.steps[0].action = actions::Click{10, 10};
  t.steps[1].action = actions::TypeText{"hello"};
  t.steps[2].action = actions::Click{400, 300};
  t.steps[3].action = actions::Click{400, 300};
  return t;
}

}  // namespace

TEST_CASE("filter_steps: tracker element") {
  auto t = five_steps();
  t.steps[0].element_name = "start";
  const auto [out, report] = filter_steps(t, {});
  CHECK(out.steps.size() == 3);
  REQUIRE(report.dropped_steps.size() == 2);
  CHECK(report.dropped_steps[0] == std::pair<int, std::string>{0, std::string(kRuleTrackerUi)});
  CHECK(report.dropped_steps[1] == std::pair<int, std::string>{3, std::string(kRuleDuplicateAction)});
  for (size_t i = 0; i < out.steps.size(); ++i) CHECK(out.steps[i].index == static_cast<int>(i));
  CHECK(out.steps.back().action == Action{actions::Finish{}});
}

TEST_CASE("filter_steps: duplicate collapse") {
  const auto [out, report] = filter_steps(five_steps(), {});
  CHECK(out.steps.size() == 4);
  CHECK(report.dropped_steps.size() == 1);
  CHECK(report.dropped_steps[0].first == 3);
}

TEST_CASE("filter_steps: identity") {
  auto t = five_steps();
  t.steps[3].action = actions::Click{401, 300};
  const auto [out, report] = filter_steps(t, {});
  CHECK(out == t);
  CHECK(report.empty());
}

TEST_CASE("filter_steps: tracker region and unresolvable screenshot") {
  auto t = five_steps();
  StepFilterRules rules;
  rules.tracker_regions = {Rect{0, 0, 50, 50}};
  rules.screenshot_exists = [](const std::string& ref) { return ref.find("-1.png") == std::string::npos; };
  const auto [out, report] = filter_steps(t, rules);
  CHECK(report.dropped_steps.size() == 3);
  CHECK(report.dropped_steps[0] == std::pair<int, std::string>{0, std::string(kRuleTrackerUi)});
  CHECK(report.dropped_steps[1] == std::pair<int, std::string>{1, std::string(kRuleUnresolvableScreenshot)});
  CHECK(out.steps.size() == 2);

  rules.tracker_ui = false;
  rules.duplicate_action = false;
  rules.unresolvable_screenshot = false;
  CHECK(filter_steps(t, rules).second.empty());
}

TEST_CASE("filter rules from json") {
  const auto r = step_filter_rules_from_json(
      {{"tracker_regions", {{1, 2, 3, 4}}}, {"tracker_elements", {"Go"}}, {"duplicate_action", false}});
  CHECK(r.tracker_regions == std::vector<Rect>{Rect{1, 2, 3, 4}});
  CHECK(r.tracker_elements == std::vector<std::string>{"Go"});
  CHECK_FALSE(r.duplicate_action);
  CHECK_THROWS_AS(step_filter_rules_from_json({{"tracker_regions", {{1, 2}}}}), ConfigError);
}

TEST_CASE("filter_trajectories") {
  std::mt19937_64 rng(4);
  auto empty = synthetic_trajectory("empty", 2, rng, false);
  const auto long_one = synthetic_trajectory("long", 150, rng, false);
  auto failed = synthetic_trajectory("failed", 3, rng, false);
  failed.steps.back().action = actions::Fail{};
  failed.terminal = Terminal::Fail;
  const auto good = synthetic_trajectory("good", 4, rng, false);

  TrajectoryFilterConfig cfg;
  cfg.steps.screenshot_exists = [](const std::string& ref) { return ref.rfind("images/empty-", 0) != 0; };
  cfg.success_only = true;
  const std::vector<Trajectory> in{empty, long_one, failed, good};
  const auto out = filter_trajectories(in, cfg);
  REQUIRE(out.reports.size() == 4);
  CHECK(out.reports[0].dropped_trajectory == std::string(kRuleEmptyAfterFilter));
  CHECK(out.reports[1].dropped_trajectory == std::string(kRuleMaxSteps));
  CHECK(out.reports[2].dropped_trajectory == std::string(kRuleFailTerminated));
  CHECK_FALSE(out.reports[3].dropped_trajectory);
  REQUIRE(out.kept.size() == 1);
  CHECK(out.kept[0].id == "good");

  cfg.success_only = false;
  CHECK(filter_trajectories(in, cfg).kept.size() == 2);
}

TEST_CASE("property: filtering is idempotent and keeps the terminal") {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 300; ++i) {
    auto t = synthetic_trajectory("p" + std::to_string(i), uniform_int(rng, 1, 15), rng, false);
    // Inject duplicates and tracker clicks.
    for (size_t k = 1; k + 1 < t.steps.size(); ++k) {
      const int r = uniform_int(rng, 0, 3);
      if (r == 0) t.steps[k].action = t.steps[k - 1].action;
      if (r == 1) {
        t.steps[k].action = actions::Click{uniform_int(rng, 0, 100), 5};
        t.steps[k].element_name = "Next Task";
      }
    }
    StepFilterRules rules;
    rules.tracker_regions = {Rect{0, 0, 64, 64}};
    const auto once = filter_steps(t, rules).first;
    const auto [twice, report] = filter_steps(once, rules);
    CHECK(twice == once);
    CHECK(report.empty());
    CHECK(once.steps.back().action == t.steps.back().action);
  }
}

TEST_CASE("ngram_overlap examples") {
  CHECK(ngram_overlap("open chrome and clear history", "open chrome and clear cookies", 3) ==
        doctest::Approx(0.5).epsilon(1e-9));
  CHECK(ngram_overlap("Open Chrome", "open chrome", 3) == 1.0);
  CHECK(ngram_overlap("alpha beta gamma", "delta epsilon zeta", 3) == 0.0);
  CHECK(ngram_overlap("same words here", "same words here", 2) == 1.0);
}

TEST_CASE("semantic_similarity") {
  StubEmbedder e;
  e.table["a"] = {1.0, 0.0, 0.0};
  e.table["b"] = {0.0, 2.0, 0.0};
  e.table["zero"] = {0.0, 0.0, 0.0};
  CHECK(semantic_similarity("a", "a", e) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(std::abs(semantic_similarity("a", "b", e)) < 1e-12);
  CHECK_THROWS_AS(semantic_similarity("a", "zero", e), DegenerateEmbedding);
  e.fail = true;
  CHECK_THROWS_AS(semantic_similarity("a", "b", e), EmbedderUnavailable);
}

TEST_CASE("decontaminate examples") {
  StubEmbedder e;
  const double s = std::sqrt(1.0 - 0.81);
  e.table["Clear the browsing history in Chrome"] = {1.0, 0.0, 0.0};
  e.table["Wipe what Chrome remembers about visited sites"] = {0.9, s, 0.0};
  e.table["Change the desktop wallpaper"] = {0.0, 1.0, 0.0};

  const std::vector<NamedTask> bench{{"b1", "Clear the browsing history in Chrome"}, {"b2", "Mute the volume"}};
  const std::vector<NamedTask> tasks{{"t3", "Change the desktop wallpaper"},
                                     {"t1", "Clear the browsing history in Chrome"},
                                     {"t2", "Wipe what Chrome remembers about visited sites"}};
  DecontaminationOptions opt;
  opt.embedder = &e;
  const auto v = decontaminate(tasks, bench, opt);
  REQUIRE(v.size() == 3);
  CHECK(v[0].task_id == "t1");
  CHECK(v[0].removed);
  CHECK(v[0].ngram_score == 1.0);
  CHECK(v[0].matched_benchmark_task == std::string("b1"));

  CHECK(v[1].task_id == "t2");
  CHECK(v[1].removed);
  CHECK(v[1].ngram_score < 0.5);
  REQUIRE(v[1].semantic_score);
  CHECK(*v[1].semantic_score == doctest::Approx(0.9).epsilon(1e-9));
  CHECK(v[1].matched_benchmark_task == std::string("b1"));

  CHECK(v[2].task_id == "t3");
  CHECK_FALSE(v[2].removed);

  // Same inputs, same verdicts; the serial path agrees.
  opt.serial = true;
  const auto again = decontaminate(tasks, bench, opt);
  for (size_t i = 0; i < v.size(); ++i) {
    CHECK(again[i].removed == v[i].removed);
    CHECK(again[i].ngram_score == v[i].ngram_score);
    CHECK(again[i].semantic_score == v[i].semantic_score);
  }

  // Embedder failure carries task ids.
  e.fail = true;
  try {
    decontaminate(tasks, bench, opt);
    FAIL("expected EmbedderUnavailable");
  } catch (const EmbedderUnavailable& err) {
    const auto& ids = err.task_ids();
    CHECK(std::find(ids.begin(), ids.end(), "t2") != ids.end());
  }
}

TEST_CASE("property: empty benchmark removes nothing; identical tasks always removed") {
  std::mt19937_64 rng(8);
  std::vector<NamedTask> tasks;
  for (int i = 0; i < 50; ++i) {
    std::string text;
    for (int w = uniform_int(rng, 1, 8); w > 0; --w) text += trajkit::testing::random_word(rng) + " ";
    tasks.push_back({"t" + std::to_string(i), text});
  }
  for (const auto& v : decontaminate(tasks, std::vector<NamedTask>{})) CHECK_FALSE(v.removed);
  const auto v = decontaminate(tasks, tasks);
  for (const auto& x : v) {
    CHECK(x.removed);
    CHECK(x.ngram_score == 1.0);
    CHECK_FALSE(x.semantic_score);
  }
}

TEST_CASE("load_benchmark_tasks") {
  trajkit::testing::TempDir dir;
  {
    std::ofstream(dir / "b.txt") << "first task\n\nsecond task\n";
    std::ofstream(dir / "b.json") << R"(["x", {"id": "named", "task": "y"}])";
  }
  const auto txt = load_benchmark_tasks(dir / "b.txt");
  REQUIRE(txt.size() == 2);
  CHECK(txt[0].text == "first task");
  const auto js = load_benchmark_tasks(dir / "b.json");
  REQUIRE(js.size() == 2);
  CHECK(js[1].id == "named");
  CHECK(js[1].text == "y");
}
