// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "support.hpp"
#include "trajkit/errors.hpp"
#include "trajkit/thought_completion.hpp"

using namespace trajkit;
using trajkit::testing::mock_gateway;

namespace {

Trajectory three_steps() {
  Trajectory t;
  t.id = "three";
  t.task_description = "Rename the report";
  const std::vector<Action> acts{actions::Click{100, 100}, actions::TypeText{"report-final"}, actions::Finish{}};
  for (int k = 0; k < 3; ++k) {
    Step s;
    s.index = k;
    s.observation = {"shot-" + std::to_string(k) + ".png", {320, 200}, std::nullopt};
    s.action = acts[static_cast<size_t>(k)];
    t.steps.push_back(s);
  }
  return t;
}

std::shared_ptr<ScriptedBackend> numbering_backend() {
  auto b = std::make_shared<ScriptedBackend>();
  MockRule r;
  r.contains = {"recreate your thought process"};
  r.replies = {"Thought number {n}."};
  b->add_rule(r);
  return b;
}

std::vector<std::pair<int, int>> diff_box(const Image& a, const Image& b) {
  std::vector<std::pair<int, int>> out;
  for (int y = 0; y < a.height; ++y)
    for (int x = 0; x < a.width; ++x)
      if (a.at(x, y) != b.at(x, y)) out.emplace_back(x, y);
  return out;
}

}  // namespace

TEST_CASE("annotate_marks") {
  const Image base(200, 200, {10, 20, 30});
  const auto clicked = annotate_marks(base, actions::Click{100, 100});
  const auto diff = diff_box(base, clicked);
  CHECK_FALSE(diff.empty());
  for (auto [x, y] : diff) CHECK((x - 100) * (x - 100) + (y - 100) * (y - 100) <= kMarkRadius * kMarkRadius);
  CHECK(clicked.at(100, 100) == kMarkColor);
  CHECK(base.at(100, 100) == Rgb{10, 20, 30});

  CHECK(annotate_marks(base, actions::Wait{}) == base);
  CHECK(annotate_marks(base, actions::TypeText{"x"}) == base);

  const auto dragged = annotate_marks(base, actions::Drag{0, 0, 50, 50});
  CHECK(dragged.at(0, 0) == kMarkColor);
  CHECK(dragged.at(50, 50) == kMarkColor);
  CHECK(dragged.at(25, 25) == kMarkColor);  // arrow shaft
  CHECK(dragged.at(150, 150) == base.at(150, 150));
}

TEST_CASE("build_thought_prompt") {
  const auto first = build_thought_prompt("Task A", {}, actions::Click{1, 2}, std::nullopt);
  CHECK(first.user_text.find("Your performing history: None") != std::string::npos);
  CHECK(first.user_text.find("click (1, 2)") != std::string::npos);
  CHECK(first.user_text.find("element you clicked") == std::string::npos);
  CHECK(first.system_text == prompts::thought_system());
  CHECK(first.images.empty());

  const auto named = build_thought_prompt("Task A", {}, actions::Click{1, 2}, std::string("OK button"));
  CHECK(named.user_text.find("The name of the element you clicked: OK button") != std::string::npos);

  std::vector<HistoryEntry> h;
  for (int i = 1; i <= 60; ++i) h.push_back({"t" + std::to_string(i), actions::Wait{}});
  const auto capped = build_thought_prompt("Task A", h, actions::Finish{}, std::nullopt);
  CHECK(capped.user_text.find("Step 10 ") == std::string::npos);
  CHECK(capped.user_text.find("Step 11 ") != std::string::npos);
  CHECK(capped.user_text.find("Step 60 ") != std::string::npos);
  CHECK(capped.user_text.find("Thought: t10 ") == std::string::npos);
  CHECK(capped.user_text.find("Thought: t11 ") != std::string::npos);
  std::size_t lines = 0;
  for (std::size_t p = 0; (p = capped.user_text.find("\nStep ", p)) != std::string::npos; ++p) ++lines;
  CHECK(lines + 1 == 50);
}

TEST_CASE("complete_thoughts is iterative") {
  auto b = numbering_backend();
  auto gw = mock_gateway(b);
  const auto t = three_steps();
  const auto out = complete_thoughts(t, *gw, {});
  REQUIRE(out.has_all_thoughts());
  CHECK(*out.steps[0].thought == "Thought number 0.");
  CHECK(*out.steps[2].thought == "Thought number 2.");
  const auto tr = b->transcript();
  REQUIRE(tr.size() == 3);
  CHECK(tr[2].user_text.find("Thought number 1.") != std::string::npos);
  CHECK(tr[2].user_text.find("Thought number 0.") != std::string::npos);
  CHECK(tr[1].user_text.find("Thought number 1.") == std::string::npos);

  // Only thoughts differ.
  auto stripped = out;
  for (auto& s : stripped.steps) s.thought.reset();
  CHECK(stripped == t);

  // Already complete: returned unchanged without calls.
  CHECK(complete_thoughts(out, *gw, {}) == out);
  CHECK(b->calls() == 3);
  ThoughtOptions force;
  force.force = true;
  complete_thoughts(out, *gw, force);
  CHECK(b->calls() == 6);

  auto partial = out;
  partial.steps[1].thought.reset();
  CHECK_THROWS_AS(complete_thoughts(partial, *gw, {}), PreconditionError);
}

TEST_CASE("forbidden mark phrases") {
  auto b = std::make_shared<ScriptedBackend>();
  MockRule r;
  r.contains = {"recreate your thought process"};
  r.replies = {"I click the red circle. It opens the menu.", "I open the menu."};
  b->add_rule(r);
  auto out = complete_thoughts(three_steps(), *mock_gateway(b), {});
  CHECK(*out.steps[0].thought == "I open the menu.");
  CHECK(b->transcript()[1].user_text.find("without any reference to red marks") != std::string::npos);
  CHECK_FALSE(out.annotator_meta.contains("thought_warnings"));

  auto stubborn = std::make_shared<ScriptedBackend>();
  r.replies = {"The Red Arrow points at the field. I type the name."};
  stubborn->add_rule(r);
  out = complete_thoughts(three_steps(), *mock_gateway(stubborn), {});
  for (const auto& s : out.steps) CHECK_FALSE(prompts::mentions_marks(*s.thought));
  CHECK(*out.steps[0].thought == "I type the name.");
  CHECK(out.annotator_meta["thought_warnings"] == nlohmann::json::array({0, 1, 2}));

  CHECK(scrub_mark_mentions("A red box. B.") == "B.");
  CHECK(prompts::mentions_marks("a RED SQUARE"));
  CHECK_FALSE(prompts::mentions_marks("a red button"));
}

TEST_CASE("checkpoint and resume") {
  trajkit::testing::TempDir dir;
  ThoughtOptions opt;
  opt.checkpoint_dir = dir.path();

  auto failing = std::make_shared<ScriptedBackend>();
  MockRule bad;
  bad.contains = {"type text: report-final"};
  bad.always_fail = true;
  bad.failure = "protocol";
  failing->add_rule(bad);
  MockRule good;
  good.contains = {"recreate your thought process"};
  good.replies = {"first pass {n}"};
  failing->add_rule(good);
  try {
    complete_thoughts(three_steps(), *mock_gateway(failing), opt);
    FAIL("expected StageAborted");
  } catch (const StageAborted& e) {
    CHECK(e.completed() == 1);
    CHECK(e.trajectory_id() == "three");
  }
  CHECK(std::filesystem::exists(dir / "three.thoughts.json"));

  auto b = numbering_backend();
  const auto out = complete_thoughts(three_steps(), *mock_gateway(b), opt);
  CHECK(*out.steps[0].thought == "first pass 0");
  CHECK(*out.steps[1].thought == "Thought number 0.");
  CHECK(b->calls() == 2);
  CHECK(b->transcript()[0].user_text.find("first pass 0") != std::string::npos);
  CHECK_FALSE(std::filesystem::exists(dir / "three.thoughts.json"));
}

TEST_CASE("screenshot is attached and marked") {
  auto b = numbering_backend();
  ThoughtOptions opt;
  opt.loader = blank_screenshot_loader();
  complete_thoughts(three_steps(), *mock_gateway(b), opt);
  const auto tr = b->transcript();
  REQUIRE(tr[0].images.size() == 1);
  CHECK(tr[0].images[0].ref == "shot-0.png");
  const auto img = decode_png(tr[0].images[0].bytes);
  CHECK(img.at(100, 100) == kMarkColor);
}

TEST_CASE("corpus run keeps order and collects errors") {
  auto b = numbering_backend();
  std::vector<Trajectory> corpus;
  for (int i = 0; i < 6; ++i) {
    auto t = three_steps();
    t.id = "t" + std::to_string(i);
    corpus.push_back(t);
  }
  corpus[3].steps.clear();  // invalid
  const auto run = complete_thoughts_corpus(corpus, *mock_gateway(b), {}, 3);
  CHECK(run.completed.size() == 5);
  CHECK(run.errors.size() == 1);
  CHECK(run.completed[3].id == "t4");
}
