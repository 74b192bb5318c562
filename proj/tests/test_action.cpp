// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>

#include "support.hpp"
#include "trajkit/action.hpp"
#include "trajkit/errors.hpp"

using namespace trajkit;
using trajkit::testing::random_action;

TEST_CASE("parse_action: table forms") {
  CHECK(parse_action("type text: hello") == Action{actions::TypeText{"hello"}});
  CHECK(parse_action("hotkey (ctrl, c)") == Action{actions::Hotkey{{"ctrl", "c"}}});
  CHECK(parse_action("hotkey (ctrl, shift, n)") == Action{actions::Hotkey{{"ctrl", "shift", "n"}}});
  CHECK(parse_action("finish") == Action{actions::Finish{}});
  CHECK(parse_action("fail") == Action{actions::Fail{}});
  CHECK(parse_action("wait") == Action{actions::Wait{}});
  CHECK(parse_action("click (100, 200)") == Action{actions::Click{100, 200}});
  CHECK(parse_action("right click (3, 4)") == Action{actions::RightClick{3, 4}});
  CHECK(parse_action("double click (5, 6)") == Action{actions::DoubleClick{5, 6}});
  CHECK(parse_action("drag from (1, 2) to (3, 4)") == Action{actions::Drag{1, 2, 3, 4}});
  CHECK(parse_action("scroll (-5)") == Action{actions::Scroll{-5}});
  CHECK(parse_action("press key: enter") == Action{actions::PressKey{"enter"}});
}

TEST_CASE("parse_action: flexible whitespace and case") {
  CHECK(parse_action("  CLICK(10,20)  ") == Action{actions::Click{10, 20}});
  CHECK(parse_action("Double   Click ( 1 ,2 )") == Action{actions::DoubleClick{1, 2}});
  CHECK(parse_action("DRAG FROM(1,2)TO(3,4)") == Action{actions::Drag{1, 2, 3, 4}});
  CHECK(parse_action("Type Text:    spaced out") == Action{actions::TypeText{"spaced out"}});
  CHECK(parse_action("HotKey (Ctrl, C)") == Action{actions::Hotkey{{"Ctrl", "C"}}});
  CHECK(parse_action("scroll (+7)") == Action{actions::Scroll{7}});
}

TEST_CASE("parse_action: errors") {
  CHECK_THROWS_AS(parse_action("clik (1, 2)"), UnknownAction);
  CHECK_THROWS_AS(parse_action(""), UnknownAction);
  CHECK_THROWS_AS(parse_action("click (1.5, 2)"), MalformedArguments);
  CHECK_THROWS_AS(parse_action("click (-1, 2)"), MalformedArguments);
  CHECK_THROWS_AS(parse_action("click (1, 2"), MalformedArguments);
  CHECK_THROWS_AS(parse_action("click (99999999999999, 2)"), MalformedArguments);
  CHECK_THROWS_AS(parse_action("hotkey (ctrl)"), MalformedArguments);
  CHECK_THROWS_AS(parse_action("hotkey (a, b, c, d)"), MalformedArguments);
  CHECK_THROWS_AS(parse_action("type text:"), MalformedArguments);
  CHECK_THROWS_AS(parse_action("finish now"), MalformedArguments);
  // Both error kinds share one base.
  CHECK_THROWS_AS(parse_action("clik"), ActionParseError);
}

TEST_CASE("render_action: canonical forms") {
  CHECK(render_action(actions::Click{100, 200}) == "click (100, 200)");
  CHECK(render_action(actions::Scroll{-5}) == "scroll (-5)");
  CHECK(render_action(actions::Hotkey{{"ctrl", "shift", "n"}}) == "hotkey (ctrl, shift, n)");
  CHECK(render_action(actions::Drag{1, 2, 3, 4}) == "drag from (1, 2) to (3, 4)");
  CHECK(render_action(actions::TypeText{"hello"}) == "type text: hello");
  CHECK(render_action(actions::PressKey{"enter"}) == "press key: enter");
  CHECK(render_action(actions::RightClick{1, 2}) == "right click (1, 2)");
  CHECK(render_action(actions::DoubleClick{1, 2}) == "double click (1, 2)");
}

TEST_CASE("invariants") {
  CHECK_FALSE(is_valid_action(actions::Hotkey{{"ctrl"}}));
  CHECK_FALSE(is_valid_action(actions::Hotkey{{"a", "b", "c", "d"}}));
  CHECK_FALSE(is_valid_action(actions::Hotkey{{"a b", "c"}}));
  CHECK_FALSE(is_valid_action(actions::TypeText{"two\nlines"}));
  CHECK_FALSE(is_valid_action(actions::Click{-1, 0}));
  CHECK(is_valid_action(actions::TypeText{"escaped\\nnewline"}));
  CHECK(make_type_text("line one\nline two ") == actions::TypeText{"line one\\nline two"});
  CHECK_THROWS_AS(make_resolution(0, 720), InvalidAction);
  CHECK(Resolution{} == Resolution{1280, 720});
}

TEST_CASE("parse_decision") {
  auto d = parse_decision("I will open the menu.\nAction: click (640, 360)");
  CHECK(d.thought == "I will open the menu.");
  CHECK(d.action == Action{actions::Click{640, 360}});

  d = parse_decision("Task done.\nAction: finish");
  CHECK(d.thought == "Task done.");
  CHECK(d.action == Action{actions::Finish{}});

  CHECK_THROWS_AS(parse_decision("thinking only, no action line"), MissingActionLine);

  // The last Action line wins; earlier ones stay in the thought.
  d = parse_decision("Action: wait was my first idea.\nThen I changed my mind.\n  action: scroll (3)");
  CHECK(d.thought == "Action: wait was my first idea.\nThen I changed my mind.");
  CHECK(d.action == Action{actions::Scroll{3}});

  try {
    parse_decision("hmm\nAction: clik (1, 2)");
    FAIL("expected an error");
  } catch (const UnknownAction& e) {
    CHECK(std::string(e.what()).find("clik (1, 2)") != std::string::npos);
  }
}

TEST_CASE("validate_bounds") {
  CHECK(validate_bounds(actions::Click{1279, 719}, {1280, 720}).empty());
  auto v = validate_bounds(actions::Click{1280, 0}, {1280, 720});
  REQUIRE(v.size() == 1);
  CHECK(v[0].field == "x");
  CHECK(v[0].limit == 1280);
  CHECK(validate_bounds(actions::Wait{}, {10, 10}).empty());
  CHECK(validate_bounds(actions::Drag{0, 0, 5, 800}, {1280, 720}).size() == 1);
}

TEST_CASE("json form agrees with text form") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 2000; ++i) {
    const auto a = random_action(rng);
    const auto j = action_to_json(a);
    CHECK(action_from_json(j) == a);
    CHECK(action_kind(a) == j.at("type").get<std::string>());
  }
}

TEST_CASE("property: round trip over all variants") {
  std::mt19937_64 rng(1234);
  std::set<std::string> kinds;
  std::set<std::size_t> hotkey_sizes;
  for (int i = 0; i < 5000; ++i) {
    const auto a = random_action(rng);
    REQUIRE(is_valid_action(a));
    kinds.insert(std::string(action_kind(a)));
    if (auto* h = std::get_if<actions::Hotkey>(&a)) hotkey_sizes.insert(h->keys.size());
    const auto text = render_action(a);
    INFO(text);
    CHECK(parse_action(text) == a);
  }
  CHECK(kinds.size() == 11);
  CHECK(hotkey_sizes == std::set<std::size_t>{2, 3});
}

TEST_CASE("property: canonicalization is idempotent") {
  std::mt19937_64 rng(99);
  int parsed = 0;
  for (int i = 0; i < 3000; ++i) {
    const auto s = trajkit::testing::mutate(render_action(random_action(rng)), rng);
    try {
      const auto once = render_action(parse_action(s));
      CHECK(render_action(parse_action(once)) == once);
      ++parsed;
    } catch (const ActionParseError&) {
    }
  }
  CHECK(parsed > 0);
}

TEST_CASE("property: decision round trip") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 2000; ++i) {
    const auto a = random_action(rng);
    std::string thought;
    const int lines = trajkit::testing::uniform_int(rng, 1, 3);
    for (int l = 0; l < lines; ++l) {
      if (l) thought += "\n";
      thought += "Thought " + trajkit::testing::random_word(rng) + " about " + trajkit::testing::random_word(rng);
    }
    const auto d = parse_decision(thought + "\nAction: " + render_action(a));
    CHECK(d.thought == thought);
    CHECK(d.action == a);
    CHECK(parse_decision(render_decision(thought, a)) == Decision{thought, a});
  }
}

TEST_CASE("property: mutated input only raises parse errors") {
  std::mt19937_64 rng(42);
  for (int i = 0; i < 5000; ++i) {
    const auto s = trajkit::testing::mutate(render_action(random_action(rng)), rng);
    try {
      const auto a = parse_action(s);
      CHECK(is_valid_action(a));
    } catch (const ActionParseError&) {
    }
  }
}
