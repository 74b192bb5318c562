// SPDX-License-Identifier: Apache-2.0
#include "support.hpp"

#include <atomic>

namespace trajkit::testing {

namespace fs = std::filesystem;

fs::path fixture(const std::string& rel) { return fs::path(TRAJKIT_FIXTURES) / rel; }

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  std::random_device rd;
  path_ = fs::temp_directory_path() /
          ("trajkit-test-" + std::to_string(rd()) + "-" + std::to_string(counter.fetch_add(1)));
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

GatewayConfig fast_config(int concurrency) {
  GatewayConfig c;
  c.model = "mock";
  c.concurrency_limit = concurrency;
  c.retry.backoff.clear();
  return c;
}

std::shared_ptr<Gateway> mock_gateway(std::shared_ptr<ScriptedBackend> backend, int concurrency) {
  return std::make_shared<Gateway>(fast_config(concurrency), backend, backend);
}

std::shared_ptr<Gateway> mock_gateway_from_file(const std::string& fixture_rel, int concurrency) {
  return mock_gateway(std::make_shared<ScriptedBackend>(ScriptedBackend::from_file(fixture(fixture_rel))), concurrency);
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

std::string random_word(std::mt19937_64& rng, int min_len, int max_len) {
  static const std::string alphabet = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
  std::string w;
  const int len = uniform_int(rng, min_len, max_len);
  for (int i = 0; i < len; ++i) w += alphabet[static_cast<size_t>(uniform_int(rng, 0, int(alphabet.size()) - 1))];
  return w;
}

namespace {

std::string random_text(std::mt19937_64& rng) {
  // Printable ASCII plus characters the grammar cares about.
  static const std::string extra = " ,()\":;'!?-_/\\\\n";
  std::string t;
  const int len = uniform_int(rng, 1, 24);
  for (int i = 0; i < len; ++i) {
    if (uniform_int(rng, 0, 3) == 0) {
      t += extra[static_cast<size_t>(uniform_int(rng, 0, int(extra.size()) - 1))];
    } else {
      t += static_cast<char>(uniform_int(rng, 33, 126));
    }
  }
  return std::string(trim(t)).empty() ? "x" : std::string(trim(t));
}

}  // namespace

Action random_action(std::mt19937_64& rng, Resolution res) {
  const int kind = uniform_int(rng, 0, 11);
  auto x = [&] { return uniform_int(rng, 0, res.width - 1); };
  auto y = [&] { return uniform_int(rng, 0, res.height - 1); };
  switch (kind) {
    case 0:
      return actions::Click{x(), y()};
    case 1:
      return actions::RightClick{x(), y()};
    case 2:
      return actions::DoubleClick{x(), y()};
    case 3:
      return actions::Drag{x(), y(), x(), y()};
    case 4: {
      int off = uniform_int(rng, -50, 50);
      return actions::Scroll{off == 0 ? 1 : off};
    }
    case 5:
      return actions::PressKey{random_word(rng)};
    case 6:
      return actions::Hotkey{{random_word(rng), random_word(rng)}};
    case 7:
      return actions::Hotkey{{random_word(rng), random_word(rng), random_word(rng)}};
    case 8:
      return actions::TypeText{random_text(rng)};
    case 9:
      return actions::Wait{};
    case 10:
      return actions::Finish{};
    default:
      return actions::Fail{};
  }
}

Action random_nonterminal_action(std::mt19937_64& rng, Resolution res) {
  for (;;) {
    auto a = random_action(rng, res);
    if (!is_terminal(a)) return a;
  }
}

std::string mutate(const std::string& s, std::mt19937_64& rng) {
  std::string out = s;
  const int edits = uniform_int(rng, 1, 4);
  for (int e = 0; e < edits; ++e) {
    const int op = uniform_int(rng, 0, 3);
    const auto pos = out.empty() ? 0 : static_cast<size_t>(uniform_int(rng, 0, int(out.size()) - 1));
    const char c = static_cast<char>(uniform_int(rng, 0, 255));
    if (op == 0 || out.empty()) {
      out.insert(out.begin() + static_cast<std::ptrdiff_t>(pos), c);
    } else if (op == 1) {
      out.erase(pos, 1);
    } else if (op == 2) {
      out[pos] = c;
    } else {
      out.insert(pos, out.substr(pos, static_cast<size_t>(uniform_int(rng, 1, 6))));
    }
  }
  return out;
}

Trajectory synthetic_trajectory(const std::string& id, int steps, std::mt19937_64& rng, bool with_thoughts) {
  Trajectory t;
  t.id = id;
  t.task_description = "Synthetic task " + id + " " + random_word(rng, 3, 8);
  t.terminal = Terminal::Finish;
  for (int k = 0; k < steps; ++k) {
    Step s;
    s.index = k;
    s.observation.screenshot_ref = "images/" + id + "-" + std::to_string(k) + ".png";
    s.action = k + 1 == steps ? Action{actions::Finish{}} : random_nonterminal_action(rng);
    if (with_thoughts) s.thought = "Human thought " + std::to_string(k) + " of " + id;
    t.steps.push_back(std::move(s));
  }
  return t;
}

TrajTree synthetic_tree(const Trajectory& t, int leaves, std::mt19937_64& rng) {
  TrajTree tree;
  tree.trajectory_id = t.id;
  tree.task = t.task_description;
  tree.n = leaves;
  for (int k = 0; k < static_cast<int>(t.steps.size()); ++k) {
    const auto& step = t.steps[static_cast<size_t>(k)];
    TreeStep ts;
    ts.snapshot = build_snapshot(t, k);
    ts.human = DecisionNode{*step.thought, step.action, NodeSource::Human, std::nullopt, ""};
    for (int i = 0; i < leaves; ++i) {
      DecisionNode n;
      n.thought = "Leaf " + std::to_string(k) + "." + std::to_string(i) + " " + random_word(rng, 4, 10);
      n.action = random_nonterminal_action(rng);
      n.source = NodeSource::Synthesized;
      n.sample_index = i;
      n.raw_text = render_decision(n.thought, n.action);
      ts.leaves.push_back(std::move(n));
    }
    tree.trunk.push_back(std::move(ts));
  }
  return tree;
}

}  // namespace trajkit::testing
