// SPDX-License-Identifier: Apache-2.0
#include "trajkit/traj_boost.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <istream>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "trajkit/errors.hpp"
#include "trajkit/hash.hpp"

namespace trajkit {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view node_source_name(NodeSource s) { return s == NodeSource::Human ? "human" : "synthesized"; }

std::size_t TrajTree::leaf_count() const {
  std::size_t n = 0;
  for (const auto& s : trunk) n += s.leaves.size();
  return n;
}

std::size_t TrajTree::duplicate_leaves() const {
  std::size_t dups = 0;
  for (const auto& s : trunk) {
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& leaf : s.leaves) {
      if (!seen.emplace(leaf.thought, render_action(leaf.action)).second) ++dups;
    }
  }
  return dups;
}

EnvironmentSnapshot build_snapshot(const Trajectory& t, int k) {
  if (k < 0 || k >= static_cast<int>(t.steps.size())) {
    throw PreconditionError("step " + std::to_string(k) + " out of range for trajectory '" + t.id + "'");
  }
  for (const auto& s : t.steps) {
    if (!s.thought) throw MissingThought(t.id, s.index);
  }
  EnvironmentSnapshot snap{t.task_description, t.steps[static_cast<size_t>(k)].observation, {}};
  snap.history.reserve(static_cast<size_t>(k));
  for (int i = 0; i < k; ++i) {
    const auto& s = t.steps[static_cast<size_t>(i)];
    snap.history.push_back({*s.thought, s.action});
  }
  return snap;
}

ChatRequest build_boost_prompt(const EnvironmentSnapshot& snapshot, const BoostConfig& config) {
  ChatRequest req;
  req.system_text = std::string(prompts::boost_system());
  req.user_text = prompts::boost_user(snapshot.task, render_history(snapshot.history));
  if (config.images) {
    if (auto img = config.images(snapshot.observation)) req.images.push_back(std::move(*img));
  }
  req.temperature = config.temperature;
  req.max_tokens = config.max_tokens;
  return req;
}

BoostStepResult boost_step(const EnvironmentSnapshot& snapshot, Gateway& gateway, const BoostConfig& config) {
  if (config.n < 1) throw PreconditionError("boost needs n >= 1");
  const auto slots = gateway.sample_n(build_boost_prompt(snapshot, config), config.n);
  BoostStepResult out;
  for (int i = 0; i < config.n; ++i) {
    const auto& slot = slots[static_cast<size_t>(i)];
    if (!slot.ok()) {
      out.drops.push_back({"", 0, i, "gateway: " + slot.error, ""});
      continue;
    }
    try {
      auto d = parse_decision(*slot.text);
      out.nodes.push_back({std::move(d.thought), std::move(d.action), NodeSource::Synthesized, i, *slot.text});
    } catch (const Error& e) {
      out.drops.push_back({"", 0, i, "parse: " + e.kind() + ": " + e.what(), *slot.text});
    }
  }
  return out;
}

json node_to_json(const DecisionNode& n) {
  json j = {{"source", std::string(node_source_name(n.source))},
            {"thought", n.thought},
            {"action", render_action(n.action)},
            {"action_struct", action_to_json(n.action)}};
  if (n.sample_index) j["sample_index"] = *n.sample_index;
  if (n.source == NodeSource::Synthesized) j["raw_text"] = n.raw_text;
  return j;
}

DecisionNode node_from_json(const json& j) {
  try {
    DecisionNode n;
    const auto src = j.at("source").get<std::string>();
    if (src == "human") n.source = NodeSource::Human;
    else if (src == "synthesized") n.source = NodeSource::Synthesized;
    else throw SchemaError("unknown node source '" + src + "'");
    n.thought = j.at("thought").get<std::string>();
    n.action = j.contains("action_struct") ? action_from_json(j["action_struct"]) : parse_action(j.at("action").get<std::string>());
    if (j.contains("action") && parse_action(j["action"].get<std::string>()) != n.action) {
      throw SchemaError("node 'action' text and 'action_struct' disagree");
    }
    if (j.contains("sample_index")) n.sample_index = j["sample_index"].get<int>();
    n.raw_text = j.value("raw_text", "");
    if (n.source == NodeSource::Human && n.sample_index) throw SchemaError("human node carries a sample_index");
    return n;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("decision node: ") + e.what());
  }
}

namespace {

json drop_to_json(const DropRecord& d) {
  return {{"trajectory_id", d.trajectory_id}, {"step_index", d.step_index}, {"sample_index", d.sample_index},
          {"reason", d.reason}, {"raw_text", d.raw_text}};
}

DropRecord drop_from_json(const json& j) {
  return {j.at("trajectory_id").get<std::string>(), j.at("step_index").get<int>(), j.at("sample_index").get<int>(),
          j.at("reason").get<std::string>(), j.value("raw_text", "")};
}

json observation_to_json(const Observation& o) {
  json j = {{"screenshot", o.screenshot_ref}, {"resolution", {o.resolution.width, o.resolution.height}}};
  if (o.timestamp_ms) j["timestamp_ms"] = *o.timestamp_ms;
  return j;
}

Observation observation_from_json(const json& j) {
  Observation o;
  o.screenshot_ref = j.at("screenshot").get<std::string>();
  o.resolution = make_resolution(j.at("resolution").at(0).get<int>(), j.at("resolution").at(1).get<int>());
  if (j.contains("timestamp_ms")) o.timestamp_ms = j["timestamp_ms"].get<std::int64_t>();
  return o;
}

std::string boost_fingerprint(const Trajectory& t, const BoostConfig& c) {
  std::string s = t.id + "\x1e" + t.task_description + "\x1e" + std::to_string(c.n);
  for (const auto& step : t.steps) s += "\x1e" + step.thought.value_or("") + "\x1f" + render_action(step.action);
  return sha256_hex(s).substr(0, 16);
}

struct StepCheckpoint {
  fs::path dir;

  fs::path file(int k) const { return dir / (std::to_string(k) + ".json"); }

  std::optional<BoostStepResult> read(int k) const {
    std::ifstream in(file(k));
    if (!in) return std::nullopt;
    try {
      const auto j = json::parse(in);
      BoostStepResult r;
      for (const auto& n : j.at("leaves")) r.nodes.push_back(node_from_json(n));
      for (const auto& d : j.at("drops")) r.drops.push_back(drop_from_json(d));
      return r;
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }

  void write(int k, const BoostStepResult& r) const {
    fs::create_directories(dir);
    json leaves = json::array(), drops = json::array();
    for (const auto& n : r.nodes) leaves.push_back(node_to_json(n));
    for (const auto& d : r.drops) drops.push_back(drop_to_json(d));
    auto tmp = file(k);
    tmp += ".tmp";
    {
      std::ofstream out(tmp, std::ios::trunc);
      out << json{{"leaves", leaves}, {"drops", drops}}.dump();
      if (!out) throw IoError("cannot write checkpoint '" + tmp.string() + "'");
    }
    fs::rename(tmp, file(k));
  }
};

}  // namespace

TrajTree boost_trajectory(const Trajectory& t, Gateway& gateway, const BoostConfig& config) {
  if (config.n < 1) throw PreconditionError("boost needs n >= 1");
  validate_trajectory(t);
  for (const auto& s : t.steps) {
    if (!s.thought) throw MissingThought(t.id, s.index);
  }

  const auto steps = static_cast<int>(t.steps.size());
  std::optional<StepCheckpoint> ckpt;
  if (config.checkpoint_dir) {
    ckpt = StepCheckpoint{*config.checkpoint_dir / (t.id + "." + boost_fingerprint(t, config) + ".boost")};
  }

  std::vector<std::optional<BoostStepResult>> results(static_cast<size_t>(steps));
  std::vector<std::string> failures(static_cast<size_t>(steps));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int k; (k = next.fetch_add(1)) < steps;) {
      auto& slot = results[static_cast<size_t>(k)];
      if (ckpt) slot = ckpt->read(k);
      if (slot) continue;
      try {
        auto r = boost_step(build_snapshot(t, k), gateway, config);
        for (auto& d : r.drops) {
          d.trajectory_id = t.id;
          d.step_index = k;
        }
        if (ckpt) ckpt->write(k, r);
        slot = std::move(r);
      } catch (const Error& e) {
        failures[static_cast<size_t>(k)] = e.kind() + ": " + e.what();
      }
    }
  };
  {
    const int width = std::max(1, std::min(config.step_parallelism, steps));
    std::vector<std::jthread> pool;
    for (int w = 0; w < width; ++w) pool.emplace_back(worker);
  }

  const auto done = std::count_if(results.begin(), results.end(), [](const auto& r) { return r.has_value(); });
  if (done != steps) {
    const auto first = std::find_if(failures.begin(), failures.end(), [](const auto& f) { return !f.empty(); });
    throw StageAborted(t.id, static_cast<int>(done), first == failures.end() ? "unknown" : *first);
  }

  TrajTree tree{t.id, t.task_description, config.n, {}, {}};
  tree.trunk.reserve(static_cast<size_t>(steps));
  for (int k = 0; k < steps; ++k) {
    const auto& s = t.steps[static_cast<size_t>(k)];
    auto& r = *results[static_cast<size_t>(k)];
    TreeStep ts{build_snapshot(t, k), DecisionNode{*s.thought, s.action, NodeSource::Human, std::nullopt, ""},
                std::move(r.nodes)};
    tree.trunk.push_back(std::move(ts));
    for (auto& d : r.drops) tree.drops.push_back(std::move(d));
  }
  if (ckpt) fs::remove_all(ckpt->dir);
  return tree;
}

void save_tree(const TrajTree& tree, std::ostream& tree_out, std::ostream& drops_out) {
  tree_out << json{{"record", "tree"}, {"trajectory_id", tree.trajectory_id}, {"task", tree.task}, {"n", tree.n}}.dump()
           << '\n';
  for (size_t k = 0; k < tree.trunk.size(); ++k) {
    const auto& s = tree.trunk[k];
    json leaves = json::array();
    for (const auto& l : s.leaves) leaves.push_back(node_to_json(l));
    tree_out << json{{"record", "tree_step"},
                     {"index", k},
                     {"observation", observation_to_json(s.snapshot.observation)},
                     {"human", node_to_json(s.human)},
                     {"leaves", leaves}}
                    .dump()
             << '\n';
  }
  for (const auto& d : tree.drops) drops_out << drop_to_json(d).dump() << '\n';
  if (!tree_out || !drops_out) throw IoError("failed writing tree '" + tree.trajectory_id + "'");
}

TrajTree load_tree(std::istream& tree_in, std::istream* drops_in) {
  TrajTree tree;
  std::string line;
  bool header = false;
  try {
    while (std::getline(tree_in, line)) {
      if (trim(line).empty()) continue;
      const auto j = json::parse(line);
      if (!header) {
        if (j.value("record", "") != "tree") throw SchemaError("first record must be the tree header");
        tree.trajectory_id = j.at("trajectory_id").get<std::string>();
        tree.task = j.at("task").get<std::string>();
        tree.n = j.at("n").get<int>();
        header = true;
        continue;
      }
      if (j.value("record", "") != "tree_step") throw SchemaError("expected a tree_step record");
      if (j.at("index").get<size_t>() != tree.trunk.size()) throw OrderError("tree steps out of order");
      TreeStep s;
      s.snapshot.task = tree.task;
      s.snapshot.observation = observation_from_json(j.at("observation"));
      for (const auto& prev : tree.trunk) s.snapshot.history.push_back({prev.human.thought, prev.human.action});
      s.human = node_from_json(j.at("human"));
      if (s.human.source != NodeSource::Human) throw SchemaError("trunk node is not human");
      for (const auto& l : j.at("leaves")) {
        auto node = node_from_json(l);
        if (node.source != NodeSource::Synthesized) throw SchemaError("leaf node is not synthesized");
        s.leaves.push_back(std::move(node));
      }
      tree.trunk.push_back(std::move(s));
    }
    if (!header) throw SchemaError("empty tree stream");
    if (drops_in) {
      while (std::getline(*drops_in, line)) {
        if (!trim(line).empty()) tree.drops.push_back(drop_from_json(json::parse(line)));
      }
    }
  } catch (const json::exception& e) {
    throw SchemaError(std::string("tree record: ") + e.what());
  }
  return tree;
}

std::string export_tree_markdown(const TrajTree& tree) {
  std::ostringstream md;
  md << "# Traj Tree " << tree.trajectory_id << "\n\n";
  md << "**Task:** " << tree.task << "\n\n";
  md << "Trunk steps: " << tree.trunk.size() << ", leaves: " << tree.leaf_count()
     << ", duplicate leaves: " << tree.duplicate_leaves() << ", dropped samples: " << tree.drops.size() << "\n\n";
  for (size_t k = 0; k < tree.trunk.size(); ++k) {
    const auto& s = tree.trunk[k];
    md << "## Step " << k + 1 << "\n\n";
    md << "![step " << k + 1 << "](" << s.snapshot.observation.screenshot_ref << ")\n\n";
    md << "- **Human:** `" << render_action(s.human.action) << "`\n";
    md << "  > " << s.human.thought << "\n";
    for (const auto& leaf : s.leaves) {
      md << "  - Sample " << leaf.sample_index.value_or(-1) << ": `" << render_action(leaf.action) << "`\n";
      md << "    > " << leaf.thought << "\n";
    }
    md << "\n";
  }
  return md.str();
}

TreeStore::TreeStore(fs::path dir) : dir_(std::move(dir)) {}

std::vector<std::string> TreeStore::ids() const {
  std::vector<std::string> out;
  if (!fs::exists(dir_)) return out;
  for (const auto& e : fs::directory_iterator(dir_)) {
    const auto name = e.path().filename().string();
    if (!e.is_regular_file() || !name.ends_with(".jsonl") || name.ends_with(".drops.jsonl")) continue;
    out.push_back(name.substr(0, name.size() - 6));
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool TreeStore::contains(const std::string& id) const { return fs::exists(dir_ / (id + ".jsonl")); }

TrajTree TreeStore::load(const std::string& id) const {
  std::ifstream tin(dir_ / (id + ".jsonl"));
  if (!tin) throw IoError("no tree '" + id + "' in " + dir_.string());
  std::ifstream din(dir_ / (id + ".drops.jsonl"));
  return load_tree(tin, din ? &din : nullptr);
}

std::vector<TrajTree> TreeStore::load_all() const {
  std::vector<TrajTree> out;
  for (const auto& id : ids()) out.push_back(load(id));
  return out;
}

void TreeStore::save(const TrajTree& tree) const {
  fs::create_directories(dir_);
  std::ofstream tout(dir_ / (tree.trajectory_id + ".jsonl"), std::ios::trunc);
  std::ofstream dout(dir_ / (tree.trajectory_id + ".drops.jsonl"), std::ios::trunc);
  if (!tout || !dout) throw IoError("cannot write tree '" + tree.trajectory_id + "'");
  save_tree(tree, tout, dout);
}

}  // namespace trajkit
