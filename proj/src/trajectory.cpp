// SPDX-License-Identifier: Apache-2.0
#include "trajkit/trajectory.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <sstream>

#include "trajkit/errors.hpp"
#include "trajkit/hash.hpp"

namespace trajkit {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view terminal_name(Terminal t) { return t == Terminal::Finish ? "finish" : "fail"; }

Terminal terminal_from_name(std::string_view name) {
  if (name == "finish") return Terminal::Finish;
  if (name == "fail") return Terminal::Fail;
  throw SchemaError("terminal must be 'finish' or 'fail', got '" + std::string(name) + "'");
}

bool Trajectory::has_all_thoughts() const {
  return std::all_of(steps.begin(), steps.end(), [](const Step& s) { return s.thought.has_value(); });
}

void validate_trajectory(const Trajectory& t) {
  if (t.id.empty()) throw SchemaError("trajectory id is empty");
  if (t.steps.empty()) throw SchemaError("trajectory '" + t.id + "' has no steps");
  for (size_t i = 0; i < t.steps.size(); ++i) {
    const auto& s = t.steps[i];
    if (s.index != static_cast<int>(i)) {
      throw OrderError("trajectory '" + t.id + "': step at position " + std::to_string(i) +
                       " has index " + std::to_string(s.index));
    }
    if (is_terminal(s.action) && i + 1 != t.steps.size()) {
      throw SchemaError("trajectory '" + t.id + "': " + render_action(s.action) + " at step " +
                        std::to_string(i) + " is not the last step");
    }
    if (auto why = action_invariant_violation(s.action); !why.empty()) {
      throw StepActionError(s.index, why);
    }
  }
  const auto& last = t.steps.back().action;
  if ((std::holds_alternative<actions::Finish>(last) && t.terminal != Terminal::Finish) ||
      (std::holds_alternative<actions::Fail>(last) && t.terminal != Terminal::Fail)) {
    throw SchemaError("trajectory '" + t.id + "': last action " + render_action(last) +
                      " disagrees with terminal '" + std::string(terminal_name(t.terminal)) + "'");
  }
}

json step_to_json(const Step& s) {
  json j = {{"record", "step"},
            {"index", s.index},
            {"screenshot", s.observation.screenshot_ref},
            {"resolution", {s.observation.resolution.width, s.observation.resolution.height}},
            {"action", render_action(s.action)},
            {"action_struct", action_to_json(s.action)},
            {"source", "human"}};
  if (s.observation.timestamp_ms) j["timestamp_ms"] = *s.observation.timestamp_ms;
  if (s.thought) j["thought"] = *s.thought;
  if (s.element_name) j["element_name"] = *s.element_name;
  return j;
}

Step step_from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("step record is not an object");
  if (!j.contains("index") || !j["index"].is_number_integer()) {
    throw SchemaError("step record missing integer 'index'");
  }
  Step s;
  s.index = j["index"].get<int>();
  if (!j.contains("screenshot") || !j["screenshot"].is_string()) {
    throw SchemaError("step " + std::to_string(s.index) + " missing 'screenshot'");
  }
  s.observation.screenshot_ref = j["screenshot"].get<std::string>();
  if (j.contains("resolution")) {
    const auto& r = j["resolution"];
    if (!r.is_array() || r.size() != 2 || !r[0].is_number_integer() || !r[1].is_number_integer()) {
      throw SchemaError("step " + std::to_string(s.index) + ": 'resolution' must be [width, height]");
    }
    try {
      s.observation.resolution = make_resolution(r[0].get<int>(), r[1].get<int>());
    } catch (const InvalidAction& e) {
      throw SchemaError("step " + std::to_string(s.index) + ": " + e.what());
    }
  }
  if (j.contains("timestamp_ms")) s.observation.timestamp_ms = j["timestamp_ms"].get<std::int64_t>();
  if (j.contains("thought")) s.thought = j["thought"].get<std::string>();
  if (j.contains("element_name")) s.element_name = j["element_name"].get<std::string>();
  if (j.contains("source") && j["source"] != "human") {
    throw SchemaError("step " + std::to_string(s.index) + ": source must be 'human'");
  }

  const bool has_text = j.contains("action") && j["action"].is_string();
  const bool has_struct = j.contains("action_struct");
  if (!has_text && !has_struct) throw SchemaError("step " + std::to_string(s.index) + " missing 'action'");
  try {
    if (has_text) s.action = parse_action(j["action"].get<std::string>());
    if (has_struct) {
      auto structured = action_from_json(j["action_struct"]);
      if (has_text && structured != s.action) {
        throw SchemaError("step " + std::to_string(s.index) + ": 'action' text and 'action_struct' disagree");
      }
      s.action = std::move(structured);
    }
  } catch (const ActionParseError& e) {
    throw StepActionError(s.index, e.what());
  } catch (const InvalidAction& e) {
    throw StepActionError(s.index, e.what());
  }
  return s;
}

Trajectory load_trajectory(std::istream& in) {
  Trajectory t;
  bool have_header = false;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw SchemaError("line " + std::to_string(line_no) + ": " + e.what());
    }
    const auto record = j.value("record", std::string());
    if (!have_header) {
      if (record != "trajectory") throw SchemaError("first record must be the trajectory header");
      for (const char* key : {"id", "task", "terminal"}) {
        if (!j.contains(key) || !j[key].is_string()) {
          throw SchemaError(std::string("trajectory header missing '") + key + "'");
        }
      }
      t.id = j["id"].get<std::string>();
      t.task_description = j["task"].get<std::string>();
      t.terminal = terminal_from_name(j["terminal"].get<std::string>());
      if (j.contains("meta")) {
        if (!j["meta"].is_object()) throw SchemaError("'meta' must be an object");
        t.annotator_meta = j["meta"];
      }
      have_header = true;
      continue;
    }
    if (record != "step") throw SchemaError("line " + std::to_string(line_no) + ": expected a step record");
    auto step = step_from_json(j);
    if (step.index != static_cast<int>(t.steps.size())) {
      throw OrderError("expected step index " + std::to_string(t.steps.size()) + ", got " +
                       std::to_string(step.index));
    }
    t.steps.push_back(std::move(step));
  }
  if (!have_header) throw SchemaError("empty trajectory stream");
  validate_trajectory(t);
  return t;
}

void save_trajectory(const Trajectory& t, std::ostream& out) {
  validate_trajectory(t);
  json header = {{"record", "trajectory"},
                 {"id", t.id},
                 {"task", t.task_description},
                 {"terminal", std::string(terminal_name(t.terminal))},
                 {"meta", t.annotator_meta}};
  out << header.dump() << '\n';
  for (const auto& s : t.steps) out << step_to_json(s).dump() << '\n';
  if (!out) throw IoError("failed writing trajectory '" + t.id + "'");
}

Trajectory load_trajectory_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return load_trajectory(in);
}

void save_trajectory_file(const Trajectory& t, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  // Write-then-rename so readers never observe a partial file.
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp.string() + "'");
    save_trajectory(t, out);
  }
  fs::rename(tmp, path);
}

std::string export_markdown(const Trajectory& t) {
  std::ostringstream md;
  md << "# Trajectory " << t.id << "\n\n";
  md << "**Task:** " << t.task_description << "\n\n";
  md << "**Terminal status:** " << terminal_name(t.terminal) << "\n\n";
  for (const auto& s : t.steps) {
    const bool last = &s == &t.steps.back();
    md << "## Step " << s.index + 1;
    if (last) md << " (terminal: " << terminal_name(t.terminal) << ")";
    md << "\n\n";
    md << "![step " << s.index + 1 << "](" << s.observation.screenshot_ref << ")\n\n";
    if (s.thought && !trim(*s.thought).empty()) md << "**Thought:** " << *s.thought << "\n\n";
    if (s.element_name) md << "**Element:** " << *s.element_name << "\n\n";
    md << "**Action:** `" << render_action(s.action) << "`\n\n";
  }
  return md.str();
}

CorpusStats corpus_stats(std::span<const Trajectory> corpus) {
  CorpusStats stats;
  stats.count = corpus.size();
  for (const auto& t : corpus) {
    stats.total_steps += t.steps.size();
    std::string app = "unknown";
    if (auto it = t.annotator_meta.find("app"); it != t.annotator_meta.end() && it->is_string()) {
      app = it->get<std::string>();
    }
    ++stats.per_app[app];
  }
  stats.mean_steps = stats.count == 0 ? 0.0 : static_cast<double>(stats.total_steps) / stats.count;
  return stats;
}

json corpus_stats_json(const CorpusStats& s) {
  return {{"count", s.count}, {"total_steps", s.total_steps}, {"mean_steps", s.mean_steps}, {"per_app", s.per_app}};
}

TrajectoryStore::TrajectoryStore(fs::path dir) : dir_(std::move(dir)) {}

fs::path TrajectoryStore::file_for(const std::string& id) const { return dir_ / (id + ".jsonl"); }

bool TrajectoryStore::contains(const std::string& id) const { return fs::exists(file_for(id)); }

std::vector<std::string> TrajectoryStore::ids() const {
  std::vector<std::string> out;
  if (!fs::exists(dir_)) return out;
  for (const auto& entry : fs::directory_iterator(dir_)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".jsonl") continue;
    out.push_back(entry.path().stem().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

Trajectory TrajectoryStore::load(const std::string& id) const { return load_trajectory_file(file_for(id)); }

std::vector<Trajectory> TrajectoryStore::load_all() const {
  std::vector<Trajectory> out;
  for (const auto& id : ids()) out.push_back(load(id));
  return out;
}

void TrajectoryStore::save(const Trajectory& t) const { save_trajectory_file(t, file_for(t.id)); }

ImageStore::ImageStore(fs::path workspace_root) : root_(std::move(workspace_root)) {}

std::string ImageStore::put(std::string_view png_bytes) const {
  const auto ref = "images/" + sha256_hex(png_bytes) + ".png";
  const auto path = root_ / ref;
  if (!fs::exists(path)) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out.write(png_bytes.data(), static_cast<std::streamsize>(png_bytes.size()));
    if (!out) throw IoError("cannot write '" + path.string() + "'");
  }
  return ref;
}

std::string ImageStore::put_file(const fs::path& src) const {
  std::ifstream in(src, std::ios::binary);
  if (!in) throw IoError("cannot read image '" + src.string() + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return put(bytes);
}

fs::path ImageStore::resolve(const std::string& ref) const {
  fs::path p(ref);
  return p.is_absolute() ? p : root_ / p;
}

bool ImageStore::exists(const std::string& ref) const {
  std::error_code ec;
  return !ref.empty() && fs::is_regular_file(resolve(ref), ec);
}

}  // namespace trajkit
