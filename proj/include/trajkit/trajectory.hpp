// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "trajkit/action.hpp"

namespace trajkit {

struct Observation {
  std::string screenshot_ref;  // relative to the workspace root, or a content hash
  Resolution resolution;
  std::optional<std::int64_t> timestamp_ms;
  bool operator==(const Observation&) const = default;
};

struct Step {
  int index = 0;
  Observation observation;
  std::optional<std::string> thought;  // absent until thought completion
  Action action;
  std::optional<std::string> element_name;
  bool operator==(const Step&) const = default;
};

enum class Terminal { Finish, Fail };

std::string_view terminal_name(Terminal t);
Terminal terminal_from_name(std::string_view name);

struct Trajectory {
  std::string id;
  std::string task_description;
  std::vector<Step> steps;
  Terminal terminal = Terminal::Finish;
  nlohmann::json annotator_meta = nlohmann::json::object();
  bool operator==(const Trajectory&) const = default;

  bool has_all_thoughts() const;
};

/// Checks the structural invariants: non-empty, contiguous 0-based indices,
/// Finish/Fail only as the last action and agreeing with `terminal`.
/// Throws SchemaError or OrderError.
void validate_trajectory(const Trajectory& t);

/// Reads a header record followed by one record per step (JSON Lines).
/// Throws SchemaError, OrderError or StepActionError.
Trajectory load_trajectory(std::istream& in);
void save_trajectory(const Trajectory& t, std::ostream& out);

Trajectory load_trajectory_file(const std::filesystem::path& path);
void save_trajectory_file(const Trajectory& t, const std::filesystem::path& path);

nlohmann::json step_to_json(const Step& s);
Step step_from_json(const nlohmann::json& j);

/// Markdown visualisation: one "## Step N" section per step.
std::string export_markdown(const Trajectory& t);

struct CorpusStats {
  std::size_t count = 0;
  std::size_t total_steps = 0;
  double mean_steps = 0.0;  // 0 for an empty corpus
  std::map<std::string, std::size_t> per_app;
};

/// Application tag is `annotator_meta["app"]`; missing tags count as "unknown".
CorpusStats corpus_stats(std::span<const Trajectory> corpus);
nlohmann::json corpus_stats_json(const CorpusStats& s);

/// Directory of `<id>.jsonl` trajectory files.
class TrajectoryStore {
 public:
  explicit TrajectoryStore(std::filesystem::path dir);

  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path file_for(const std::string& id) const;
  bool contains(const std::string& id) const;
  /// Sorted ids of stored trajectories.
  std::vector<std::string> ids() const;
  Trajectory load(const std::string& id) const;
  std::vector<Trajectory> load_all() const;
  void save(const Trajectory& t) const;

 private:
  std::filesystem::path dir_;
};

/// Content-addressed screenshot store. References have the form
/// "images/<sha256>.png" relative to the workspace root.
class ImageStore {
 public:
  explicit ImageStore(std::filesystem::path workspace_root);

  std::string put(std::string_view png_bytes) const;
  std::string put_file(const std::filesystem::path& src) const;
  std::filesystem::path resolve(const std::string& ref) const;
  bool exists(const std::string& ref) const;

 private:
  std::filesystem::path root_;
};

}  // namespace trajkit
