// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trajkit/gateway.hpp"
#include "trajkit/image.hpp"
#include "trajkit/prompts.hpp"
#include "trajkit/screenshots.hpp"
#include "trajkit/trajectory.hpp"

namespace trajkit {

inline constexpr int kMarkRadius = 12;
inline constexpr Rgb kMarkColor{255, 0, 0};

/// Copy of `screenshot` with the action's position marked: a filled red disc
/// for clicks, discs at both ends plus an arrow for drags. Other actions
/// return an identical copy.
Image annotate_marks(const Image& screenshot, const Action& action);
Image annotate_marks(const Observation& obs, const Action& action, const ScreenshotLoader& loader);

inline constexpr int kThoughtHistoryCap = 50;

/// Request asking the model to reconstruct the thought behind `action`.
/// Only the most recent `history_cap` entries of `history` are rendered;
/// step numbers keep their original positions.
ChatRequest build_thought_prompt(std::string_view task, std::span<const HistoryEntry> history,
                                 const Action& action, const std::optional<std::string>& element_name,
                                 std::optional<ImagePayload> marked_screenshot = std::nullopt,
                                 int history_cap = kThoughtHistoryCap);

struct ThoughtOptions {
  bool force = false;
  std::optional<std::filesystem::path> checkpoint_dir;
  ScreenshotLoader loader;  // empty: no image attached
  double temperature = 0.3;
  int max_tokens = 1024;
  int history_cap = kThoughtHistoryCap;
};

/// Reconstructs the thought of every step in order; step k's prompt carries
/// the thoughts already reconstructed for steps before k. Only thought
/// fields change. On a gateway failure the completed prefix is written to
/// the checkpoint and StageAborted is thrown; a rerun resumes from it.
///
/// A reply that mentions the screenshot marks is retried once with a
/// correction. If the retry still mentions them, the offending sentences
/// are removed and the step index is listed in
/// annotator_meta["thought_warnings"].
Trajectory complete_thoughts(const Trajectory& t, Gateway& gateway, const ThoughtOptions& options);

/// Removes sentences containing a forbidden mark phrase.
std::string scrub_mark_mentions(std::string_view text);

struct CorpusRun {
  std::vector<Trajectory> completed;
  std::vector<std::string> errors;  // one message per failed trajectory
};

/// Runs complete_thoughts over many trajectories, `width` at a time.
/// Output order follows input order; failures are collected, not thrown.
CorpusRun complete_thoughts_corpus(std::span<const Trajectory> corpus, Gateway& gateway,
                                   const ThoughtOptions& options, int width);

}  // namespace trajkit
