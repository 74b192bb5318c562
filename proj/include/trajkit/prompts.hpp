// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "trajkit/action.hpp"

namespace trajkit {

/// One prior (thought, action) pair as shown to a model.
struct HistoryEntry {
  std::string thought;
  Action action;
  bool operator==(const HistoryEntry&) const = default;
};

/// Marker rendered when there is no prior step.
inline constexpr std::string_view kNoHistory = "None";

/// Renders one "Step i" line per entry (thought, then action), numbering from
/// `first_step` (1-based). Both the training-data builder and the agent
/// runtime call this, so their history strings match byte for byte.
std::string render_history(std::span<const HistoryEntry> entries, int first_step = 1);

namespace prompts {

// Thought reconstruction.
std::string_view thought_system();
std::string thought_user(std::string_view task, std::string_view history, std::string_view action,
                         const std::optional<std::string>& element_name);
std::string_view thought_correction();
/// Phrases a reconstructed thought may not contain (case-insensitive).
std::span<const std::string_view> forbidden_mark_phrases();
bool mentions_marks(std::string_view text);

// Alternative-decision sampling.
std::string_view boost_system();
std::string boost_user(std::string_view task, std::string_view history);

// Inference scaffold (also the training-instance format).
std::string_view scaffold_system();
std::string scaffold_user(std::string_view task, std::string_view history);
std::string_view format_reminder();

// Initial-state judge used by the evaluation harness.
std::string_view init_judge_system();
std::string init_judge_user(std::string_view task, std::string_view expectation);

}  // namespace prompts
}  // namespace trajkit
