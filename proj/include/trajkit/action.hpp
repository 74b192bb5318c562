// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

namespace trajkit {

/// Unified computer-use action space. Coordinates are screen pixels with the
/// origin at the top-left corner.
namespace actions {

struct Click {
  int x = 0;
  int y = 0;
  bool operator==(const Click&) const = default;
};
struct RightClick {
  int x = 0;
  int y = 0;
  bool operator==(const RightClick&) const = default;
};
struct DoubleClick {
  int x = 0;
  int y = 0;
  bool operator==(const DoubleClick&) const = default;
};
struct Drag {
  int x1 = 0;
  int y1 = 0;
  int x2 = 0;
  int y2 = 0;
  bool operator==(const Drag&) const = default;
};
/// Positive offsets scroll up, negative scroll down.
struct Scroll {
  int offset = 0;
  bool operator==(const Scroll&) const = default;
};
struct PressKey {
  std::string key;
  bool operator==(const PressKey&) const = default;
};
/// Two or three keys pressed together, e.g. {"ctrl", "c"}.
struct Hotkey {
  std::vector<std::string> keys;
  bool operator==(const Hotkey&) const = default;
};
/// Single-line text. Newlines typed by a human are stored as the two
/// characters `\n` (see make_type_text).
struct TypeText {
  std::string text;
  bool operator==(const TypeText&) const = default;
};
struct Wait {
  bool operator==(const Wait&) const = default;
};
struct Finish {
  bool operator==(const Finish&) const = default;
};
struct Fail {
  bool operator==(const Fail&) const = default;
};

}  // namespace actions

using Action = std::variant<actions::Click, actions::RightClick, actions::DoubleClick,
                            actions::Drag, actions::Scroll, actions::PressKey,
                            actions::Hotkey, actions::TypeText, actions::Wait,
                            actions::Finish, actions::Fail>;

struct Resolution {
  int width = 1280;
  int height = 720;
  bool operator==(const Resolution&) const = default;
};

/// Axis-aligned pixel rectangle; contains() is half-open on both axes.
struct Rect {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;
  bool contains(int px, int py) const { return px >= x && py >= y && px < x + width && py < y + height; }
  bool operator==(const Rect&) const = default;
};

/// Throws InvalidAction unless width and height are positive.
Resolution make_resolution(int width, int height);

/// Parses one line of the action grammar. Keywords are case-insensitive and
/// whitespace between tokens is flexible. Throws UnknownAction when no rule
/// matches and MalformedArguments when a rule matches but its arguments don't.
Action parse_action(std::string_view text);

/// Canonical single-line surface form, e.g. "drag from (1, 2) to (3, 4)".
std::string render_action(const Action& action);

/// Empty when the action satisfies the type invariants, otherwise a
/// description of the first violation.
std::string action_invariant_violation(const Action& action);
inline bool is_valid_action(const Action& action) {
  return action_invariant_violation(action).empty();
}

/// Builds a TypeText from raw typed content: newlines and carriage returns
/// are escaped and surrounding whitespace trimmed.
actions::TypeText make_type_text(std::string_view raw);

bool is_terminal(const Action& action);
/// True for click, right click, double click and drag.
bool has_coordinates(const Action& action);

/// Short stable name of the variant ("click", "hotkey", ...).
std::string_view action_kind(const Action& action);

struct Decision {
  std::string thought;
  Action action;
  bool operator==(const Decision&) const = default;
};

/// Splits a model completion at its last line beginning with "Action:".
/// The text before that line (trimmed) is the thought. Throws
/// MissingActionLine or an ActionParseError naming the offending line.
Decision parse_decision(std::string_view model_output);

/// Inverse of parse_decision for canonical output.
std::string render_decision(const std::string& thought, const Action& action);

struct BoundsViolation {
  std::string field;  // "x", "y", "x1", ...
  int value = 0;
  int limit = 0;
  bool operator==(const BoundsViolation&) const = default;
};

/// Coordinates must satisfy 0 <= x < width and 0 <= y < height.
std::vector<BoundsViolation> validate_bounds(const Action& action, Resolution resolution);

// Tagged-object JSON form: {"type": "click", "x": 1, "y": 2}.
nlohmann::json action_to_json(const Action& action);
Action action_from_json(const nlohmann::json& j);

// String helpers shared by the text-format modules.
std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);

}  // namespace trajkit
