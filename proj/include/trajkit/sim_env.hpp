// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "trajkit/agent.hpp"
#include "trajkit/screenshots.hpp"

namespace trajkit {

/// Predicate on an action. Click-family matchers use rectangles, and a drag
/// matches when it starts in `rect` and ends in `rect_to`.
struct ActionMatcher {
  enum class Kind { Click, RightClick, DoubleClick, Drag, Key, Hotkey, Text, Scroll, Wait };
  Kind kind = Kind::Click;
  Rect rect;
  Rect rect_to;
  std::string key;                // lower-cased
  std::vector<std::string> keys;  // lower-cased, order-sensitive
  std::optional<std::string> text;  // unset: any text
  int scroll_direction = 0;         // +1 up, -1 down, 0 either

  bool matches(const Action& a) const;
};

struct Transition {
  ActionMatcher on;
  std::map<std::string, std::string> when;  // required variable values
  std::optional<std::string> to;            // unset: stay
  std::map<std::string, std::string> set;
};

struct ScenarioState {
  std::string screenshot;
  std::string description;
  std::vector<Transition> transitions;
};

struct Scenario {
  std::string name;
  Resolution resolution;
  std::string initial;
  std::map<std::string, std::string> variables;
  std::map<std::string, ScenarioState> states;
};

/// Throws ScenarioSchemaError on any structural problem.
Scenario scenario_from_json(const nlohmann::json& j);
Scenario load_scenario_file(const std::filesystem::path& path);

/// Scripted state machine implementing EnvironmentPort.
class SimulatedEnvironment : public EnvironmentPort {
 public:
  struct Snapshot {
    std::string state;
    std::map<std::string, std::string> variables;
    long ticks = 0;
    bool faulted = false;
    bool operator==(const Snapshot&) const = default;
  };

  explicit SimulatedEnvironment(std::shared_ptr<const Scenario> scenario);

  Observation observe() override;
  /// Applies the first transition whose matcher and guards hold. Every Wait
  /// advances the tick counter and succeeds even without a transition. Any
  /// other unmatched action leaves the state alone and reports "no-transition".
  ExecResult execute(const Action& action) override;
  Resolution resolution() const override { return scenario_->resolution; }

  Snapshot snapshot() const;
  void restore(const Snapshot& s);
  /// The scenario's initial configuration.
  Snapshot pristine() const;

  const std::string& state() const { return current_.state; }
  const std::map<std::string, std::string>& variables() const { return current_.variables; }
  void set_variable(const std::string& name, std::string value);
  void set_state(const std::string& name);
  long ticks() const { return current_.ticks; }

  /// Simulates a broken setup: the screen shows an error page and every
  /// action is rejected until restore().
  void inject_fault() { current_.faulted = true; }
  bool faulted() const { return current_.faulted; }

  const Scenario& scenario() const { return *scenario_; }

 private:
  std::shared_ptr<const Scenario> scenario_;
  Snapshot current_;
};

inline constexpr std::string_view kFaultScreenshot = "sim://fault";

/// Solid-colour PNG per screenshot reference (colour derived from the ref),
/// cached, so scripted mocks can key on the attached image.
ImageProvider synthetic_image_provider();

}  // namespace trajkit
