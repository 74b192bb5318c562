// SPDX-License-Identifier: Apache-2.0
#include "trajkit/sim_env.hpp"

#include <fstream>
#include <mutex>
#include <unordered_map>

#include "trajkit/errors.hpp"
#include "trajkit/hash.hpp"

namespace trajkit {

using nlohmann::json;

namespace {

Rect rect_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 4) throw ScenarioSchemaError(where + ": rectangle must be [x, y, width, height]");
  Rect r{j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
  if (r.width <= 0 || r.height <= 0) throw ScenarioSchemaError(where + ": rectangle must have positive size");
  return r;
}

ActionMatcher matcher_from_json(const json& j, const std::string& where) {
  if (!j.is_object() || j.size() != 1) throw ScenarioSchemaError(where + ": matcher must have exactly one key");
  const auto& [name, v] = *j.items().begin();
  ActionMatcher m;
  using K = ActionMatcher::Kind;
  if (name == "click" || name == "right_click" || name == "double_click") {
    m.kind = name == "click" ? K::Click : name == "right_click" ? K::RightClick : K::DoubleClick;
    m.rect = rect_from_json(v, where);
  } else if (name == "drag") {
    m.kind = K::Drag;
    if (!v.is_object() || !v.contains("from") || !v.contains("to")) {
      throw ScenarioSchemaError(where + ": drag matcher needs from and to rectangles");
    }
    m.rect = rect_from_json(v["from"], where);
    m.rect_to = rect_from_json(v["to"], where);
  } else if (name == "key") {
    m.kind = K::Key;
    if (!v.is_string()) throw ScenarioSchemaError(where + ": key matcher needs a string");
    m.key = to_lower(v.get<std::string>());
  } else if (name == "hotkey") {
    m.kind = K::Hotkey;
    if (!v.is_array() || v.size() < 2 || v.size() > 3) throw ScenarioSchemaError(where + ": hotkey needs 2 or 3 keys");
    for (const auto& k : v) m.keys.push_back(to_lower(k.get<std::string>()));
  } else if (name == "text") {
    m.kind = K::Text;
    if (v.is_string()) {
      m.text = v.get<std::string>();
    } else if (!v.is_null()) {
      throw ScenarioSchemaError(where + ": text matcher needs a string or null");
    }
  } else if (name == "scroll") {
    m.kind = K::Scroll;
    const auto dir = v.is_string() ? v.get<std::string>() : std::string();
    if (dir == "up") {
      m.scroll_direction = 1;
    } else if (dir == "down") {
      m.scroll_direction = -1;
    } else if (dir != "any") {
      throw ScenarioSchemaError(where + ": scroll matcher must be up, down or any");
    }
  } else if (name == "wait") {
    m.kind = K::Wait;
  } else {
    throw ScenarioSchemaError(where + ": unknown matcher '" + name + "'");
  }
  return m;
}

std::map<std::string, std::string> string_map(const json& j, const std::string& where) {
  if (j.is_null()) return {};
  if (!j.is_object()) throw ScenarioSchemaError(where + " must be an object of strings");
  std::map<std::string, std::string> out;
  for (const auto& [k, v] : j.items()) {
    if (!v.is_string()) throw ScenarioSchemaError(where + "." + k + " must be a string");
    out[k] = v.get<std::string>();
  }
  return out;
}

}  // namespace

bool ActionMatcher::matches(const Action& a) const {
  using K = Kind;
  switch (kind) {
    case K::Click:
      if (const auto* c = std::get_if<actions::Click>(&a)) return rect.contains(c->x, c->y);
      return false;
    case K::RightClick:
      if (const auto* c = std::get_if<actions::RightClick>(&a)) return rect.contains(c->x, c->y);
      return false;
    case K::DoubleClick:
      if (const auto* c = std::get_if<actions::DoubleClick>(&a)) return rect.contains(c->x, c->y);
      return false;
    case K::Drag:
      if (const auto* d = std::get_if<actions::Drag>(&a)) return rect.contains(d->x1, d->y1) && rect_to.contains(d->x2, d->y2);
      return false;
    case K::Key:
      if (const auto* k = std::get_if<actions::PressKey>(&a)) return to_lower(k->key) == key;
      return false;
    case K::Hotkey:
      if (const auto* h = std::get_if<actions::Hotkey>(&a)) {
        if (h->keys.size() != keys.size()) return false;
        for (std::size_t i = 0; i < keys.size(); ++i) {
          if (to_lower(h->keys[i]) != keys[i]) return false;
        }
        return true;
      }
      return false;
    case K::Text:
      if (const auto* t = std::get_if<actions::TypeText>(&a)) return !text || *text == t->text;
      return false;
    case K::Scroll:
      if (const auto* s = std::get_if<actions::Scroll>(&a)) {
        if (scroll_direction > 0) return s->offset > 0;
        if (scroll_direction < 0) return s->offset < 0;
        return true;
      }
      return false;
    case K::Wait:
      return std::holds_alternative<actions::Wait>(a);
  }
  return false;
}

Scenario scenario_from_json(const json& j) {
  if (!j.is_object()) throw ScenarioSchemaError("scenario must be a JSON object");
  Scenario s;
  try {
    s.name = j.value("name", std::string("scenario"));
    if (j.contains("resolution")) {
      const auto& r = j["resolution"];
      if (!r.is_array() || r.size() != 2) throw ScenarioSchemaError("resolution must be [width, height]");
      s.resolution = make_resolution(r[0].get<int>(), r[1].get<int>());
    }
    if (!j.contains("initial") || !j["initial"].is_string()) throw ScenarioSchemaError("scenario needs an initial state");
    s.initial = j["initial"].get<std::string>();
    s.variables = string_map(j.value("variables", json(nullptr)), "variables");
    if (!j.contains("states") || !j["states"].is_object() || j["states"].empty()) {
      throw ScenarioSchemaError("scenario needs a non-empty states object");
    }
    for (const auto& [name, sj] : j["states"].items()) {
      const std::string where = "state '" + name + "'";
      if (!sj.is_object()) throw ScenarioSchemaError(where + " must be an object");
      ScenarioState st;
      st.screenshot = sj.value("screenshot", "sim://" + s.name + "/" + name);
      st.description = sj.value("description", std::string());
      const auto transitions = sj.value("transitions", json::array());
      if (!transitions.is_array()) throw ScenarioSchemaError(where + ": transitions must be an array");
      for (std::size_t i = 0; i < transitions.size(); ++i) {
        const auto& tj = transitions[i];
        const std::string tw = where + " transition " + std::to_string(i);
        if (!tj.is_object() || !tj.contains("on")) throw ScenarioSchemaError(tw + " needs an 'on' matcher");
        Transition t;
        t.on = matcher_from_json(tj["on"], tw);
        t.when = string_map(tj.value("when", json(nullptr)), tw + ".when");
        t.set = string_map(tj.value("set", json(nullptr)), tw + ".set");
        if (tj.contains("to")) t.to = tj["to"].get<std::string>();
        st.transitions.push_back(std::move(t));
      }
      s.states.emplace(name, std::move(st));
    }
  } catch (const json::exception& e) {
    throw ScenarioSchemaError(std::string("scenario: ") + e.what());
  } catch (const InvalidAction& e) {
    throw ScenarioSchemaError(std::string("scenario: ") + e.what());
  }
  if (!s.states.contains(s.initial)) throw ScenarioSchemaError("initial state '" + s.initial + "' is not defined");
  for (const auto& [name, st] : s.states) {
    for (const auto& t : st.transitions) {
      if (t.to && !s.states.contains(*t.to)) {
        throw ScenarioSchemaError("state '" + name + "' transitions to undefined state '" + *t.to + "'");
      }
    }
  }
  return s;
}

Scenario load_scenario_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ScenarioSchemaError("scenario '" + path.string() + "': " + e.what());
  }
  return scenario_from_json(j);
}

SimulatedEnvironment::SimulatedEnvironment(std::shared_ptr<const Scenario> scenario)
    : scenario_(std::move(scenario)) {
  if (!scenario_) throw PreconditionError("simulated environment needs a scenario");
  current_ = pristine();
}

SimulatedEnvironment::Snapshot SimulatedEnvironment::pristine() const {
  return Snapshot{scenario_->initial, scenario_->variables, 0, false};
}

Observation SimulatedEnvironment::observe() {
  Observation o;
  o.resolution = scenario_->resolution;
  o.screenshot_ref = current_.faulted ? std::string(kFaultScreenshot) : scenario_->states.at(current_.state).screenshot;
  return o;
}

ExecResult SimulatedEnvironment::execute(const Action& action) {
  if (current_.faulted) return {false, "environment fault"};
  if (is_terminal(action)) throw PreconditionError("terminal actions are not executed");
  if (auto bad = validate_bounds(action, scenario_->resolution); !bad.empty()) {
    return {false, "out of bounds: " + bad.front().field + "=" + std::to_string(bad.front().value)};
  }
  const auto& st = scenario_->states.at(current_.state);
  for (const auto& t : st.transitions) {
    if (!t.on.matches(action)) continue;
    bool guards = true;
    for (const auto& [k, v] : t.when) {
      auto it = current_.variables.find(k);
      if (it == current_.variables.end() || it->second != v) {
        guards = false;
        break;
      }
    }
    if (!guards) continue;
    for (const auto& [k, v] : t.set) current_.variables[k] = v;
    if (t.to) current_.state = *t.to;
    if (std::holds_alternative<actions::Wait>(action)) ++current_.ticks;
    return {true, ""};
  }
  if (std::holds_alternative<actions::Wait>(action)) {
    ++current_.ticks;
    return {true, "tick"};
  }
  return {false, "no-transition"};
}

SimulatedEnvironment::Snapshot SimulatedEnvironment::snapshot() const { return current_; }

void SimulatedEnvironment::restore(const Snapshot& s) {
  if (!scenario_->states.contains(s.state)) throw PreconditionError("snapshot state '" + s.state + "' is unknown");
  current_ = s;
}

void SimulatedEnvironment::set_variable(const std::string& name, std::string value) {
  current_.variables[name] = std::move(value);
}

void SimulatedEnvironment::set_state(const std::string& name) {
  if (!scenario_->states.contains(name)) throw PreconditionError("state '" + name + "' is unknown");
  current_.state = name;
}

ImageProvider synthetic_image_provider() {
  struct Cache {
    std::mutex mu;
    std::unordered_map<std::string, ImagePayload> items;
  };
  auto cache = std::make_shared<Cache>();
  return [cache](const Observation& obs) -> std::optional<ImagePayload> {
    const std::string key = obs.screenshot_ref + "@" + std::to_string(obs.resolution.width) + "x" +
                            std::to_string(obs.resolution.height);
    {
      std::lock_guard lock(cache->mu);
      if (auto it = cache->items.find(key); it != cache->items.end()) return it->second;
    }
    const auto h = stable_hash(obs.screenshot_ref);
    Image img(obs.resolution.width, obs.resolution.height,
              Rgb{static_cast<std::uint8_t>(h), static_cast<std::uint8_t>(h >> 8), static_cast<std::uint8_t>(h >> 16)});
    auto payload = make_payload(img, obs.screenshot_ref);
    std::lock_guard lock(cache->mu);
    return cache->items.emplace(key, std::move(payload)).first->second;
  };
}

}  // namespace trajkit
