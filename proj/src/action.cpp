// SPDX-License-Identifier: Apache-2.0
#include "trajkit/action.hpp"

#include <algorithm>
#include <cctype>
#include <climits>
#include <optional>

#include "trajkit/errors.hpp"

namespace trajkit {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_word(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_'; }
char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

bool has_space(std::string_view s) { return std::any_of(s.begin(), s.end(), is_space); }

// Recursive-descent cursor over one trimmed action line.
class Cursor {
 public:
  explicit Cursor(std::string_view s) : s_(s) {}

  void skip_ws() {
    while (pos_ < s_.size() && is_space(s_[pos_])) ++pos_;
  }

  bool at_end() {
    skip_ws();
    return pos_ == s_.size();
  }

  // Matches a phrase such as "right click" word by word, case-insensitively.
  // Whitespace between words is optional; the last word must end at a word
  // boundary. Restores the position on failure.
  bool phrase(std::initializer_list<std::string_view> words) {
    const size_t saved = pos_;
    for (auto w : words) {
      skip_ws();
      if (s_.size() - pos_ < w.size()) {
        pos_ = saved;
        return false;
      }
      for (size_t i = 0; i < w.size(); ++i) {
        if (lower(s_[pos_ + i]) != w[i]) {
          pos_ = saved;
          return false;
        }
      }
      pos_ += w.size();
    }
    if (pos_ < s_.size() && is_word(s_[pos_])) {
      pos_ = saved;
      return false;
    }
    return true;
  }

  bool consume(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  std::optional<int> integer(bool allow_sign) {
    skip_ws();
    size_t p = pos_;
    bool negative = false;
    if (allow_sign && p < s_.size() && (s_[p] == '-' || s_[p] == '+')) {
      negative = s_[p] == '-';
      ++p;
    }
    if (p >= s_.size() || !std::isdigit(static_cast<unsigned char>(s_[p]))) return std::nullopt;
    long long value = 0;
    while (p < s_.size() && std::isdigit(static_cast<unsigned char>(s_[p]))) {
      value = value * 10 + (s_[p] - '0');
      if (value > static_cast<long long>(INT_MAX) + 1) return std::nullopt;
      ++p;
    }
    if (negative) value = -value;
    if (value > INT_MAX || value < INT_MIN) return std::nullopt;
    pos_ = p;
    return static_cast<int>(value);
  }

  std::string_view rest() const { return s_.substr(pos_); }

 private:
  std::string_view s_;
  size_t pos_ = 0;
};

// "(x, y)" with non-negative base-10 integers.
std::pair<int, int> parse_point(Cursor& c, const std::string& text) {
  if (!c.consume('(')) throw MalformedArguments(text, "expected '('");
  auto x = c.integer(false);
  if (!x) throw MalformedArguments(text, "x is not a non-negative integer");
  if (!c.consume(',')) throw MalformedArguments(text, "expected ','");
  auto y = c.integer(false);
  if (!y) throw MalformedArguments(text, "y is not a non-negative integer");
  if (!c.consume(')')) throw MalformedArguments(text, "expected ')'");
  return {*x, *y};
}

void expect_end(Cursor& c, const std::string& text) {
  if (!c.at_end()) throw MalformedArguments(text, "unexpected trailing input '" + std::string(c.rest()) + "'");
}

template <typename T>
Action parse_point_action(Cursor& c, const std::string& text) {
  auto [x, y] = parse_point(c, text);
  expect_end(c, text);
  return T{x, y};
}

std::string_view ltrim(std::string_view s) {
  size_t i = 0;
  while (i < s.size() && is_space(s[i])) ++i;
  return s.substr(i);
}

std::string payload_after_colon(Cursor& c, const std::string& text) {
  if (!c.consume(':')) throw MalformedArguments(text, "expected ':'");
  const auto payload = ltrim(c.rest());
  if (payload.find_first_of("\r\n") != std::string_view::npos) {
    throw MalformedArguments(text, "payload spans more than one line");
  }
  return std::string(payload);
}

Action parse_hotkey(Cursor& c, const std::string& text) {
  if (!c.consume('(')) throw MalformedArguments(text, "expected '('");
  std::string_view body = c.rest();
  auto close = body.rfind(')');
  if (close == std::string_view::npos) throw MalformedArguments(text, "expected ')'");
  if (!trim(body.substr(close + 1)).empty()) {
    throw MalformedArguments(text, "unexpected trailing input after ')'");
  }
  body = body.substr(0, close);
  std::vector<std::string> keys;
  size_t start = 0;
  while (true) {
    auto comma = body.find(',', start);
    auto piece = trim(body.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                          : comma - start));
    if (piece.empty()) throw MalformedArguments(text, "empty key name");
    if (has_space(piece)) throw MalformedArguments(text, "key name contains whitespace");
    if (piece.find_first_of("()") != std::string_view::npos) {
      throw MalformedArguments(text, "key name contains a parenthesis");
    }
    keys.emplace_back(piece);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (keys.size() < 2 || keys.size() > 3) {
    throw MalformedArguments(text, "hotkey needs 2 or 3 keys, got " + std::to_string(keys.size()));
  }
  return actions::Hotkey{std::move(keys)};
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string point(int x, int y) { return "(" + std::to_string(x) + ", " + std::to_string(y) + ")"; }

bool starts_with_action_tag(std::string_view line) {
  line = ltrim(line);
  constexpr std::string_view tag = "action:";
  if (line.size() < tag.size()) return false;
  for (size_t i = 0; i < tag.size(); ++i) {
    if (lower(line[i]) != tag[i]) return false;
  }
  return true;
}

}  // namespace

std::string_view trim(std::string_view s) {
  size_t b = 0;
  size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), lower);
  return out;
}

Resolution make_resolution(int width, int height) {
  if (width <= 0 || height <= 0) {
    throw InvalidAction("resolution must be positive, got " + std::to_string(width) + "x" +
                        std::to_string(height));
  }
  return Resolution{width, height};
}

Action parse_action(std::string_view input) {
  const auto line = trim(input);
  const std::string text(line);
  Cursor c(line);

  // Longer phrases first so "right click" is not read as "right" + junk.
  if (c.phrase({"right", "click"})) return parse_point_action<actions::RightClick>(c, text);
  if (c.phrase({"double", "click"})) return parse_point_action<actions::DoubleClick>(c, text);
  if (c.phrase({"click"})) return parse_point_action<actions::Click>(c, text);
  if (c.phrase({"drag"})) {
    if (!c.phrase({"from"})) throw MalformedArguments(text, "expected 'from'");
    auto [x1, y1] = parse_point(c, text);
    if (!c.phrase({"to"})) throw MalformedArguments(text, "expected 'to'");
    auto [x2, y2] = parse_point(c, text);
    expect_end(c, text);
    return actions::Drag{x1, y1, x2, y2};
  }
  if (c.phrase({"scroll"})) {
    if (!c.consume('(')) throw MalformedArguments(text, "expected '('");
    auto offset = c.integer(true);
    if (!offset) throw MalformedArguments(text, "offset is not an integer");
    if (!c.consume(')')) throw MalformedArguments(text, "expected ')'");
    expect_end(c, text);
    return actions::Scroll{*offset};
  }
  if (c.phrase({"press", "key"})) {
    auto key = payload_after_colon(c, text);
    if (key.empty()) throw MalformedArguments(text, "empty key name");
    return actions::PressKey{std::move(key)};
  }
  if (c.phrase({"hotkey"})) return parse_hotkey(c, text);
  if (c.phrase({"type", "text"})) {
    auto payload = payload_after_colon(c, text);
    if (payload.empty()) throw MalformedArguments(text, "empty text");
    return actions::TypeText{std::move(payload)};
  }
  if (c.phrase({"wait"})) {
    expect_end(c, text);
    return actions::Wait{};
  }
  if (c.phrase({"finish"})) {
    expect_end(c, text);
    return actions::Finish{};
  }
  if (c.phrase({"fail"})) {
    expect_end(c, text);
    return actions::Fail{};
  }
  throw UnknownAction(text);
}

std::string render_action(const Action& action) {
  return std::visit(
      overloaded{
          [](const actions::Click& a) { return "click " + point(a.x, a.y); },
          [](const actions::RightClick& a) { return "right click " + point(a.x, a.y); },
          [](const actions::DoubleClick& a) { return "double click " + point(a.x, a.y); },
          [](const actions::Drag& a) {
            return "drag from " + point(a.x1, a.y1) + " to " + point(a.x2, a.y2);
          },
          [](const actions::Scroll& a) { return "scroll (" + std::to_string(a.offset) + ")"; },
          [](const actions::PressKey& a) { return "press key: " + a.key; },
          [](const actions::Hotkey& a) {
            std::string out = "hotkey (";
            for (size_t i = 0; i < a.keys.size(); ++i) {
              if (i) out += ", ";
              out += a.keys[i];
            }
            return out + ")";
          },
          [](const actions::TypeText& a) { return "type text: " + a.text; },
          [](const actions::Wait&) { return std::string("wait"); },
          [](const actions::Finish&) { return std::string("finish"); },
          [](const actions::Fail&) { return std::string("fail"); },
      },
      action);
}

std::string action_invariant_violation(const Action& action) {
  auto coord = [](int v, const char* name) -> std::string {
    return v < 0 ? std::string(name) + " is negative" : std::string();
  };
  auto first = [](std::initializer_list<std::string> xs) {
    for (const auto& x : xs)
      if (!x.empty()) return x;
    return std::string();
  };
  auto single_line_payload = [](const std::string& s, const char* what) -> std::string {
    if (s.find_first_of("\r\n") != std::string::npos) return std::string(what) + " contains a newline";
    if (trim(s).size() != s.size()) return std::string(what) + " has surrounding whitespace";
    return {};
  };
  return std::visit(
      overloaded{
          [&](const actions::Click& a) { return first({coord(a.x, "x"), coord(a.y, "y")}); },
          [&](const actions::RightClick& a) { return first({coord(a.x, "x"), coord(a.y, "y")}); },
          [&](const actions::DoubleClick& a) { return first({coord(a.x, "x"), coord(a.y, "y")}); },
          [&](const actions::Drag& a) {
            return first({coord(a.x1, "x1"), coord(a.y1, "y1"), coord(a.x2, "x2"), coord(a.y2, "y2")});
          },
          [](const actions::Scroll&) { return std::string(); },
          [&](const actions::PressKey& a) {
            if (a.key.empty()) return std::string("key is empty");
            return single_line_payload(a.key, "key");
          },
          [](const actions::Hotkey& a) {
            if (a.keys.size() < 2 || a.keys.size() > 3) return std::string("hotkey needs 2 or 3 keys");
            for (const auto& k : a.keys) {
              if (k.empty() || has_space(k) || k.find_first_of(",()") != std::string::npos) {
                return "invalid hotkey key '" + k + "'";
              }
            }
            return std::string();
          },
          [&](const actions::TypeText& a) {
            if (a.text.empty()) return std::string("text is empty");
            return single_line_payload(a.text, "text");
          },
          [](const actions::Wait&) { return std::string(); },
          [](const actions::Finish&) { return std::string(); },
          [](const actions::Fail&) { return std::string(); },
      },
      action);
}

actions::TypeText make_type_text(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] == '\r') {
      if (i + 1 < raw.size() && raw[i + 1] == '\n') ++i;
      out += "\\n";
    } else if (raw[i] == '\n') {
      out += "\\n";
    } else {
      out += raw[i];
    }
  }
  return actions::TypeText{std::string(trim(out))};
}

bool is_terminal(const Action& action) {
  return std::holds_alternative<actions::Finish>(action) || std::holds_alternative<actions::Fail>(action);
}

bool has_coordinates(const Action& action) {
  return std::holds_alternative<actions::Click>(action) ||
         std::holds_alternative<actions::RightClick>(action) ||
         std::holds_alternative<actions::DoubleClick>(action) ||
         std::holds_alternative<actions::Drag>(action);
}

std::string_view action_kind(const Action& action) {
  static constexpr std::string_view names[] = {"click",     "right_click", "double_click",
                                               "drag",      "scroll",      "press_key",
                                               "hotkey",    "type_text",   "wait",
                                               "finish",    "fail"};
  static_assert(std::size(names) == std::variant_size_v<Action>);
  return names[action.index()];
}

Decision parse_decision(std::string_view model_output) {
  std::vector<std::string_view> lines;
  size_t start = 0;
  while (start <= model_output.size()) {
    auto nl = model_output.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.push_back(model_output.substr(start));
      break;
    }
    lines.push_back(model_output.substr(start, nl - start));
    start = nl + 1;
  }

  size_t idx = lines.size();
  for (size_t i = lines.size(); i-- > 0;) {
    if (starts_with_action_tag(lines[i])) {
      idx = i;
      break;
    }
  }
  if (idx == lines.size()) throw MissingActionLine();

  size_t thought_end = static_cast<size_t>(lines[idx].data() - model_output.data());
  auto thought = trim(model_output.substr(0, thought_end));
  auto tagged = ltrim(lines[idx]);
  auto action_text = trim(tagged.substr(7));

  const std::string where =
      " (line " + std::to_string(idx + 1) + ": '" + std::string(trim(lines[idx])) + "')";
  try {
    return Decision{std::string(thought), parse_action(action_text)};
  } catch (const UnknownAction& e) {
    throw UnknownAction(UnknownAction::Message{}, e.what() + where);
  } catch (const MalformedArguments& e) {
    throw MalformedArguments(MalformedArguments::Message{}, e.what() + where);
  }
}

std::string render_decision(const std::string& thought, const Action& action) {
  return thought + "\nAction: " + render_action(action);
}

std::vector<BoundsViolation> validate_bounds(const Action& action, Resolution r) {
  std::vector<BoundsViolation> out;
  auto check = [&](const char* name, int v, int limit) {
    if (v < 0 || v >= limit) out.push_back({name, v, limit});
  };
  std::visit(overloaded{
                 [&](const actions::Click& a) { check("x", a.x, r.width), check("y", a.y, r.height); },
                 [&](const actions::RightClick& a) {
                   check("x", a.x, r.width), check("y", a.y, r.height);
                 },
                 [&](const actions::DoubleClick& a) {
                   check("x", a.x, r.width), check("y", a.y, r.height);
                 },
                 [&](const actions::Drag& a) {
                   check("x1", a.x1, r.width), check("y1", a.y1, r.height);
                   check("x2", a.x2, r.width), check("y2", a.y2, r.height);
                 },
                 [](const auto&) {},
             },
             action);
  return out;
}

nlohmann::json action_to_json(const Action& action) {
  using nlohmann::json;
  json j = {{"type", std::string(action_kind(action))}};
  std::visit(overloaded{
                 [&](const actions::Click& a) { j["x"] = a.x, j["y"] = a.y; },
                 [&](const actions::RightClick& a) { j["x"] = a.x, j["y"] = a.y; },
                 [&](const actions::DoubleClick& a) { j["x"] = a.x, j["y"] = a.y; },
                 [&](const actions::Drag& a) {
                   j["x1"] = a.x1, j["y1"] = a.y1, j["x2"] = a.x2, j["y2"] = a.y2;
                 },
                 [&](const actions::Scroll& a) { j["offset"] = a.offset; },
                 [&](const actions::PressKey& a) { j["key"] = a.key; },
                 [&](const actions::Hotkey& a) { j["keys"] = a.keys; },
                 [&](const actions::TypeText& a) { j["text"] = a.text; },
                 [](const auto&) {},
             },
             action);
  return j;
}

Action action_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) {
    throw SchemaError("action object needs a string 'type'");
  }
  const auto type = j["type"].get<std::string>();
  auto integer = [&](const char* key) {
    if (!j.contains(key) || !j[key].is_number_integer()) {
      throw SchemaError("action '" + type + "' needs integer field '" + key + "'");
    }
    return j[key].get<int>();
  };
  auto string = [&](const char* key) {
    if (!j.contains(key) || !j[key].is_string()) {
      throw SchemaError("action '" + type + "' needs string field '" + key + "'");
    }
    return j[key].get<std::string>();
  };

  Action a;
  if (type == "click") a = actions::Click{integer("x"), integer("y")};
  else if (type == "right_click") a = actions::RightClick{integer("x"), integer("y")};
  else if (type == "double_click") a = actions::DoubleClick{integer("x"), integer("y")};
  else if (type == "drag") a = actions::Drag{integer("x1"), integer("y1"), integer("x2"), integer("y2")};
  else if (type == "scroll") a = actions::Scroll{integer("offset")};
  else if (type == "press_key") a = actions::PressKey{string("key")};
  else if (type == "hotkey") {
    if (!j.contains("keys") || !j["keys"].is_array()) throw SchemaError("hotkey needs array 'keys'");
    std::vector<std::string> keys;
    for (const auto& k : j["keys"]) {
      if (!k.is_string()) throw SchemaError("hotkey keys must be strings");
      keys.push_back(k.get<std::string>());
    }
    a = actions::Hotkey{std::move(keys)};
  } else if (type == "type_text") a = make_type_text(string("text"));
  else if (type == "wait") a = actions::Wait{};
  else if (type == "finish") a = actions::Finish{};
  else if (type == "fail") a = actions::Fail{};
  else throw SchemaError("unknown action type '" + type + "'");

  if (auto why = action_invariant_violation(a); !why.empty()) throw InvalidAction(why);
  return a;
}

}  // namespace trajkit
