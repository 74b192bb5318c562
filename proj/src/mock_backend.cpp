// SPDX-License-Identifier: Apache-2.0
#include <fstream>
#include <thread>

#include "trajkit/errors.hpp"
#include "trajkit/hash.hpp"
#include "trajkit/kernels.hpp"
#include "trajkit/mock.hpp"

namespace trajkit {

using nlohmann::json;

namespace {

std::vector<std::string> string_or_list(const json& j, const char* key) {
  std::vector<std::string> out;
  if (!j.contains(key)) return out;
  if (j[key].is_string()) out.push_back(j[key].get<std::string>());
  else out = j[key].get<std::vector<std::string>>();
  return out;
}

void replace_all(std::string& s, const std::string& from, const std::string& to) {
  for (size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos; pos += to.size()) s.replace(pos, from.size(), to);
}

}  // namespace

ScriptedBackend::ScriptedBackend(const ScriptedBackend& other)
    : rules_(other.rules_),
      default_reply_(other.default_reply_),
      embeddings_(other.embeddings_),
      embedding_fallback_(other.embedding_fallback_),
      embedding_unavailable_(other.embedding_unavailable_),
      record_transcript_(other.record_transcript_) {}

ScriptedBackend ScriptedBackend::from_json(const json& script) {
  ScriptedBackend b;
  try {
    for (const auto& r : script.value("rules", json::array())) {
      MockRule rule;
      rule.contains = string_or_list(r, "contains");
      rule.not_contains = string_or_list(r, "not_contains");
      if (r.contains("screenshot")) rule.screenshot = r["screenshot"].get<std::string>();
      if (r.contains("hash")) rule.hash = r["hash"].get<std::string>();
      if (r.contains("slot")) rule.slot = r["slot"].get<int>();
      rule.replies = string_or_list(r, "replies");
      if (r.contains("reply")) rule.replies.push_back(r["reply"].get<std::string>());
      rule.cycle = r.value("cycle", false);
      rule.fail_times = r.value("fail_times", 0);
      rule.always_fail = r.value("always_fail", false);
      rule.failure = r.value("failure", rule.failure);
      rule.delay_ms = r.value("delay_ms", 0);
      b.add_rule(std::move(rule));
    }
    if (script.contains("default") && !script["default"].is_null()) {
      b.set_default(script["default"].get<std::string>());
    }
    const auto embeddings = script.value("embeddings", json::object());
    for (const auto& [text, v] : embeddings.items()) {
      b.set_embedding(text, v.get<std::vector<double>>());
    }
    b.set_embedding_fallback(script.value("embedding_fallback", std::string("error")));
    b.set_embedding_unavailable(script.value("embedding_unavailable", false));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("mock script: ") + e.what());
  }
  return b;
}

ScriptedBackend ScriptedBackend::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open mock script '" + path.string() + "'");
  try {
    return from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ConfigError("mock script '" + path.string() + "': " + e.what());
  }
}

ScriptedBackend& ScriptedBackend::add_rule(MockRule rule) {
  if (rule.replies.empty() && !rule.always_fail) throw ConfigError("mock rule has no replies");
  if (rule.failure != "rate_limited" && rule.failure != "timeout" && rule.failure != "protocol") {
    throw ConfigError("unknown mock failure '" + rule.failure + "'");
  }
  rules_.push_back({std::move(rule), 0});
  return *this;
}

ScriptedBackend& ScriptedBackend::set_default(std::optional<std::string> reply) {
  default_reply_ = std::move(reply);
  return *this;
}

ScriptedBackend& ScriptedBackend::set_embedding(const std::string& text, std::vector<double> v) {
  embeddings_[text] = std::move(v);
  return *this;
}

ScriptedBackend& ScriptedBackend::set_embedding_fallback(std::string mode) {
  if (mode != "error" && mode != "hash") throw ConfigError("embedding_fallback must be 'error' or 'hash'");
  embedding_fallback_ = std::move(mode);
  return *this;
}

ScriptedBackend& ScriptedBackend::set_record_transcript(bool v) {
  std::lock_guard lock(mu_);
  record_transcript_ = v;
  return *this;
}

ScriptedBackend& ScriptedBackend::set_embedding_unavailable(bool v) {
  embedding_unavailable_ = v;
  return *this;
}

std::string ScriptedBackend::chat(const ChatRequest& req) {
  const int call = calls_.fetch_add(1);
  const int now = in_flight_.fetch_add(1) + 1;
  for (int prev = peak_.load(); now > prev && !peak_.compare_exchange_weak(prev, now);) {
  }
  struct Leave {
    std::atomic<int>& n;
    ~Leave() { n.fetch_sub(1); }
  } leave{in_flight_};

  const std::string text = req.system_text + "\n" + req.user_text;
  std::string reply;
  int delay_ms = 0;
  bool fail = false;
  std::string failure;
  {
    std::lock_guard lock(mu_);
    if (record_transcript_) transcript_.push_back(req);
    RuleState* hit = nullptr;
    for (auto& st : rules_) {
      const auto& r = st.rule;
      bool ok = true;
      for (const auto& s : r.contains) ok = ok && text.find(s) != std::string::npos;
      for (const auto& s : r.not_contains) ok = ok && text.find(s) == std::string::npos;
      if (r.screenshot) ok = ok && !req.images.empty() && req.images.front().ref == *r.screenshot;
      if (r.hash) ok = ok && prompt_hash(req) == *r.hash;
      if (r.slot) ok = ok && req.sample_slot == r.slot;
      if (ok) {
        hit = &st;
        break;
      }
    }
    if (!hit) {
      if (!default_reply_) throw ProtocolError("mock: no rule matches the request");
      reply = *default_reply_;
    } else {
      const int n = hit->matches++;
      const auto& r = hit->rule;
      delay_ms = r.delay_ms;
      if (r.always_fail || n < r.fail_times) {
        fail = true;
        failure = r.failure;
      } else {
        const int k = n - r.fail_times;
        const auto idx = r.cycle ? static_cast<size_t>(k) % r.replies.size()
                                 : std::min(static_cast<size_t>(k), r.replies.size() - 1);
        reply = r.replies[idx];
        replace_all(reply, "{n}", std::to_string(k));
      }
    }
  }
  if (delay_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
  if (fail) {
    if (failure == "timeout") throw Timeout("mock: scripted timeout");
    if (failure == "protocol") throw ProtocolError("mock: scripted protocol error");
    throw RateLimited("mock: scripted rate limit");
  }
  replace_all(reply, "{slot}", std::to_string(req.sample_slot.value_or(0)));
  replace_all(reply, "{call}", std::to_string(call));
  return reply;
}

std::vector<std::vector<double>> ScriptedBackend::embed(const std::vector<std::string>& texts) {
  if (embedding_unavailable_) throw EmbedderUnavailable("mock: embedder unavailable");
  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    if (auto it = embeddings_.find(t); it != embeddings_.end()) {
      out.push_back(it->second);
    } else if (embedding_fallback_ == "hash") {
      out.push_back(hashed_bow_embedding(t));
    } else {
      throw EmbedderUnavailable("mock: no embedding scripted for '" + t + "'");
    }
  }
  return out;
}

std::vector<ChatRequest> ScriptedBackend::transcript() const {
  std::lock_guard lock(mu_);
  return transcript_;
}

std::vector<double> hashed_bow_embedding(const std::string& text) {
  std::vector<double> v(64, 0.0);
  for (const auto& tok : kernels::tokenize(text)) {
    const auto h = stable_hash(tok);
    v[h % 64] += (h >> 63) ? -1.0 : 1.0;
  }
  // Constant component keeps empty or stop-word-only texts non-degenerate.
  v[0] += 0.5;
  return v;
}

}  // namespace trajkit
