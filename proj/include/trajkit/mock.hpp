// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "trajkit/gateway.hpp"

namespace trajkit {

/// One row of a mock script. Every predicate that is set must hold for the
/// rule to match; the first matching rule answers.
struct MockRule {
  std::vector<std::string> contains;      // substrings of system + user text
  std::vector<std::string> not_contains;
  std::optional<std::string> screenshot;  // ImagePayload::ref of the attached image
  std::optional<std::string> hash;        // prompt_hash(req)
  std::optional<int> slot;                // ChatRequest::sample_slot

  /// Reply i is used for the i-th match (the last one repeats unless
  /// `cycle`). Templates: {slot}, {n} (match counter), {call} (global).
  std::vector<std::string> replies;
  bool cycle = false;

  int fail_times = 0;  // the first k matches fail
  bool always_fail = false;
  std::string failure = "rate_limited";  // rate_limited | timeout | protocol
  int delay_ms = 0;
};

/// Deterministic chat/embedding backend driven by a JSON script, with
/// instrumentation for tests (transcript, peak concurrency).
class ScriptedBackend : public ChatBackend, public EmbeddingPort {
 public:
  ScriptedBackend() = default;
  ScriptedBackend(const ScriptedBackend& other);

  static ScriptedBackend from_json(const nlohmann::json& script);
  static ScriptedBackend from_file(const std::filesystem::path& path);

  ScriptedBackend& add_rule(MockRule rule);
  ScriptedBackend& set_default(std::optional<std::string> reply);
  ScriptedBackend& set_embedding(const std::string& text, std::vector<double> v);
  /// "error" (default) or "hash": deterministic hashed bag-of-words vectors.
  ScriptedBackend& set_embedding_fallback(std::string mode);
  ScriptedBackend& set_embedding_unavailable(bool v);
  /// On by default; large runs can switch it off to save memory.
  ScriptedBackend& set_record_transcript(bool v);

  std::string chat(const ChatRequest& req) override;
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override;

  std::vector<ChatRequest> transcript() const;
  int calls() const { return calls_.load(); }
  int peak_concurrency() const { return peak_.load(); }

 private:
  struct RuleState {
    MockRule rule;
    int matches = 0;
  };

  std::vector<RuleState> rules_;
  std::optional<std::string> default_reply_;
  std::map<std::string, std::vector<double>> embeddings_;
  std::string embedding_fallback_ = "error";
  bool embedding_unavailable_ = false;
  bool record_transcript_ = true;

  mutable std::mutex mu_;
  std::vector<ChatRequest> transcript_;
  std::atomic<int> calls_{0};
  std::atomic<int> in_flight_{0};
  std::atomic<int> peak_{0};
};

/// Hashed bag-of-words embedding (64 dimensions) used by the "hash" fallback.
std::vector<double> hashed_bow_embedding(const std::string& text);

}  // namespace trajkit
