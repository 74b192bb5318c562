// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "trajkit/image.hpp"

namespace trajkit {

struct ChatRequest {
  std::string system_text;
  std::string user_text;
  std::vector<ImagePayload> images;  // at most one
  double temperature = 0.0;
  int max_tokens = 1024;
  std::optional<std::int64_t> seed;
  /// Logical sample index assigned by Gateway::sample_n. Local only.
  std::optional<int> sample_slot;
};

/// Throws PreconditionError for an empty user text, more than one image,
/// negative temperature or non-positive max_tokens.
void validate_request(const ChatRequest& req);

/// SHA-256 over system and user text; the key scripted mocks match on.
std::string prompt_hash(const ChatRequest& req);

/// One chat-completion attempt. Implementations throw RateLimited or
/// Timeout for retryable failures and ProtocolError otherwise.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual std::string chat(const ChatRequest& req) = 0;
};

/// One fixed-dimension vector per input text, in input order. Throws
/// EmbedderUnavailable when the service cannot answer.
class EmbeddingPort {
 public:
  virtual ~EmbeddingPort() = default;
  virtual std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) = 0;
};

struct RetryPolicy {
  int max_attempts = 3;
  /// Delay before retry k (1-based) is backoff[min(k, size) - 1].
  std::vector<std::chrono::milliseconds> backoff{std::chrono::milliseconds(500),
                                                  std::chrono::milliseconds(1000),
                                                  std::chrono::milliseconds(2000)};
};

struct GatewayConfig {
  std::string endpoint = "https://api.openai.com/v1";
  std::string model;
  std::string embedding_model = "text-embedding-3-small";
  std::string api_key_env = "OPENAI_API_KEY";
  int concurrency_limit = 4;
  RetryPolicy retry;
  double timeout_s = 120.0;
  std::optional<std::filesystem::path> audit_log;
  /// When set, requests are answered by a scripted mock instead of HTTP.
  std::optional<std::filesystem::path> mock_script;
};

/// Reads the "gateway" section of a config file. Unknown keys are ignored;
/// invalid values throw ConfigError.
GatewayConfig gateway_config_from_json(const nlohmann::json& j);
nlohmann::json gateway_config_to_json(const GatewayConfig& c);

/// Counting limiter on simultaneous in-flight requests.
class ConcurrencyLimiter {
 public:
  explicit ConcurrencyLimiter(int limit);

  class Permit {
   public:
    explicit Permit(ConcurrencyLimiter* owner) : owner_(owner) {}
    Permit(Permit&& other) noexcept : owner_(std::exchange(other.owner_, nullptr)) {}
    Permit(const Permit&) = delete;
    Permit& operator=(const Permit&) = delete;
    Permit& operator=(Permit&&) = delete;
    ~Permit() {
      if (owner_) owner_->release();
    }

   private:
    ConcurrencyLimiter* owner_;
  };

  Permit acquire();
  int limit() const { return limit_; }
  int peak() const;

 private:
  void release();

  const int limit_;
  int in_flight_ = 0;
  int peak_ = 0;
  mutable std::mutex mu_;
  std::condition_variable cv_;
};

/// Append-only JSON Lines log of every request/response attempt.
class AuditLog {
 public:
  explicit AuditLog(const std::filesystem::path& path);
  void record(const nlohmann::json& entry);

 private:
  std::mutex mu_;
  std::ofstream out_;
};

struct Completion {
  std::string text;
  int attempts = 0;
};

struct SlotResult {
  std::optional<std::string> text;
  std::string error;  // set when text is empty
  int attempts = 0;
  bool ok() const { return text.has_value(); }
};

/// Shared entry point to the chat and embedding services. Thread-safe.
class Gateway : public EmbeddingPort {
 public:
  Gateway(GatewayConfig config, std::shared_ptr<ChatBackend> chat,
          std::shared_ptr<EmbeddingPort> embedder = nullptr);

  /// One completion with retries. After max_attempts transient failures the
  /// last RateLimited/Timeout is rethrown; ProtocolError is not retried.
  Completion complete_detailed(const ChatRequest& req);
  std::string complete(const ChatRequest& req) { return complete_detailed(req).text; }

  /// n independent completions run concurrently (bounded by the limiter).
  /// Slot i holds the i-th logical sample. Per-slot failures are reported in
  /// place; BatchAborted is thrown only when every slot fails.
  std::vector<SlotResult> sample_n(const ChatRequest& req, int n);

  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override;

  const GatewayConfig& config() const { return config_; }
  int peak_in_flight() const { return limiter_.peak(); }

 private:
  void audit(const ChatRequest& req, int attempt, const std::string* reply, const std::string* error);

  GatewayConfig config_;
  std::shared_ptr<ChatBackend> chat_;
  std::shared_ptr<EmbeddingPort> embedder_;
  ConcurrencyLimiter limiter_;
  std::unique_ptr<AuditLog> audit_;
};

/// HTTP client for the widely used chat-completions / embeddings JSON
/// schema. Images travel as base64 data URIs.
class OpenAiCompatibleBackend : public ChatBackend, public EmbeddingPort {
 public:
  explicit OpenAiCompatibleBackend(GatewayConfig config);
  std::string chat(const ChatRequest& req) override;
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override;

  /// Request body sent for `req` (exposed for tests and the audit log).
  nlohmann::json chat_body(const ChatRequest& req) const;

 private:
  nlohmann::json post(const std::string& path, const nlohmann::json& body) const;

  GatewayConfig config_;
  std::string scheme_host_port_;
  std::string base_path_;
};

/// Builds a gateway whose backend is the scripted mock when
/// `config.mock_script` is set, otherwise the HTTP backend.
std::shared_ptr<Gateway> make_gateway(const GatewayConfig& config);

}  // namespace trajkit
