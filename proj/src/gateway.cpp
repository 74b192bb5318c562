// SPDX-License-Identifier: Apache-2.0
#include "trajkit/gateway.hpp"

#include <thread>

#include "trajkit/errors.hpp"
#include "trajkit/hash.hpp"
#include "trajkit/mock.hpp"

namespace trajkit {

using nlohmann::json;

void validate_request(const ChatRequest& req) {
  if (req.user_text.empty()) throw PreconditionError("chat request has empty user text");
  if (req.images.size() > 1) throw PreconditionError("chat request carries more than one image");
  if (req.temperature < 0.0) throw PreconditionError("temperature must be >= 0");
  if (req.max_tokens <= 0) throw PreconditionError("max_tokens must be positive");
}

std::string prompt_hash(const ChatRequest& req) { return sha256_hex(req.system_text + "\n\n" + req.user_text); }

GatewayConfig gateway_config_from_json(const json& j) {
  GatewayConfig c;
  if (j.is_null()) return c;
  if (!j.is_object()) throw ConfigError("gateway config must be an object");
  try {
    c.endpoint = j.value("endpoint", c.endpoint);
    c.model = j.value("model", c.model);
    c.embedding_model = j.value("embedding_model", c.embedding_model);
    c.api_key_env = j.value("api_key_env", c.api_key_env);
    c.concurrency_limit = j.value("concurrency_limit", c.concurrency_limit);
    c.timeout_s = j.value("timeout_s", c.timeout_s);
    if (j.contains("retry")) {
      const auto& r = j["retry"];
      c.retry.max_attempts = r.value("max_attempts", c.retry.max_attempts);
      if (r.contains("backoff_ms")) {
        c.retry.backoff.clear();
        for (const auto& ms : r["backoff_ms"]) c.retry.backoff.emplace_back(ms.get<long>());
      }
    }
    if (j.contains("audit_log")) c.audit_log = j["audit_log"].get<std::string>();
    if (j.contains("mock_script")) c.mock_script = j["mock_script"].get<std::string>();
    if (j.contains("api_key")) throw ConfigError("API keys must come from the environment (set api_key_env)");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("gateway config: ") + e.what());
  }
  if (c.concurrency_limit < 1) throw ConfigError("concurrency_limit must be >= 1");
  if (c.retry.max_attempts < 1) throw ConfigError("retry.max_attempts must be >= 1");
  if (c.timeout_s <= 0) throw ConfigError("timeout_s must be positive");
  return c;
}

json gateway_config_to_json(const GatewayConfig& c) {
  json backoff = json::array();
  for (auto d : c.retry.backoff) backoff.push_back(d.count());
  json j = {{"endpoint", c.endpoint},
            {"model", c.model},
            {"embedding_model", c.embedding_model},
            {"api_key_env", c.api_key_env},
            {"concurrency_limit", c.concurrency_limit},
            {"timeout_s", c.timeout_s},
            {"retry", {{"max_attempts", c.retry.max_attempts}, {"backoff_ms", backoff}}}};
  if (c.audit_log) j["audit_log"] = c.audit_log->string();
  if (c.mock_script) j["mock_script"] = c.mock_script->string();
  return j;
}

ConcurrencyLimiter::ConcurrencyLimiter(int limit) : limit_(limit) {
  if (limit < 1) throw ConfigError("concurrency limit must be >= 1");
}

ConcurrencyLimiter::Permit ConcurrencyLimiter::acquire() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return in_flight_ < limit_; });
  ++in_flight_;
  peak_ = std::max(peak_, in_flight_);
  return Permit(this);
}

int ConcurrencyLimiter::peak() const {
  std::lock_guard lock(mu_);
  return peak_;
}

void ConcurrencyLimiter::release() {
  {
    std::lock_guard lock(mu_);
    --in_flight_;
  }
  cv_.notify_one();
}

AuditLog::AuditLog(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_.open(path, std::ios::app);
  if (!out_) throw IoError("cannot open audit log '" + path.string() + "'");
}

void AuditLog::record(const json& entry) {
  std::lock_guard lock(mu_);
  out_ << entry.dump() << '\n';
  out_.flush();
}

Gateway::Gateway(GatewayConfig config, std::shared_ptr<ChatBackend> chat, std::shared_ptr<EmbeddingPort> embedder)
    : config_(std::move(config)),
      chat_(std::move(chat)),
      embedder_(std::move(embedder)),
      limiter_(config_.concurrency_limit) {
  if (config_.retry.max_attempts < 1) throw ConfigError("retry.max_attempts must be >= 1");
  if (config_.audit_log) audit_ = std::make_unique<AuditLog>(*config_.audit_log);
}

void Gateway::audit(const ChatRequest& req, int attempt, const std::string* reply, const std::string* error) {
  if (!audit_) return;
  json images = json::array();
  for (const auto& img : req.images) {
    images.push_back({{"sha256", sha256_hex(img.bytes)}, {"ref", img.ref}, {"width", img.width}, {"height", img.height}});
  }
  json entry = {{"model", config_.model},
                {"attempt", attempt},
                {"system", req.system_text},
                {"user", req.user_text},
                {"images", images},
                {"temperature", req.temperature},
                {"max_tokens", req.max_tokens}};
  if (req.seed) entry["seed"] = *req.seed;
  if (req.sample_slot) entry["slot"] = *req.sample_slot;
  if (reply) entry["response"] = *reply;
  if (error) entry["error"] = *error;
  audit_->record(entry);
}

Completion Gateway::complete_detailed(const ChatRequest& req) {
  validate_request(req);
  const auto& policy = config_.retry;
  for (int attempt = 1;; ++attempt) {
    try {
      std::string reply;
      {
        auto permit = limiter_.acquire();
        reply = chat_->chat(req);
      }
      audit(req, attempt, &reply, nullptr);
      return Completion{std::move(reply), attempt};
    } catch (const TransientError& e) {
      const std::string msg = e.kind() + ": " + e.what();
      audit(req, attempt, nullptr, &msg);
      if (attempt >= policy.max_attempts) throw;
      if (!policy.backoff.empty()) {
        const auto idx = std::min<size_t>(static_cast<size_t>(attempt), policy.backoff.size()) - 1;
        std::this_thread::sleep_for(policy.backoff[idx]);
      }
    } catch (const Error& e) {
      const std::string msg = e.kind() + ": " + e.what();
      audit(req, attempt, nullptr, &msg);
      throw;
    }
  }
}

std::vector<SlotResult> Gateway::sample_n(const ChatRequest& req, int n) {
  if (n < 1) throw PreconditionError("sample_n needs n >= 1");
  validate_request(req);
  std::vector<SlotResult> results(static_cast<size_t>(n));
  auto run_slot = [&](int slot) {
    ChatRequest r = req;
    r.sample_slot = slot;
    if (req.seed) r.seed = *req.seed + slot;
    auto& out = results[static_cast<size_t>(slot)];
    try {
      auto c = complete_detailed(r);
      out.text = std::move(c.text);
      out.attempts = c.attempts;
    } catch (const Error& e) {
      out.error = e.kind() + ": " + e.what();
    } catch (const std::exception& e) {
      out.error = e.what();
    }
  };
  if (n == 1) {
    run_slot(0);
  } else {
    std::vector<std::jthread> workers;
    workers.reserve(static_cast<size_t>(n));
    for (int slot = 0; slot < n; ++slot) workers.emplace_back(run_slot, slot);
  }
  if (std::none_of(results.begin(), results.end(), [](const SlotResult& r) { return r.ok(); })) {
    throw BatchAborted("all " + std::to_string(n) + " samples failed; first error: " + results.front().error);
  }
  return results;
}

std::vector<std::vector<double>> Gateway::embed(const std::vector<std::string>& texts) {
  if (texts.empty()) return {};
  if (!embedder_) throw EmbedderUnavailable("no embedding backend configured");
  for (int attempt = 1;; ++attempt) {
    try {
      auto permit = limiter_.acquire();
      auto vectors = embedder_->embed(texts);
      if (vectors.size() != texts.size()) {
        throw EmbedderUnavailable("embedder returned " + std::to_string(vectors.size()) + " vectors for " +
                                  std::to_string(texts.size()) + " texts");
      }
      for (const auto& v : vectors) {
        if (v.size() != vectors.front().size()) throw EmbedderUnavailable("embedding dimensions differ");
      }
      return vectors;
    } catch (const TransientError& e) {
      if (attempt >= config_.retry.max_attempts) throw EmbedderUnavailable(e.what());
    } catch (const ProtocolError& e) {
      throw EmbedderUnavailable(e.what());
    }
  }
}

std::shared_ptr<Gateway> make_gateway(const GatewayConfig& config) {
  if (config.mock_script) {
    auto mock = std::make_shared<ScriptedBackend>(ScriptedBackend::from_file(*config.mock_script));
    return std::make_shared<Gateway>(config, mock, mock);
  }
  auto http = std::make_shared<OpenAiCompatibleBackend>(config);
  return std::make_shared<Gateway>(config, http, http);
}

}  // namespace trajkit
