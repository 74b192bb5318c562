// SPDX-License-Identifier: Apache-2.0
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include <cstdlib>

#include "trajkit/errors.hpp"
#include "trajkit/gateway.hpp"

namespace trajkit {

using nlohmann::json;

namespace {

// Splits "https://host:port/v1" into ("https://host:port", "/v1").
std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
  const auto scheme_end = endpoint.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint needs a scheme: '" + endpoint + "'");
  const auto path_start = endpoint.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {endpoint, ""};
  auto path = endpoint.substr(path_start);
  while (!path.empty() && path.back() == '/') path.pop_back();
  return {endpoint.substr(0, path_start), path};
}

}  // namespace

OpenAiCompatibleBackend::OpenAiCompatibleBackend(GatewayConfig config) : config_(std::move(config)) {
  std::tie(scheme_host_port_, base_path_) = split_endpoint(config_.endpoint);
}

json OpenAiCompatibleBackend::chat_body(const ChatRequest& req) const {
  json user_content = json::array();
  user_content.push_back({{"type", "text"}, {"text", req.user_text}});
  for (const auto& img : req.images) {
    user_content.push_back({{"type", "image_url"}, {"image_url", {{"url", img.data_uri()}}}});
  }
  json messages = json::array();
  if (!req.system_text.empty()) messages.push_back({{"role", "system"}, {"content", req.system_text}});
  messages.push_back({{"role", "user"}, {"content", user_content}});
  json body = {{"model", config_.model},
               {"messages", messages},
               {"temperature", req.temperature},
               {"max_tokens", req.max_tokens}};
  if (req.seed) body["seed"] = *req.seed;
  return body;
}

json OpenAiCompatibleBackend::post(const std::string& path, const json& body) const {
  httplib::Client client(scheme_host_port_);
  const auto secs = static_cast<time_t>(config_.timeout_s);
  const auto usecs = static_cast<time_t>((config_.timeout_s - static_cast<double>(secs)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);

  httplib::Headers headers;
  if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  auto res = client.Post(base_path_ + path, headers, body.dump(), "application/json");
  if (!res) {
    const auto err = res.error();
    throw Timeout("request to " + scheme_host_port_ + base_path_ + path + " failed: " + httplib::to_string(err));
  }
  const int status = res->status;
  if (status == 408 || status == 504) throw Timeout("HTTP " + std::to_string(status));
  if (status == 429 || status >= 500) throw RateLimited("HTTP " + std::to_string(status) + ": " + res->body);
  if (status < 200 || status >= 300) throw ProtocolError("HTTP " + std::to_string(status) + ": " + res->body);
  try {
    return json::parse(res->body);
  } catch (const json::parse_error& e) {
    throw ProtocolError(std::string("response is not JSON: ") + e.what());
  }
}

std::string OpenAiCompatibleBackend::chat(const ChatRequest& req) {
  const auto reply = post("/chat/completions", chat_body(req));
  try {
    const auto& content = reply.at("choices").at(0).at("message").at("content");
    if (content.is_string()) return content.get<std::string>();
    // Some servers return content parts.
    std::string text;
    for (const auto& part : content) {
      if (part.value("type", "") == "text") text += part.at("text").get<std::string>();
    }
    return text;
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("unexpected chat response shape: ") + e.what());
  }
}

std::vector<std::vector<double>> OpenAiCompatibleBackend::embed(const std::vector<std::string>& texts) {
  if (texts.empty()) return {};
  json reply;
  try {
    reply = post("/embeddings", {{"model", config_.embedding_model}, {"input", texts}});
  } catch (const ProtocolError& e) {
    throw EmbedderUnavailable(e.what());
  }
  try {
    std::vector<std::vector<double>> out(texts.size());
    for (const auto& item : reply.at("data")) {
      const auto idx = item.value("index", 0);
      if (idx < 0 || static_cast<size_t>(idx) >= out.size()) throw ProtocolError("embedding index out of range");
      out[static_cast<size_t>(idx)] = item.at("embedding").get<std::vector<double>>();
    }
    return out;
  } catch (const json::exception& e) {
    throw EmbedderUnavailable(std::string("unexpected embeddings response shape: ") + e.what());
  }
}

}  // namespace trajkit
