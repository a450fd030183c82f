// Copyright 2026 The bimath Authors
// SPDX-License-Identifier: Apache-2.0

// Provider-agnostic chat-completion and reward-scoring client.
//
// A Gateway wraps one Backend (a real HTTP endpoint or the scripted mock)
// and adds three things: a content-addressed response cache (optionally
// persisted on disk), bounded exponential-backoff retries on transport
// failures, and a cap on the number of requests in flight.

#ifndef BIMATH_LLM_GATEWAY_H_
#define BIMATH_LLM_GATEWAY_H_

#include <atomic>
#include <chrono>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "bimath/chat.h"
#include "bimath/core_model.h"

namespace bimath {

struct ChatRequest {
  std::string model_id;
  std::vector<ChatMessage> messages;
  SamplingConfig sampling;
  // Image files attached to the last user turn (OCR requests).
  std::vector<std::string> images;

  // Throws std::invalid_argument if there are no messages.
  void Validate() const;
};

struct ChatResponse {
  std::string text;
  TokenUsage usage;
  nlohmann::json provider_meta = nlohmann::json::object();
};

struct RewardScoreRequest {
  std::string question;
  std::string response;
};

// Hex digest identifying a request: model, messages, sampling and images.
std::string RequestHash(const ChatRequest& request);

class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string id() const = 0;
  virtual ChatResponse complete(const ChatRequest& request) = 0;
  virtual double reward_score(const RewardScoreRequest& request) = 0;
};

struct GatewayOptions {
  int concurrency = 4;
  int max_retries = 3;
  std::chrono::milliseconds backoff_base{200};
  // Responses are persisted here when set; otherwise cached in memory only.
  std::optional<std::filesystem::path> cache_dir;
  bool cache_enabled = true;
};

class Gateway {
 public:
  Gateway(std::shared_ptr<Backend> backend, GatewayOptions options = {});

  // Throws TransportError (with the attempt count) once retries are
  // exhausted, ProviderError on an empty completion, and passes other
  // BackendErrors through unretried.
  ChatResponse complete(const ChatRequest& request);
  double reward_score(const RewardScoreRequest& request);

  const Backend& backend() const { return *backend_; }
  std::string backend_id() const { return backend_->id(); }
  int concurrency() const { return options_.concurrency; }

  std::size_t cache_hits() const { return cache_hits_.load(); }
  std::size_t backend_calls() const { return backend_calls_.load(); }

 private:
  template <typename Fn>
  auto WithRetries(Fn&& fn) -> decltype(fn());

  std::optional<nlohmann::json> CacheLookup(const std::string& key);
  void CacheStore(const std::string& key, const nlohmann::json& value);

  std::shared_ptr<Backend> backend_;
  GatewayOptions options_;
  std::counting_semaphore<1 << 16> window_;
  std::mutex cache_mu_;
  std::unordered_map<std::string, nlohmann::json> memory_cache_;
  std::atomic<std::size_t> cache_hits_{0};
  std::atomic<std::size_t> backend_calls_{0};
};

// Backend selection, as read from the command line or a config file.
struct BackendConfig {
  std::string kind = "mock";  // "mock" or "openai"
  std::filesystem::path fixture;
  std::string endpoint;  // e.g. http://localhost:8000/v1
  std::string model = "default";
  std::string auth_env;  // name of the env var holding the bearer token
  std::string reward_endpoint;
  std::string reward_model;
  int timeout_seconds = 120;
  GatewayOptions gateway;

  // "mock:PATH" or "openai:URL".
  static BackendConfig FromSpec(const std::string& spec);
};

std::shared_ptr<Backend> MakeBackend(const BackendConfig& config);

}  // namespace bimath

#endif  // BIMATH_LLM_GATEWAY_H_
