// Copyright 2026 The bimath Authors
// SPDX-License-Identifier: Apache-2.0

#include "bimath/llm_gateway.h"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "bimath/errors.h"
#include "bimath/hashing.h"
#include "bimath/http_backend.h"
#include "bimath/mock_backend.h"

namespace bimath {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

json CanonicalRequest(const ChatRequest& r) {
  json messages = json::array();
  for (const auto& m : r.messages) {
    messages.push_back(json::array({RoleName(m.role), m.text}));
  }
  return json{{"model", r.model_id},
              {"messages", messages},
              {"sampling", r.sampling},
              {"images", r.images}};
}

class SemaphoreSlot {
 public:
  explicit SemaphoreSlot(std::counting_semaphore<1 << 16>& s) : s_(s) {
    s_.acquire();
  }
  ~SemaphoreSlot() { s_.release(); }

 private:
  std::counting_semaphore<1 << 16>& s_;
};

}  // namespace

void ChatRequest::Validate() const {
  if (messages.empty()) {
    throw std::invalid_argument("chat request needs at least one message");
  }
}

std::string RequestHash(const ChatRequest& request) {
  return Sha256Hex(CanonicalRequest(request).dump());
}

Gateway::Gateway(std::shared_ptr<Backend> backend, GatewayOptions options)
    : backend_(std::move(backend)),
      options_(std::move(options)),
      window_(std::max(1, options_.concurrency)) {
  if (!backend_) throw std::invalid_argument("gateway needs a backend");
  if (options_.concurrency < 1) options_.concurrency = 1;
  if (options_.cache_dir) fs::create_directories(*options_.cache_dir);
}

template <typename Fn>
auto Gateway::WithRetries(Fn&& fn) -> decltype(fn()) {
  for (int attempt = 1;; ++attempt) {
    try {
      SemaphoreSlot slot(window_);
      ++backend_calls_;
      return fn();
    } catch (const TransportError& e) {
      if (attempt > options_.max_retries) {
        throw TransportError(
            std::string(e.what()) + " (gave up after " +
                std::to_string(attempt) + " attempts)",
            attempt);
      }
      std::this_thread::sleep_for(options_.backoff_base * (1 << (attempt - 1)));
    }
  }
}

std::optional<json> Gateway::CacheLookup(const std::string& key) {
  if (!options_.cache_enabled) return std::nullopt;
  {
    std::lock_guard lock(cache_mu_);
    if (auto it = memory_cache_.find(key); it != memory_cache_.end()) {
      return it->second;
    }
  }
  if (!options_.cache_dir) return std::nullopt;
  const fs::path path = *options_.cache_dir / key.substr(0, 2) / (key + ".json");
  std::ifstream in(path);
  if (!in) return std::nullopt;
  try {
    json value = json::parse(in);
    std::lock_guard lock(cache_mu_);
    memory_cache_.emplace(key, value);
    return value;
  } catch (const json::exception&) {
    return std::nullopt;  // torn or foreign file: treat as a miss
  }
}

void Gateway::CacheStore(const std::string& key, const json& value) {
  if (!options_.cache_enabled) return;
  {
    std::lock_guard lock(cache_mu_);
    memory_cache_.emplace(key, value);
  }
  if (!options_.cache_dir) return;
  const fs::path dir = *options_.cache_dir / key.substr(0, 2);
  fs::create_directories(dir);
  std::ostringstream tmp_name;
  tmp_name << key << ".tmp." << std::this_thread::get_id();
  const fs::path tmp = dir / tmp_name.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << value.dump();
    if (!out) return;
  }
  fs::rename(tmp, dir / (key + ".json"));
}

ChatResponse Gateway::complete(const ChatRequest& request) {
  request.Validate();
  const std::string key = "chat-" + RequestHash(request);
  if (auto hit = CacheLookup(key)) {
    ++cache_hits_;
    ChatResponse cached;
    cached.text = hit->at("text").get<std::string>();
    cached.usage = hit->at("usage").get<TokenUsage>();
    cached.provider_meta = hit->value("meta", json::object());
    return cached;
  }
  ChatResponse response = WithRetries([&] { return backend_->complete(request); });
  if (response.text.empty()) {
    throw ProviderError("backend " + backend_->id() +
                        " returned an empty completion");
  }
  CacheStore(key, json{{"text", response.text},
                       {"usage", response.usage},
                       {"meta", response.provider_meta}});
  return response;
}

double Gateway::reward_score(const RewardScoreRequest& request) {
  if (request.question.empty() || request.response.empty()) {
    throw std::invalid_argument("reward request needs question and response");
  }
  const std::string key =
      "reward-" + Sha256Hex(json{{"backend", backend_->id()},
                                 {"question", request.question},
                                 {"response", request.response}}
                                .dump());
  if (auto hit = CacheLookup(key)) {
    ++cache_hits_;
    return hit->at("score").get<double>();
  }
  const double score =
      WithRetries([&] { return backend_->reward_score(request); });
  CacheStore(key, json{{"score", score}});
  return score;
}

BackendConfig BackendConfig::FromSpec(const std::string& spec) {
  BackendConfig config;
  const auto colon = spec.find(':');
  if (colon == std::string::npos) {
    throw std::invalid_argument("backend spec must be mock:PATH or "
                                "openai:URL, got '" + spec + "'");
  }
  config.kind = spec.substr(0, colon);
  const std::string rest = spec.substr(colon + 1);
  if (config.kind == "mock") {
    config.fixture = rest;
  } else if (config.kind == "openai") {
    config.endpoint = rest;
  } else {
    throw std::invalid_argument("unknown backend kind '" + config.kind + "'");
  }
  return config;
}

std::shared_ptr<Backend> MakeBackend(const BackendConfig& config) {
  if (config.kind == "mock") return MockBackend::FromFile(config.fixture);
  if (config.kind == "openai") {
    HttpBackendOptions options;
    options.endpoint = config.endpoint;
    options.reward_endpoint = config.reward_endpoint;
    options.reward_model = config.reward_model;
    options.timeout_seconds = config.timeout_seconds;
    if (!config.auth_env.empty()) {
      if (const char* token = std::getenv(config.auth_env.c_str())) {
        options.bearer_token = token;
      }
    }
    return std::make_shared<HttpBackend>(options);
  }
  throw std::invalid_argument("unknown backend kind '" + config.kind + "'");
}

}  // namespace bimath
