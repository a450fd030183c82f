// Copyright 2026 The bimath Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef BIMATH_HTTP_BACKEND_H_
#define BIMATH_HTTP_BACKEND_H_

#include <string>

#include "bimath/llm_gateway.h"

namespace bimath {

struct HttpBackendOptions {
  // Base URL of an OpenAI-compatible API, e.g. "http://127.0.0.1:8000/v1".
  // Chat requests go to `<endpoint>/chat/completions`.
  std::string endpoint;
  std::string bearer_token;
  // Full URL answering POST {"model", "messages"} with {"score": x}.
  std::string reward_endpoint;
  std::string reward_model;
  int timeout_seconds = 120;
};

// Chat-completion client for OpenAI-compatible servers (vLLM, TGI, hosted
// APIs). Connection failures, 429 and 5xx are TransportErrors; other
// non-2xx statuses and malformed bodies are ProviderErrors.
class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpBackendOptions options);

  std::string id() const override;
  ChatResponse complete(const ChatRequest& request) override;
  double reward_score(const RewardScoreRequest& request) override;

 private:
  HttpBackendOptions options_;
};

}  // namespace bimath

#endif  // BIMATH_HTTP_BACKEND_H_
