// Copyright 2026 The bimath Authors
// SPDX-License-Identifier: Apache-2.0

// Deterministic scripted backend.
//
// Fixture file layout:
//
//   {
//     "id": "fixture-name",
//     "latency_ms": 0,
//     "chat": [
//       {"contains": ["2+2"], "response": "4"},
//       {"contains": ["x"], "model": "m", "responses": ["a", "b"]},
//       {"request_hash": "<hex>", "response": "..."},
//       {"contains": ["down"], "error": "transport"},
//       {"contains": ["flaky"], "fail_first": 2, "response": "ok"},
//       {"contains": ["blank"], "error": "empty"},
//       {"contains": ["cost"], "response": "y",
//        "usage": {"input_tokens": 10, "output_tokens": 3}}
//     ],
//     "reward": [
//       {"question_contains": "q", "response_contains": "r", "score": 1.5}
//     ],
//     "default_response": "..."   // optional catch-all
//   }
//
// Chat rules are tried in order; a rule matches when every `contains`
// string occurs in the request's message texts (joined by newlines) and the
// optional `model` / `request_hash` agree. With `responses`, the pick is a
// function of the request hash, so it varies with the sampling seed but is
// stable for identical requests. Token usage defaults to whitespace-token
// counts of the prompt and the response.

#ifndef BIMATH_MOCK_BACKEND_H_
#define BIMATH_MOCK_BACKEND_H_

#include <atomic>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "bimath/llm_gateway.h"

namespace bimath {

// Whitespace-delimited token count.
std::uint64_t CountWhitespaceTokens(std::string_view text);

class MockBackend : public Backend {
 public:
  // Throws ValidationError on a malformed fixture.
  explicit MockBackend(const nlohmann::json& fixture);
  static std::shared_ptr<MockBackend> FromFile(
      const std::filesystem::path& path);

  std::string id() const override { return id_; }
  ChatResponse complete(const ChatRequest& request) override;
  double reward_score(const RewardScoreRequest& request) override;

  std::size_t chat_calls() const { return chat_calls_.load(); }
  std::size_t reward_calls() const { return reward_calls_.load(); }
  int max_in_flight() const { return max_in_flight_.load(); }

 private:
  struct ChatRule {
    std::vector<std::string> contains;
    std::optional<std::string> model;
    std::optional<std::string> request_hash;
    std::vector<std::string> responses;
    std::string error;  // "", "transport" or "empty"
    int fail_first = 0;
    std::optional<TokenUsage> usage;
    std::unique_ptr<std::atomic<int>> failures_so_far;
  };
  struct RewardRule {
    std::string question_contains;
    std::string response_contains;
    double score = 0.0;
  };

  class InFlight;

  std::string id_;
  int latency_ms_ = 0;
  std::vector<ChatRule> chat_rules_;
  std::vector<RewardRule> reward_rules_;
  std::optional<std::string> default_response_;
  std::atomic<std::size_t> chat_calls_{0};
  std::atomic<std::size_t> reward_calls_{0};
  std::atomic<int> in_flight_{0};
  std::atomic<int> max_in_flight_{0};
};

}  // namespace bimath

#endif  // BIMATH_MOCK_BACKEND_H_
