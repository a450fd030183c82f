// Copyright 2026 The bimath Authors
// SPDX-License-Identifier: Apache-2.0

#include "bimath/mock_backend.h"

#include <cctype>
#include <chrono>
#include <fstream>
#include <thread>

#include "bimath/errors.h"
#include "bimath/hashing.h"

namespace bimath {
namespace {

using json = nlohmann::json;

std::string JoinedText(const ChatRequest& request) {
  std::string text;
  for (const auto& m : request.messages) {
    if (!text.empty()) text += '\n';
    text += m.text;
  }
  for (const auto& image : request.images) {
    text += '\n';
    text += image;
  }
  return text;
}

std::uint64_t HashPrefix(const std::string& hex) {
  return std::stoull(hex.substr(0, 15), nullptr, 16);
}

}  // namespace

std::uint64_t CountWhitespaceTokens(std::string_view text) {
  std::uint64_t count = 0;
  bool in_token = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      in_token = false;
    } else if (!in_token) {
      in_token = true;
      ++count;
    }
  }
  return count;
}

class MockBackend::InFlight {
 public:
  explicit InFlight(MockBackend& m) : m_(m) {
    const int now = ++m_.in_flight_;
    int seen = m_.max_in_flight_.load();
    while (now > seen && !m_.max_in_flight_.compare_exchange_weak(seen, now)) {
    }
  }
  ~InFlight() { --m_.in_flight_; }

 private:
  MockBackend& m_;
};

MockBackend::MockBackend(const json& fixture) {
  try {
    id_ = "mock:" + fixture.value("id", std::string("fixture"));
    latency_ms_ = fixture.value("latency_ms", 0);
    if (auto it = fixture.find("default_response");
        it != fixture.end() && !it->is_null()) {
      default_response_ = it->get<std::string>();
    }
    for (const auto& r : fixture.value("chat", json::array())) {
      ChatRule rule;
      rule.contains = r.value("contains", std::vector<std::string>{});
      if (r.contains("model")) rule.model = r.at("model").get<std::string>();
      if (r.contains("request_hash")) {
        rule.request_hash = r.at("request_hash").get<std::string>();
      }
      if (r.contains("response")) {
        rule.responses.push_back(r.at("response").get<std::string>());
      }
      for (const auto& v : r.value("responses", json::array())) {
        rule.responses.push_back(v.get<std::string>());
      }
      rule.error = r.value("error", std::string());
      if (rule.error != "" && rule.error != "transport" &&
          rule.error != "empty") {
        throw ValidationError("unknown mock error kind '" + rule.error + "'");
      }
      rule.fail_first = r.value("fail_first", 0);
      if (r.contains("usage")) rule.usage = r.at("usage").get<TokenUsage>();
      if (rule.error.empty() && rule.responses.empty()) {
        throw ValidationError("mock chat rule without response");
      }
      rule.failures_so_far = std::make_unique<std::atomic<int>>(0);
      chat_rules_.push_back(std::move(rule));
    }
    for (const auto& r : fixture.value("reward", json::array())) {
      reward_rules_.push_back({r.value("question_contains", std::string()),
                               r.value("response_contains", std::string()),
                               r.at("score").get<double>()});
    }
  } catch (const json::exception& e) {
    throw ValidationError("mock fixture: " + std::string(e.what()));
  }
}

std::shared_ptr<MockBackend> MockBackend::FromFile(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open mock fixture " + path.string());
  json fixture;
  try {
    fixture = json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError("mock fixture " + path.string() + ": " + e.what());
  }
  auto backend = std::make_shared<MockBackend>(fixture);
  return backend;
}

ChatResponse MockBackend::complete(const ChatRequest& request) {
  InFlight guard(*this);
  ++chat_calls_;
  if (latency_ms_ > 0) {
    std::this_thread::sleep_for(std::chrono::milliseconds(latency_ms_));
  }
  const std::string text = JoinedText(request);
  const std::string hash = RequestHash(request);

  const ChatRule* matched = nullptr;
  for (const auto& rule : chat_rules_) {
    if (rule.model && *rule.model != request.model_id) continue;
    if (rule.request_hash && *rule.request_hash != hash) continue;
    bool all = true;
    for (const auto& needle : rule.contains) {
      if (text.find(needle) == std::string::npos) {
        all = false;
        break;
      }
    }
    if (all) {
      matched = &rule;
      break;
    }
  }

  std::string response;
  std::optional<TokenUsage> usage;
  if (matched) {
    if (matched->error == "transport") {
      throw TransportError("mock: scripted transport failure");
    }
    if (matched->fail_first > 0 &&
        matched->failures_so_far->fetch_add(1) < matched->fail_first) {
      throw TransportError("mock: scripted transient failure");
    }
    if (matched->error != "empty") {
      response =
          matched->responses[HashPrefix(hash) % matched->responses.size()];
    }
    usage = matched->usage;
  } else if (default_response_) {
    response = *default_response_;
  } else {
    throw UnscriptedFixtureError("unscripted fixture: no mock rule matches "
                                 "request " + hash.substr(0, 12));
  }

  ChatResponse out;
  out.text = std::move(response);
  if (usage) {
    out.usage = *usage;
  } else {
    for (const auto& m : request.messages) {
      out.usage.input_tokens += CountWhitespaceTokens(m.text);
    }
    out.usage.output_tokens = CountWhitespaceTokens(out.text);
  }
  out.provider_meta = json{{"backend", id_}};
  return out;
}

double MockBackend::reward_score(const RewardScoreRequest& request) {
  InFlight guard(*this);
  ++reward_calls_;
  for (const auto& rule : reward_rules_) {
    if (request.question.find(rule.question_contains) != std::string::npos &&
        request.response.find(rule.response_contains) != std::string::npos) {
      return rule.score;
    }
  }
  throw UnscriptedFixtureError("unscripted fixture: no reward rule matches");
}

}  // namespace bimath
