// Copyright 2026 The bimath Authors
// SPDX-License-Identifier: Apache-2.0

#include "bimath/http_backend.h"

#include <fstream>
#include <sstream>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "bimath/errors.h"
#include "bimath/prompt_library.h"

namespace bimath {
namespace {

using json = nlohmann::json;

struct Url {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Url SplitUrl(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw std::invalid_argument("URL needs a scheme: '" + url + "'");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, ""};
  return {url.substr(0, path_start), url.substr(path_start)};
}

std::string Base64(std::string_view data) {
  static constexpr char kTable[] =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((data.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < data.size(); i += 3) {
    const unsigned v = (static_cast<unsigned char>(data[i]) << 16) |
                       (static_cast<unsigned char>(data[i + 1]) << 8) |
                       static_cast<unsigned char>(data[i + 2]);
    out += kTable[(v >> 18) & 63];
    out += kTable[(v >> 12) & 63];
    out += kTable[(v >> 6) & 63];
    out += kTable[v & 63];
  }
  if (i < data.size()) {
    unsigned v = static_cast<unsigned char>(data[i]) << 16;
    if (i + 1 < data.size()) v |= static_cast<unsigned char>(data[i + 1]) << 8;
    out += kTable[(v >> 18) & 63];
    out += kTable[(v >> 12) & 63];
    out += i + 1 < data.size() ? kTable[(v >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

std::string ImageDataUrl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot read image " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string mime = "image/png";
  if (path.ends_with(".jpg") || path.ends_with(".jpeg")) mime = "image/jpeg";
  return "data:" + mime + ";base64," + Base64(ss.str());
}

json PostJson(const std::string& url, const json& body,
              const HttpBackendOptions& options) {
  const Url parts = SplitUrl(url);
  httplib::Client client(parts.origin);
  client.set_connection_timeout(options.timeout_seconds, 0);
  client.set_read_timeout(options.timeout_seconds, 0);
  client.set_write_timeout(options.timeout_seconds, 0);
  httplib::Headers headers;
  if (!options.bearer_token.empty()) {
    headers.emplace("Authorization", "Bearer " + options.bearer_token);
  }
  auto res = client.Post(parts.path, headers, body.dump(), "application/json");
  if (!res) {
    throw TransportError("POST " + url + " failed: " +
                         httplib::to_string(res.error()));
  }
  if (res->status == 429 || res->status >= 500) {
    throw TransportError("POST " + url + " returned HTTP " +
                         std::to_string(res->status));
  }
  if (res->status < 200 || res->status >= 300) {
    throw ProviderError("POST " + url + " returned HTTP " +
                        std::to_string(res->status) + ": " + res->body);
  }
  try {
    return json::parse(res->body);
  } catch (const json::exception& e) {
    throw ProviderError("malformed JSON from " + url + ": " + e.what());
  }
}

}  // namespace

HttpBackend::HttpBackend(HttpBackendOptions options)
    : options_(std::move(options)) {
  SplitUrl(options_.endpoint);
}

std::string HttpBackend::id() const { return "openai:" + options_.endpoint; }

ChatResponse HttpBackend::complete(const ChatRequest& request) {
  json messages = json::array();
  for (std::size_t i = 0; i < request.messages.size(); ++i) {
    const auto& m = request.messages[i];
    const bool attach =
        !request.images.empty() && i + 1 == request.messages.size();
    if (!attach) {
      messages.push_back({{"role", RoleName(m.role)}, {"content", m.text}});
      continue;
    }
    json content = json::array({{{"type", "text"}, {"text", m.text}}});
    for (const auto& image : request.images) {
      content.push_back({{"type", "image_url"},
                         {"image_url", {{"url", ImageDataUrl(image)}}}});
    }
    messages.push_back({{"role", RoleName(m.role)}, {"content", content}});
  }
  json body = {{"model", request.model_id},
               {"messages", messages},
               {"temperature", request.sampling.temperature},
               {"top_p", request.sampling.top_p},
               {"min_tokens", request.sampling.min_tokens},
               {"max_tokens", request.sampling.max_tokens}};
  if (request.sampling.seed) body["seed"] = *request.sampling.seed;

  const json reply =
      PostJson(options_.endpoint + "/chat/completions", body, options_);
  ChatResponse out;
  try {
    const auto& choice = reply.at("choices").at(0);
    const auto& content = choice.at("message").at("content");
    out.text = content.is_null() ? "" : content.get<std::string>();
    if (reply.contains("usage")) {
      const auto& usage = reply.at("usage");
      out.usage.input_tokens = usage.value("prompt_tokens", std::uint64_t{0});
      out.usage.output_tokens =
          usage.value("completion_tokens", std::uint64_t{0});
    }
    out.provider_meta = {{"id", reply.value("id", std::string())},
                         {"finish_reason",
                          choice.value("finish_reason", std::string())}};
  } catch (const json::exception& e) {
    throw ProviderError("unexpected completion payload: " +
                        std::string(e.what()));
  }
  return out;
}

double HttpBackend::reward_score(const RewardScoreRequest& request) {
  if (options_.reward_endpoint.empty()) {
    throw ProviderError("no reward endpoint configured");
  }
  const auto turns = PromptLibrary::Default().render_messages(
      TemplateId::kRmScoreRequest,
      {{"question", request.question}, {"response", request.response}});
  json messages = json::array();
  for (const auto& m : turns) {
    messages.push_back({{"role", RoleName(m.role)}, {"content", m.text}});
  }
  const json reply = PostJson(
      options_.reward_endpoint,
      {{"model", options_.reward_model}, {"messages", messages}}, options_);
  if (!reply.contains("score") || !reply.at("score").is_number()) {
    throw ProviderError("reward reply lacks a numeric 'score'");
  }
  return reply.at("score").get<double>();
}

}  // namespace bimath
