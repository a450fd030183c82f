// Copyright 2026 The bimath Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef BIMATH_CHAT_H_
#define BIMATH_CHAT_H_

#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace bimath {

enum class Role { kSystem, kUser, kAssistant };

std::string_view RoleName(Role role);
std::optional<Role> ParseRole(std::string_view name);

struct ChatMessage {
  Role role = Role::kUser;
  std::string text;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

// "[User]\n...\n\n[Assistant]\n..." form, used when a conversation has to
// be stored as a single prompt string.
std::string FlattenMessages(std::span<const ChatMessage> messages);

}  // namespace bimath

#endif  // BIMATH_CHAT_H_
