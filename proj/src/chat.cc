// Copyright 2026 The bimath Authors
// SPDX-License-Identifier: Apache-2.0

#include "bimath/chat.h"

namespace bimath {

std::string_view RoleName(Role role) {
  switch (role) {
    case Role::kSystem:
      return "system";
    case Role::kUser:
      return "user";
    case Role::kAssistant:
      return "assistant";
  }
  return "user";
}

std::optional<Role> ParseRole(std::string_view name) {
  if (name == "system") return Role::kSystem;
  if (name == "user") return Role::kUser;
  if (name == "assistant") return Role::kAssistant;
  return std::nullopt;
}

std::string FlattenMessages(std::span<const ChatMessage> messages) {
  if (messages.size() == 1) return messages.front().text;
  std::string out;
  for (const auto& m : messages) {
    if (!out.empty()) out += "\n\n";
    switch (m.role) {
      case Role::kSystem:
        out += "[System]\n";
        break;
      case Role::kUser:
        out += "[User]\n";
        break;
      case Role::kAssistant:
        out += "[Assistant]\n";
        break;
    }
    out += m.text;
  }
  return out;
}

}  // namespace bimath
