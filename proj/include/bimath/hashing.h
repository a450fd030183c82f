// Copyright 2026 The bimath Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef BIMATH_HASHING_H_
#define BIMATH_HASHING_H_

#include <string>
#include <string_view>

namespace bimath {

// Lowercase hex SHA-256 of `data`.
std::string Sha256Hex(std::string_view data);

}  // namespace bimath

#endif  // BIMATH_HASHING_H_
