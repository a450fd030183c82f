// Copyright 2026 The bimath Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef BIMATH_ERRORS_H_
#define BIMATH_ERRORS_H_

#include <stdexcept>
#include <string>

namespace bimath {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input data: dataset lines, fixture files, report mismatches.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Anything that went wrong while talking to a model backend.
class BackendError : public Error {
 public:
  using Error::Error;
};

// Transport-level failure. Retried by the gateway; once surfaced it carries
// the total number of attempts made.
class TransportError : public BackendError {
 public:
  explicit TransportError(const std::string& what, int attempts = 1)
      : BackendError(what), attempts_(attempts) {}
  int attempts() const { return attempts_; }

 private:
  int attempts_;
};

// The backend answered, but the answer is unusable (e.g. empty text).
class ProviderError : public BackendError {
 public:
  using BackendError::BackendError;
};

// The mock backend received a request no fixture rule covers.
class UnscriptedFixtureError : public BackendError {
 public:
  using BackendError::BackendError;
};

}  // namespace bimath

#endif  // BIMATH_ERRORS_H_
