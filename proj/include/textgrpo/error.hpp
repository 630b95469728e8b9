// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace textgrpo {

// Diagnostic categories map to CLI exit codes (0 = success).
enum class ErrorCategory : int {
  config = 2,    // invalid or inconsistent configuration
  data = 3,      // malformed dataset / fixture input
  guard = 4,     // training guard tripped (divergence, non-finite loss)
  io = 5,        // filesystem / serialization failure
  mismatch = 6,  // checkpoint/dataset vocabulary or digest mismatch
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const { return category_; }
  int exit_code() const { return static_cast<int>(category_); }

 private:
  ErrorCategory category_;
};

}  // namespace textgrpo
