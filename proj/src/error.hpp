// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace finch {

// Mirrors finch_status in the C header; values must stay in sync.
enum class ErrorCode {
  invalid_argument = 1,
  parse = 2,
  schema = 3,
  empty_data = 4,
  not_found = 5,
  chain = 6,
  unavailable = 7,
  io = 8,
  bind = 9,
  internal = 10,
};

std::string_view error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string detail = {})
      : std::runtime_error(message), code_(code), detail_(std::move(detail)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace finch
