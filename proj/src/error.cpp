// SPDX-License-Identifier: Apache-2.0
#include "error.hpp"

namespace finch {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::parse: return "parse_error";
    case ErrorCode::schema: return "schema_error";
    case ErrorCode::empty_data: return "empty_data";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::chain: return "chain_error";
    case ErrorCode::unavailable: return "unavailable";
    case ErrorCode::io: return "io_error";
    case ErrorCode::bind: return "bind_error";
    case ErrorCode::internal: return "internal_error";
  }
  return "unknown";
}

}  // namespace finch
