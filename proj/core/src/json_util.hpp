#pragma once

#include <cstdint>

#include "iadet/error.hpp"

namespace iadet::detail {

template <typename Json>
std::uint64_t as_unsigned(const Json& value) {
  if (!value.is_number_unsigned()) {
    throw Error(ErrorCode::kParse, "expected a non-negative integer, got " + value.dump());
  }
  return value.template get<std::uint64_t>();
}

}  // namespace iadet::detail
