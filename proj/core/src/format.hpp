#pragma once

#include <charconv>
#include <string>

namespace iadet::detail {

/// Shortest decimal text that reads back to the same double.
inline std::string format_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return ec == std::errc() ? std::string(buf, end) : std::string("nan");
}

}  // namespace iadet::detail
