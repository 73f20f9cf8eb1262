#pragma once

#include <fmt/format.h>

#include <stdexcept>
#include <string>
#include <utility>

namespace skewvar {

// Every library failure surfaces as skewvar::Error with a formatted message.
class Error : public std::runtime_error {
 public:
  explicit Error(std::string msg) : std::runtime_error(std::move(msg)) {}
};

template <typename... Args>
[[noreturn]] void fail(fmt::format_string<Args...> f, Args&&... args) {
  throw Error(fmt::format(f, std::forward<Args>(args)...));
}

template <typename... Args>
void require(bool cond, fmt::format_string<Args...> f, Args&&... args) {
  if (!cond) fail(f, std::forward<Args>(args)...);
}

}  // namespace skewvar
