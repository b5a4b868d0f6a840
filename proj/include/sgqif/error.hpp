#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sgqif {

enum class ErrorKind {
  InvalidInput,
  RankZero,
  NonFinite,
  Singular,
  NoConvergence,
  Io,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void reject(const std::string& message) {
  throw Error(ErrorKind::InvalidInput, message);
}

}  // namespace sgqif
