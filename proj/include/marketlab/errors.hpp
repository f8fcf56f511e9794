#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace marketlab {

enum class ErrorKind {
  NonPositiveParameter,
  ShareSumMismatch,
  StateOutOfBounds,
  StepSizeUnderflow,
  NoConvergence,
  DomainError,
  NTooSmall,
  DegenerateArm,
  TooFewReplications,
  InvalidConfig,
  ReplicationFailure,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the library; `kind()` identifies the failure.
class MarketError : public std::runtime_error {
 public:
  MarketError(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace marketlab
