#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace faultlens {

enum class ErrorKind {
  kMissingFile,
  kSchemaViolation,
  kDanglingReference,
  kUnknownLine,
  kEmptySpectrum,
  kMissingBlockInput,
  kNetworkError,
  kAuthError,
  kRateLimited,
  kCassetteMiss,
  kTokenBudgetExceeded,
  kNoHitLines,
  kDegenerateInput,
  kLengthMismatch,
  kZeroVariance,
  kNoFailingTests,
  kIncompleteCoverage,
  kInvalidArgument,
};

std::string_view to_string(ErrorKind kind);

/// Base exception for every failure the toolkit reports. The kind is what
/// callers branch on; the message carries the human-readable detail.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& detail)
      : std::runtime_error(std::string(to_string(kind)) + ": " + detail),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  /// Network-level failures worth another attempt.
  bool retryable() const noexcept {
    return kind_ == ErrorKind::kNetworkError || kind_ == ErrorKind::kRateLimited;
  }

 private:
  ErrorKind kind_;
};

/// Rate limiting carries the server-suggested delay.
class RateLimitedError : public Error {
 public:
  RateLimitedError(const std::string& detail, double retry_after_seconds)
      : Error(ErrorKind::kRateLimited, detail), retry_after_(retry_after_seconds) {}

  double retry_after_seconds() const noexcept { return retry_after_; }

 private:
  double retry_after_;
};

}  // namespace faultlens
