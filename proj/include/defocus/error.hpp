#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace defocus {

enum class ErrorCode {
  InvalidParameter,
  ShapeError,
  OutOfSupport,
  MemoryExceeded,
  EmptyDomain,
  TooSmall,
  NoRealFocus,
  Divergence,
  BehindLens,
  Singular,
  IoError,
  UnsupportedFormat,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Error raised by every library operation. `code()` distinguishes contract
/// violations (bad parameters, shape mismatches) from runtime failures (I/O).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  /// True for errors caused by the caller's inputs rather than the environment.
  bool is_validation() const noexcept {
    return code_ != ErrorCode::IoError && code_ != ErrorCode::MemoryExceeded;
  }

 private:
  ErrorCode code_;
};

}  // namespace defocus
