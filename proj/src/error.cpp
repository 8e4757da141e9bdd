#include "defocus/error.hpp"

namespace defocus {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidParameter: return "invalid-parameter";
    case ErrorCode::ShapeError: return "shape-error";
    case ErrorCode::OutOfSupport: return "out-of-support";
    case ErrorCode::MemoryExceeded: return "memory-exceeded";
    case ErrorCode::EmptyDomain: return "empty-domain";
    case ErrorCode::TooSmall: return "too-small";
    case ErrorCode::NoRealFocus: return "no-real-focus";
    case ErrorCode::Divergence: return "divergence";
    case ErrorCode::BehindLens: return "behind-lens";
    case ErrorCode::Singular: return "singular";
    case ErrorCode::IoError: return "io-error";
    case ErrorCode::UnsupportedFormat: return "unsupported-format";
  }
  return "unknown";
}

}  // namespace defocus
