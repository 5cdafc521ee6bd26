#include "dnc/error.hpp"

namespace dnc {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid argument";
    case ErrorKind::DimensionMismatch: return "dimension mismatch";
    case ErrorKind::OutOfBounds: return "out of bounds";
    case ErrorKind::EmptyMask: return "empty mask";
    case ErrorKind::ZeroNormFeature: return "zero-norm feature";
    case ErrorKind::NoConvergence: return "no convergence";
    case ErrorKind::DegenerateEigenvector: return "degenerate eigenvector";
    case ErrorKind::MaskTooSmall: return "mask too small";
    case ErrorKind::ImageMismatch: return "image mismatch";
    case ErrorKind::BadMagic: return "bad magic";
    case ErrorKind::TruncatedPayload: return "truncated payload";
    case ErrorKind::TrailingBytes: return "trailing bytes";
    case ErrorKind::NonFiniteValue: return "non-finite value";
    case ErrorKind::Schema: return "schema violation";
    case ErrorKind::Config: return "config error";
    case ErrorKind::Io: return "io error";
  }
  return "unknown";
}

}  // namespace dnc
