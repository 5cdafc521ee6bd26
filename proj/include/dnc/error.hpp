#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dnc {

enum class ErrorKind {
  InvalidArgument,
  DimensionMismatch,
  OutOfBounds,
  EmptyMask,
  ZeroNormFeature,
  NoConvergence,
  DegenerateEigenvector,
  MaskTooSmall,
  ImageMismatch,
  BadMagic,
  TruncatedPayload,
  TrailingBytes,
  NonFiniteValue,
  Schema,
  Config,
  Io,
};

std::string_view to_string(ErrorKind kind);

// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace dnc
