#pragma once

#include <stdexcept>
#include <string>

namespace uninfo {

enum class ErrorCode {
  ZeroVectorRow,
  DimensionMismatch,
  LengthMismatch,
  ShapeMismatch,
  BatchTooSmall,
  RankTooLarge,
  BadImageShape,
  EmptyStream,
  UnknownKind,
  EmptyKinds,
  EmptySet,
  DegenerateSpectrum,
  ZeroMeanVector,
  TooManyClasses,
  InvalidArgument,
  IoError,
  ParseError,
  ConfigError,
  NumericFailure,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace uninfo
