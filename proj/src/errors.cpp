#include "uninfo/errors.hpp"

namespace uninfo {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ZeroVectorRow: return "ZeroVectorRow";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::BatchTooSmall: return "BatchTooSmall";
    case ErrorCode::RankTooLarge: return "RankTooLarge";
    case ErrorCode::BadImageShape: return "BadImageShape";
    case ErrorCode::EmptyStream: return "EmptyStream";
    case ErrorCode::UnknownKind: return "UnknownKind";
    case ErrorCode::EmptyKinds: return "EmptyKinds";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::DegenerateSpectrum: return "DegenerateSpectrum";
    case ErrorCode::ZeroMeanVector: return "ZeroMeanVector";
    case ErrorCode::TooManyClasses: return "TooManyClasses";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::NumericFailure: return "NumericFailure";
  }
  return "Unknown";
}

}  // namespace uninfo
