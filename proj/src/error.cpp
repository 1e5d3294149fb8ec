#include "mixsel/error.hpp"

namespace mixsel {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::AllMissingColumn: return "AllMissingColumn";
    case ErrorCode::OutOfRangeCategorical: return "OutOfRangeCategorical";
    case ErrorCode::NegativeInteger: return "NegativeInteger";
    case ErrorCode::InvalidShape: return "InvalidShape";
    case ErrorCode::UnsupportedValue: return "UnsupportedValue";
    case ErrorCode::EmptyWeight: return "EmptyWeight";
    case ErrorCode::EmptyComponent: return "EmptyComponent";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NoRoot: return "NoRoot";
    case ErrorCode::NonPositiveRate: return "NonPositiveRate";
    case ErrorCode::Parse: return "Parse";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace mixsel
