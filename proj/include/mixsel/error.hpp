#pragma once

#include <stdexcept>
#include <string>

namespace mixsel {

enum class ErrorCode {
  AllMissingColumn,
  OutOfRangeCategorical,
  NegativeInteger,
  InvalidShape,
  UnsupportedValue,
  EmptyWeight,
  EmptyComponent,
  LengthMismatch,
  NoRoot,
  NonPositiveRate,
  Parse,
  InvalidArgument,
};

const char* to_string(ErrorCode code);

// Single exception type for the library; `code()` tells callers what went wrong.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mixsel
