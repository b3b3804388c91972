#pragma once

#include <stdexcept>
#include <string>

namespace srfe {

enum class ErrorCode {
  InvalidArgument,
  ConfigInvalid,
  ParseError,
  IoError,
  VariableOutOfRange,
  EmptyDataset,
  NonFiniteInput,
  DimensionMismatch,
  LengthMismatch,
  EmptyVector,
  RankDeficient,
  TooFewRows,
  DegenerateData,
  ZeroVariance,
  TooFewSamples,
  EmptyResults,
  ZeroAugmentedRmse,
  MissingTarget,
  NoNumericFeatures,
  EmptyAfterCleaning,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool cond, ErrorCode code, const std::string& message) {
  if (!cond) fail(code, message);
}

}  // namespace srfe
