#include "core/error.hpp"

namespace srfe {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::VariableOutOfRange: return "VariableOutOfRange";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptyVector: return "EmptyVector";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::TooFewRows: return "TooFewRows";
    case ErrorCode::DegenerateData: return "DegenerateData";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::EmptyResults: return "EmptyResults";
    case ErrorCode::ZeroAugmentedRmse: return "ZeroAugmentedRmse";
    case ErrorCode::MissingTarget: return "MissingTarget";
    case ErrorCode::NoNumericFeatures: return "NoNumericFeatures";
    case ErrorCode::EmptyAfterCleaning: return "EmptyAfterCleaning";
  }
  return "UnknownError";
}

}  // namespace srfe
