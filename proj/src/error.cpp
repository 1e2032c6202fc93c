#include "trielab/error.hpp"

namespace trielab {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ThetaOutOfDomain: return "ThetaOutOfDomain";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::ZOutOfRange: return "ZOutOfRange";
    case ErrorCode::NotStrictlyConvex: return "NotStrictlyConvex";
    case ErrorCode::DomainTooNarrow: return "DomainTooNarrow";
    case ErrorCode::OutsideRegime: return "OutsideRegime";
    case ErrorCode::ConditionsNotMet: return "ConditionsNotMet";
    case ErrorCode::BadRows: return "BadRows";
    case ErrorCode::BadSupport: return "BadSupport";
    case ErrorCode::BadAlpha: return "BadAlpha";
    case ErrorCode::NotRegular: return "NotRegular";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::HeightUndefined: return "HeightUndefined";
    case ErrorCode::DepthCapExceeded: return "DepthCapExceeded";
    case ErrorCode::CapExceeded: return "CapExceeded";
    case ErrorCode::LengthTooShort: return "LengthTooShort";
    case ErrorCode::DegenerateX: return "DegenerateX";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::PredictionUnavailable: return "PredictionUnavailable";
  }
  return "Unknown";
}

}  // namespace trielab
