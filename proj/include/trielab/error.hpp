#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace trielab {

enum class ErrorCode {
  ThetaOutOfDomain,
  NoConvergence,
  ZOutOfRange,
  NotStrictlyConvex,
  DomainTooNarrow,
  OutsideRegime,
  ConditionsNotMet,
  BadRows,
  BadSupport,
  BadAlpha,
  NotRegular,
  ParseError,
  HeightUndefined,
  DepthCapExceeded,
  CapExceeded,
  LengthTooShort,
  DegenerateX,
  IoError,
  ConfigError,
  PredictionUnavailable,
};

/// Stable machine-readable name, e.g. "ThetaOutOfDomain".
std::string_view error_code_name(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace trielab
