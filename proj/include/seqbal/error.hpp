#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace seqbal {

enum class ErrorCode {
  odd_horizon,
  out_of_range,
  unknown_support,
  space_mismatch,
  size_mismatch,
  empty_group,
  odd_count,
  too_large,
  bad_eta,
  bad_phi,
  bad_c,
  bad_gamma,
  has_continuous,
  not_a_power,
  indivisible,
  degenerate_input,
  bad_config,
  length_mismatch,
  invalid_space,
  parse_error,
  invariant_violation,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::odd_horizon: return "OddHorizon";
    case ErrorCode::out_of_range: return "OutOfRange";
    case ErrorCode::unknown_support: return "UnknownSupport";
    case ErrorCode::space_mismatch: return "SpaceMismatch";
    case ErrorCode::size_mismatch: return "SizeMismatch";
    case ErrorCode::empty_group: return "EmptyGroup";
    case ErrorCode::odd_count: return "OddCount";
    case ErrorCode::too_large: return "TooLarge";
    case ErrorCode::bad_eta: return "BadEta";
    case ErrorCode::bad_phi: return "BadPhi";
    case ErrorCode::bad_c: return "BadC";
    case ErrorCode::bad_gamma: return "BadGamma";
    case ErrorCode::has_continuous: return "HasContinuous";
    case ErrorCode::not_a_power: return "NotAPower";
    case ErrorCode::indivisible: return "Indivisible";
    case ErrorCode::degenerate_input: return "DegenerateInput";
    case ErrorCode::bad_config: return "BadConfig";
    case ErrorCode::length_mismatch: return "LengthMismatch";
    case ErrorCode::invalid_space: return "InvalidSpace";
    case ErrorCode::parse_error: return "ParseError";
    case ErrorCode::invariant_violation: return "InvariantViolation";
  }
  return "Unknown";
}

/// Every failure in the library surfaces as this exception; `code()` is the
/// machine-readable reason and `what()` carries the human-readable context.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace seqbal
