#include "frameloss/error.hpp"

namespace frameloss {

const char*
to_string(ErrorCode code)
noexcept
{
  switch (code)
  {
    case ErrorCode::degenerate_parameters: return "degenerate-parameters";
    case ErrorCode::invalid_range: return "invalid-range";
    case ErrorCode::invalid_ratio: return "invalid-ratio";
    case ErrorCode::length_mismatch: return "length-mismatch";
    case ErrorCode::empty_input: return "empty-input";
    case ErrorCode::malformed_line: return "malformed-line";
    case ErrorCode::degenerate: return "degenerate";
    case ErrorCode::indivisible_length: return "indivisible-length";
    case ErrorCode::invalid_duration: return "invalid-duration";
    case ErrorCode::invalid_config: return "invalid-config";
    case ErrorCode::missing_model: return "missing-model";
    case ErrorCode::predictor_failure: return "predictor-failure";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

} // namespace frameloss
