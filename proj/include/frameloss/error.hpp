#pragma once

#include <stdexcept>
#include <string>

namespace frameloss {

enum class ErrorCode
{
  degenerate_parameters,
  invalid_range,
  invalid_ratio,
  length_mismatch,
  empty_input,
  malformed_line,
  degenerate,
  indivisible_length,
  invalid_duration,
  invalid_config,
  missing_model,
  predictor_failure,
  io,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error
{
public:

  Error(ErrorCode code, const std::string& what)
    : std::runtime_error{what}
    , code_{code}
  {}

  ErrorCode code() const noexcept { return code_; }

private:

  ErrorCode code_;
};

} // namespace frameloss
