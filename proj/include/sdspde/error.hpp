#pragma once

#include <stdexcept>
#include <string>

namespace sdspde {

enum class ErrorCode {
  invalid_argument,
  dimension_mismatch,
  unbounded_conjugate,
  unbounded_sup,
  no_convergence,
  empty_graph,
  grid_too_coarse,
  singular_solve,
  ensemble_mismatch,
  non_adapted_input,
  non_coercive,
  diverged,
  non_recoverable_field,
  precondition_div_a,
  precondition_growth,
  precondition_q_range,
  not_supported,
  config_error,
  io_error,
};

const char* to_string(ErrorCode code) noexcept;

/// Exception carrying one of the library error codes. The message always
/// starts with the code name so that CLI diagnostics stay greppable.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace sdspde
