#include "sdspde/error.hpp"

namespace sdspde {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "INVALID_ARGUMENT";
    case ErrorCode::dimension_mismatch: return "DIMENSION_MISMATCH";
    case ErrorCode::unbounded_conjugate: return "UNBOUNDED_CONJUGATE";
    case ErrorCode::unbounded_sup: return "UNBOUNDED_SUP";
    case ErrorCode::no_convergence: return "NO_CONVERGENCE";
    case ErrorCode::empty_graph: return "EMPTY_GRAPH";
    case ErrorCode::grid_too_coarse: return "GRID_TOO_COARSE";
    case ErrorCode::singular_solve: return "SINGULAR_SOLVE";
    case ErrorCode::ensemble_mismatch: return "ENSEMBLE_MISMATCH";
    case ErrorCode::non_adapted_input: return "NON_ADAPTED_INPUT";
    case ErrorCode::non_coercive: return "NON_COERCIVE";
    case ErrorCode::diverged: return "DIVERGED";
    case ErrorCode::non_recoverable_field: return "NON_RECOVERABLE_FIELD";
    case ErrorCode::precondition_div_a: return "PRECONDITION_DIV_A";
    case ErrorCode::precondition_growth: return "PRECONDITION_GROWTH";
    case ErrorCode::precondition_q_range: return "PRECONDITION_Q_RANGE";
    case ErrorCode::not_supported: return "NOT_SUPPORTED";
    case ErrorCode::config_error: return "CONFIG_ERROR";
    case ErrorCode::io_error: return "IO_ERROR";
  }
  return "UNKNOWN";
}

}  // namespace sdspde
