#pragma once

#include "sdspde/ito/process.hpp"
#include "sdspde/solver/problem.hpp"

namespace sdspde::detail {

/// assemble_I without the adaptedness requirement.
GapReport assemble_unchecked(const AdditiveProblem& prob, const ItoProcessEnsemble& proc);

/// Process with x0 = u0, F = B and drift (y_n - u_n)/dt.
ItoProcessEnsemble process_from_states(const AdditiveProblem& prob, const std::vector<Eigen::MatrixXd>& y,
                                       Adaptedness a);

}  // namespace sdspde::detail
