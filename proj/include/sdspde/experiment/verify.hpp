#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sdspde {

struct CheckLine {
  std::string suite;
  std::string name;
  double value = 0.0;
  std::string relation;  // "<=" or ">="
  double threshold = 0.0;
  bool pass = false;
};

/// Desk-size invariant suites: convex, ito, solver, catalog, or all.
/// Throws config_error for other names.
std::vector<CheckLine> run_suite(const std::string& suite, std::uint64_t seed);

/// "PASS convex.self_duality.basic value=1.2e-15 <= 1e-06"
std::string format_check(const CheckLine& c);

}  // namespace sdspde
