#pragma once

#include "sdspde/catalog/catalog.hpp"
#include "sdspde/solver/problem.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace sdspde {

inline constexpr int kSchemaVersion = 1;

/// Dyadic refinement: level l uses N * 2^l steps and/or (K + 1) * 2^l - 1 nodes per axis.
struct Sweep {
  int levels = 1;
  bool refine_n = true;
  bool refine_k = false;
};

struct Emit {
  bool csv = true;
  bool json = true;
  bool replay_bundle = false;
};

/// Keys accepted under "criteria"; each is checked on the run's levels.
///   total_I_abs_max, fenchel_gap_max (finest level), empirical_order_min (every order),
///   oracle_ratio_max (minimizer over reference oracle error, finest level),
///   certificate_fraction_min (per-node gap < 1e-6, finest level),
///   picard_residual_max, proxy_spread_max.
const std::vector<std::string>& criterion_keys();

struct RunConfig {
  ProblemSpec problem;  // its seed and pinned criteria come from the top level
  SolverConfig solver;
  Sweep sweep;
  std::string output_dir = "out";
  Emit emit;
};

/// Parses and validates a config document. Throws config_error naming the
/// offending key (e.g. "problem.k: expected an integer").
RunConfig parse_run_config(const std::string& json_text);
/// Throws io_error when the file cannot be read.
RunConfig load_run_config(const std::string& path);

/// The problem block as written in configs (seed excluded).
std::string problem_to_json(const ProblemSpec& s);
std::string run_config_to_json(const RunConfig& c);

}  // namespace sdspde
