#pragma once

#include "sdspde/experiment/config.hpp"
#include "sdspde/stochastic/bundle.hpp"

#include <string>
#include <vector>

namespace sdspde {

struct LevelResult {
  int level = 0;
  int steps = 0, k = 0, paths = 0;
  GapReport report;
  double residual_defect = 0.0;
  std::string residual_norm;
  /// Minimizer against the oracle ("exact" for OU, else "reference_step" on the same increments).
  std::string oracle;
  double oracle_error = 0.0;
  double reference_error = 0.0;  // reference stepper against the exact OU solution; NaN otherwise
  double empirical_order = 0.0;  // log2 of successive |total_I| ratios; NaN on level 0
  int iterations = 0;
  double max_final_gap = 0.0;
  double certificate_fraction = 0.0;  // per-node Fenchel gap below 1e-6
  std::string adaptedness;
  std::vector<double> picard_residuals;
  double growth_exponent = 0.0;
  std::vector<ContinuationStage> stages;
  double proxy_spread = 0.0;
  double runtime_s = 0.0;  // only filled in with timing on
};

struct CriterionOutcome {
  std::string key;
  double value = 0.0;
  double limit = 0.0;
  bool pass = false;
};

struct RunResult {
  RunConfig config;
  std::vector<LevelResult> levels;
  std::vector<CriterionOutcome> criteria;
  EnsemblePtr finest_ensemble;
  std::vector<BundleSection> finest_sections;
  bool pass() const;
};

/// Runs every sweep level on nested increments: the finest ensemble is
/// sampled from the seed and coarser levels sum its increments.
/// Throws config_error for criteria that do not apply to the problem.
RunResult execute_run(const RunConfig& config, bool timing = false);

std::string results_json(const RunResult& r);
/// Header N,K,M,... with floats at 17 significant digits; runtime_s is 0 unless timed.
std::string levels_csv(const RunResult& r);

/// results.json, tables/levels.csv and replay.bin as enabled by config.emit.
/// Throws io_error.
void write_artifacts(const RunResult& r, const std::string& out_dir);

}  // namespace sdspde
