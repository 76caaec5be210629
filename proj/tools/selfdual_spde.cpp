// Batch front-end: run configs, verify invariant suites.

#include "sdspde/error.hpp"
#include "sdspde/experiment/config.hpp"
#include "sdspde/experiment/run.hpp"
#include "sdspde/experiment/verify.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

using namespace sdspde;

namespace {

int verify(const std::string& suite, std::uint64_t seed, const std::string& out_dir) {
  const auto lines = run_suite(suite, seed);
  std::string report;
  int failed = 0;
  for (const auto& l : lines) {
    report += format_check(l) + "\n";
    if (!l.pass) ++failed;
  }
  report += "verify " + suite + ": " + std::to_string(lines.size() - failed) + "/" + std::to_string(lines.size()) +
            " passed\n";
  std::cout << report;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ofstream(std::filesystem::path(out_dir) / ("verify_" + suite + ".txt"), std::ios::binary) << report;
  }
  return failed == 0 ? 0 : 1;
}

int run(const std::string& config_path, int sweep, const std::uint64_t* seed, const std::string& out_dir, bool timing) {
  RunConfig cfg = load_run_config(config_path);
  if (sweep > 0) cfg.sweep.levels = sweep;
  if (seed) cfg.problem.seed = *seed;
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  const RunResult r = execute_run(cfg, timing);
  write_artifacts(r, cfg.output_dir);
  for (const auto& l : r.levels) {
    std::printf("level %d N=%d K=%d M=%d total_I=%.6e fenchel_gap=%.3e ito_residual=%.6e oracle_error=%.6e order=%.4f\n",
                l.level, l.steps, l.k, l.paths, l.report.total_I, l.report.fenchel_gap, l.report.ito_residual,
                l.oracle_error, l.empirical_order);
  }
  int failed = 0;
  for (const auto& c : r.criteria) {
    std::printf("%s criterion %s value=%.9g limit=%.9g\n", c.pass ? "PASS" : "FAIL", c.key.c_str(), c.value, c.limit);
    if (!c.pass) ++failed;
  }
  std::printf("artifacts in %s\n", cfg.output_dir.c_str());
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variational solver for SPDEs driven by self-dual Lagrangians"};
  app.require_subcommand(0, 1);

  std::string config_path, out_dir, verify_suite;
  int sweep = 0, workers = 0;
  std::uint64_t seed = 0;
  bool timing = false;
  app.add_option("--workers", workers, "worker threads (overrides SELFDUAL_SPDE_WORKERS)")->check(CLI::PositiveNumber);
  app.add_option("--verify", verify_suite, "run an invariant suite (convex, ito, solver, catalog, all)");
  auto* seed_opt = app.add_option("--seed", seed, "seed (overrides the config)");
  app.add_option("--out", out_dir, "output directory (overrides the config)");

  auto* run_cmd = app.add_subcommand("run", "run a config")->fallthrough();
  run_cmd->add_option("--config", config_path, "config path")->required();
  run_cmd->add_option("--sweep", sweep, "number of dyadic refinement levels")->check(CLI::Range(1, 16));
  run_cmd->add_flag("--timing", timing, "fill the runtime_s column");

  std::string suite_arg;
  auto* verify_cmd = app.add_subcommand("verify", "run an invariant suite")->fallthrough();
  verify_cmd->add_option("suite", suite_arg, "convex, ito, solver, catalog or all")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  if (workers > 0) setenv("SELFDUAL_SPDE_WORKERS", std::to_string(workers).c_str(), 1);

  try {
    const std::uint64_t verify_seed = *seed_opt ? seed : 1;
    if (*verify_cmd) return verify(suite_arg, verify_seed, out_dir);
    if (*run_cmd) return run(config_path, sweep, *seed_opt ? &seed : nullptr, out_dir, timing);
    if (!verify_suite.empty()) return verify(verify_suite, verify_seed, out_dir);
    std::cerr << app.help();
    return 2;
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return e.code() == ErrorCode::config_error ? 2 : 1;
  }
}
