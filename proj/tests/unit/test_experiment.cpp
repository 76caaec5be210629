#include <doctest.h>

#include "sdspde/error.hpp"
#include "sdspde/experiment/config.hpp"
#include "sdspde/experiment/run.hpp"
#include "sdspde/experiment/verify.hpp"

#include <filesystem>
#include <sstream>

using namespace sdspde;

namespace {

const char* kHeat = R"({
  "schema_version": 1,
  "problem": {"family": "heat_transport", "k": 8, "paths": 6, "steps": 16},
  "seed": 3,
  "sweep": {"levels": 3},
  "criteria": {"fenchel_gap_max": 1e-9}
})";

std::string with(const std::string& key_value) {
  return std::string(R"({"schema_version": 1, "problem": "heat_transport", )") + key_value + "}";
}

void config_error(const std::string& text, const std::string& key) {
  CAPTURE(text);
  try {
    parse_run_config(text);
    CHECK_MESSAGE(false, "no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::config_error);
    CHECK(std::string(e.what()).find(key) != std::string::npos);
  }
}

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("config parsing and key-named errors") {
  const RunConfig c = parse_run_config(kHeat);
  CHECK(c.problem.family == Family::heat_transport);
  CHECK(c.problem.k == 8);
  CHECK(c.problem.seed == 3);
  CHECK(c.problem.p == default_spec(Family::heat_transport).p);
  CHECK(c.sweep.levels == 3);
  CHECK(c.problem.pinned.at("fenchel_gap_max") == 1e-9);

  config_error(R"({"schema_version": 1, "problem": "heat_transport"})", "seed");
  config_error(R"({"problem": "heat_transport", "seed": 1})", "schema_version");
  config_error(R"({"schema_version": 2, "problem": "heat_transport", "seed": 1})", "schema_version");
  config_error(with(R"("seed": -1)"), "seed");
  config_error(with(R"("seed": 1, "colour": 3)"), "colour");
  config_error(with(R"("seed": 1, "solver": {"gap_tol": -1})"), "solver.gap_tol");
  config_error(with(R"("seed": 1, "solver": {"lambda_schedule": [0.1, 0.2]})"), "solver.lambda_schedule[1]");
  config_error(with(R"("seed": 1, "sweep": {"levels": 0})"), "sweep.levels");
  config_error(with(R"("seed": 1, "criteria": {"speed": 1})"), "criteria.speed");
  config_error(R"({"schema_version": 1, "seed": 1, "problem": {"family": "heat_transport", "noise": {"shape": "x"}}})",
               "problem.noise.shape");
  config_error(R"({"schema_version": 1, "seed": 1, "problem": {"family": "wave"}})", "problem.family");
  config_error(R"({"schema_version": 1, "seed": 1, "problem": {"k": 4}})", "problem.family");
  config_error("{not json", "config");
}

TEST_CASE("config round trip") {
  const RunConfig a = parse_run_config(kHeat);
  const RunConfig b = parse_run_config(run_config_to_json(a));
  CHECK(run_config_to_json(a) == run_config_to_json(b));
}

TEST_CASE("criteria must apply to the run") {
  RunConfig c = parse_run_config(kHeat);
  c.problem.pinned["oracle_ratio_max"] = 2.0;
  CHECK_THROWS_WITH_AS(execute_run(c), doctest::Contains("criteria.oracle_ratio_max"), Error);
  c = parse_run_config(kHeat);
  c.sweep.levels = 1;
  c.problem.pinned["empirical_order_min"] = 1.0;
  CHECK_THROWS_WITH_AS(execute_run(c), doctest::Contains("criteria.empirical_order_min"), Error);
}

TEST_CASE("sweep rows, orders and artifacts") {
  const RunConfig c = parse_run_config(kHeat);
  const RunResult r = execute_run(c);
  REQUIRE(r.levels.size() == 3);
  CHECK(r.levels[0].steps == 16);
  CHECK(r.levels[2].steps == 64);
  CHECK(std::isnan(r.levels[0].empirical_order));
  const double order = std::log2(std::abs(r.levels[0].report.total_I) / std::abs(r.levels[1].report.total_I));
  CHECK(r.levels[1].empirical_order == order);
  CHECK(r.pass());

  const std::string csv = levels_csv(r);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "level,N,K,M,total_I,fenchel_gap,ito_residual,oracle_error,empirical_order,runtime_s");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 3);
  CHECK(csv.find('\r') == std::string::npos);

  const auto dir = std::filesystem::temp_directory_path() / "sdspde_test_experiment";
  std::filesystem::remove_all(dir);
  write_artifacts(r, dir.string());
  CHECK(std::filesystem::exists(dir / "results.json"));
  CHECK(std::filesystem::exists(dir / "tables" / "levels.csv"));
  CHECK_FALSE(std::filesystem::exists(dir / "replay.bin"));
  std::filesystem::remove_all(dir);

  // Coarse levels are nested in the finest: the same run at one level reproduces the last row.
  RunConfig one = c;
  one.sweep.levels = 1;
  one.problem.steps = 64;
  const RunResult f = execute_run(one);
  CHECK(f.levels[0].report.total_I == r.levels[2].report.total_I);

  RunConfig k = c;
  k.sweep = {2, false, true};
  const RunResult kr = execute_run(k);
  CHECK(kr.levels[1].k == 17);
  CHECK(kr.levels[1].steps == 16);
}

TEST_CASE("results are reproducible and independent of the output location") {
  RunConfig a = parse_run_config(kHeat);
  RunConfig b = a;
  b.output_dir = "elsewhere";
  CHECK(results_json(execute_run(a)) == results_json(execute_run(b)));
}

TEST_CASE("verify suites") {
  const auto lines = run_suite("convex", 5);
  CHECK(!lines.empty());
  for (const auto& l : lines) CHECK_MESSAGE(l.pass, format_check(l));
  CHECK(format_check(lines[0]).rfind("PASS convex.", 0) == 0);
  CHECK_THROWS_AS(run_suite("spectral", 1), Error);
}

}  // TEST_SUITE
