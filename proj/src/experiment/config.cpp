#include "sdspde/experiment/config.hpp"

#include "sdspde/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace sdspde {

using json = nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(const std::string& key, const std::string& msg) {
  throw Error(ErrorCode::config_error, key + ": " + msg);
}

// Typed access to one JSON object; unknown keys are rejected in done().
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(where(""), "expected an object");
  }

  std::string where(const std::string& key) const {
    if (path_.empty()) return key;
    return key.empty() ? path_ : path_ + "." + key;
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_number()) fail(where(key), "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(where(key), "expected a finite number");
    return d;
  }

  long long integer(const std::string& key, long long fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_number_integer()) fail(where(key), "expected an integer");
    return v.get<long long>();
  }

  std::uint64_t unsigned_integer(const std::string& key) {
    if (!has(key)) fail(where(key), "missing (runs are never seeded from the clock)");
    const json& v = raw(key);
    if (!v.is_number_unsigned()) fail(where(key), "expected a non-negative integer");
    return v.get<std::uint64_t>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_string()) fail(where(key), "expected a string");
    return v.get<std::string>();
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_boolean()) fail(where(key), "expected true or false");
    return v.get<bool>();
  }

  void done() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) fail(where(item.key()), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

int bounded_int(Reader& r, const std::string& key, int fallback, int lo, int hi) {
  const long long v = r.integer(key, fallback);
  if (v < lo || v > hi) fail(r.where(key), "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return static_cast<int>(v);
}

double positive(Reader& r, const std::string& key, double fallback) {
  const double v = r.number(key, fallback);
  if (!(v > 0.0)) fail(r.where(key), "must be positive");
  return v;
}

FieldShape read_shape(Reader& parent, const std::string& key, const FieldShape& fallback,
                      const std::vector<std::string>& allowed) {
  if (!parent.has(key)) return fallback;
  Reader r(parent.raw(key), parent.where(key));
  FieldShape f;
  f.shape = r.string("shape", fallback.shape);
  f.amplitude = r.number("amplitude", fallback.amplitude);
  r.done();
  if (std::find(allowed.begin(), allowed.end(), f.shape) == allowed.end()) {
    fail(r.where("shape"), "unknown shape '" + f.shape + "'");
  }
  return f;
}

ProblemSpec read_problem(const json& j) {
  if (j.is_string()) {
    ProblemSpec s = default_spec(family_from_string(j.get<std::string>()));
    return s;
  }
  Reader r(j, "problem");
  if (!r.has("family")) fail("problem.family", "missing");
  const std::string fam = r.string("family", "");
  ProblemSpec s = default_spec(family_from_string(fam));
  s.name = r.string("name", s.name);
  s.p = r.number("p", s.p);
  s.q = r.number("q", s.q);
  s.a_field = r.string("a_field", s.a_field);
  if (s.a_field != "none" && s.a_field != "bump" && s.a_field != "radial") {
    fail("problem.a_field", "unknown field '" + s.a_field + "'");
  }
  s.a_amplitude = r.number("a_amplitude", s.a_amplitude);
  s.beta = r.string("beta", s.beta);
  if (s.beta != "identity" && s.beta != "arctan" && s.beta != "cubic") {
    fail("problem.beta", "unknown flux '" + s.beta + "'");
  }
  s.u0 = read_shape(r, "u0", s.u0, {"none", "sine", "bump", "constant"});
  s.noise = read_shape(r, "noise", s.noise, {"none", "constant", "smooth", "pulse"});
  const bool gridless = s.family == Family::ou_scalar;
  s.dim = bounded_int(r, "dim", s.dim, gridless ? 0 : 1, gridless ? 0 : 2);
  s.k = bounded_int(r, "k", s.k, gridless ? 0 : 1, gridless ? 0 : 4096);
  s.paths = bounded_int(r, "paths", s.paths, 1, 10000000);
  s.steps = bounded_int(r, "steps", s.steps, 1, 1 << 24);
  s.horizon = positive(r, "horizon", s.horizon);
  s.theta = positive(r, "theta", s.theta);
  if (s.theta > 1.0) fail("problem.theta", "must lie in (0, 1]");
  s.max_outer = bounded_int(r, "max_outer", s.max_outer, 1, 100000);
  s.fp_tol = positive(r, "fp_tol", s.fp_tol);
  r.done();
  return s;
}

SolverConfig read_solver(const json& j) {
  Reader r(j, "solver");
  SolverConfig c;
  const std::string opt = r.string("optimizer", to_string(c.optimizer));
  if (opt == "accelerated_proximal") {
    c.optimizer = SolverConfig::Optimizer::accelerated_proximal;
  } else if (opt == "proximal_gradient") {
    c.optimizer = SolverConfig::Optimizer::proximal_gradient;
  } else if (opt == "per_step_prox_recursion") {
    c.optimizer = SolverConfig::Optimizer::per_step_prox_recursion;
  } else {
    fail("solver.optimizer", "unknown optimizer '" + opt + "'");
  }
  const std::string init = r.string("init", "march");
  if (init == "march") {
    c.init = SolverConfig::Init::march;
  } else if (init == "zero") {
    c.init = SolverConfig::Init::zero;
  } else {
    fail("solver.init", "expected 'march' or 'zero'");
  }
  c.max_iters = bounded_int(r, "max_iters", c.max_iters, 0, 100000000);
  c.gap_tol = positive(r, "gap_tol", c.gap_tol);
  c.adapted_probes = bounded_int(r, "adapted_probes", c.adapted_probes, 1, 100000);
  if (r.has("lambda_schedule")) {
    const json& v = r.raw("lambda_schedule");
    if (!v.is_array()) fail("solver.lambda_schedule", "expected an array of numbers");
    double prev = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < v.size(); ++i) {
      const std::string key = "solver.lambda_schedule[" + std::to_string(i) + "]";
      if (!v[i].is_number()) fail(key, "expected a number");
      const double l = v[i].get<double>();
      if (!(l > 0.0)) fail(key, "must be positive");
      if (!(l < prev)) fail(key, "the schedule must be strictly decreasing");
      c.lambda_schedule.push_back(l);
      prev = l;
    }
  }
  if (r.has("step_rule")) {
    Reader s(r.raw("step_rule"), "solver.step_rule");
    c.step_rule.initial_lipschitz = positive(s, "initial_lipschitz", c.step_rule.initial_lipschitz);
    c.step_rule.grow = s.number("grow", c.step_rule.grow);
    if (!(c.step_rule.grow > 1.0)) fail("solver.step_rule.grow", "must exceed 1");
    c.step_rule.relax = positive(s, "relax", c.step_rule.relax);
    if (c.step_rule.relax > 1.0) fail("solver.step_rule.relax", "must lie in (0, 1]");
    c.step_rule.max_backtracks = bounded_int(s, "max_backtracks", c.step_rule.max_backtracks, 1, 10000);
    s.done();
  }
  r.done();
  try {
    c.validate();
  } catch (const Error& e) {
    fail("solver", e.what());
  }
  return c;
}

json shape_json(const FieldShape& f) { return json{{"shape", f.shape}, {"amplitude", f.amplitude}}; }

json problem_json(const ProblemSpec& s) {
  json j;
  j["family"] = to_string(s.family);
  j["name"] = s.name;
  switch (s.family) {
    case Family::porous_media:
    case Family::p_laplacian: j["p"] = s.p; break;
    case Family::heat_multiplicative:
      j["q"] = s.q;
      j["theta"] = s.theta;
      j["max_outer"] = s.max_outer;
      j["fp_tol"] = s.fp_tol;
      break;
    case Family::heat_transport:
      j["a_field"] = s.a_field;
      j["a_amplitude"] = s.a_amplitude;
      break;
    case Family::divergence_form: j["beta"] = s.beta; break;
    case Family::ou_scalar: break;
  }
  j["u0"] = shape_json(s.u0);
  j["noise"] = shape_json(s.noise);
  if (s.family != Family::ou_scalar) {
    j["dim"] = s.dim;
    j["k"] = s.k;
  }
  j["paths"] = s.paths;
  j["steps"] = s.steps;
  j["horizon"] = s.horizon;
  return j;
}

}  // namespace

const std::vector<std::string>& criterion_keys() {
  static const std::vector<std::string> keys{"total_I_abs_max",          "fenchel_gap_max",     "empirical_order_min",
                                             "oracle_ratio_max",         "certificate_fraction_min",
                                             "picard_residual_max",      "proxy_spread_max"};
  return keys;
}

RunConfig parse_run_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail("config", std::string("malformed JSON: ") + e.what());
  }
  Reader r(j, "");
  if (!r.has("schema_version")) fail("schema_version", "missing");
  if (r.integer("schema_version", 0) != kSchemaVersion) {
    fail("schema_version", "unsupported (this build reads version " + std::to_string(kSchemaVersion) + ")");
  }
  RunConfig c;
  if (!r.has("problem")) fail("problem", "missing");
  c.problem = read_problem(r.raw("problem"));
  c.problem.seed = r.unsigned_integer("seed");
  if (r.has("solver")) c.solver = read_solver(r.raw("solver"));
  if (r.has("sweep")) {
    Reader s(r.raw("sweep"), "sweep");
    c.sweep.levels = bounded_int(s, "levels", 1, 1, 16);
    const std::string refine = s.string("refine", "N");
    if (refine == "N") {
      c.sweep = {c.sweep.levels, true, false};
    } else if (refine == "K") {
      c.sweep = {c.sweep.levels, false, true};
    } else if (refine == "NK") {
      c.sweep = {c.sweep.levels, true, true};
    } else {
      fail("sweep.refine", "expected 'N', 'K' or 'NK'");
    }
    s.done();
  }
  if (c.sweep.refine_k && c.problem.family == Family::ou_scalar) fail("sweep.refine", "ou_scalar has no grid to refine");
  c.output_dir = r.string("output_dir", c.output_dir);
  if (c.output_dir.empty()) fail("output_dir", "must not be empty");
  if (r.has("emit")) {
    Reader e(r.raw("emit"), "emit");
    c.emit.csv = e.boolean("csv", c.emit.csv);
    c.emit.json = e.boolean("json", c.emit.json);
    c.emit.replay_bundle = e.boolean("replay_bundle", c.emit.replay_bundle);
    e.done();
  }
  if (r.has("criteria")) {
    Reader k(r.raw("criteria"), "criteria");
    for (const auto& key : criterion_keys()) {
      if (k.has(key)) c.problem.pinned[key] = k.number(key, 0.0);
    }
    k.done();
  }
  r.done();
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot read config '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return parse_run_config(s.str());
}

std::string problem_to_json(const ProblemSpec& s) { return problem_json(s).dump(2); }

std::string run_config_to_json(const RunConfig& c) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["problem"] = problem_json(c.problem);
  j["seed"] = c.problem.seed;
  json solver;
  solver["optimizer"] = to_string(c.solver.optimizer);
  solver["init"] = c.solver.init == SolverConfig::Init::march ? "march" : "zero";
  solver["max_iters"] = c.solver.max_iters;
  solver["gap_tol"] = c.solver.gap_tol;
  solver["adapted_probes"] = c.solver.adapted_probes;
  if (!c.solver.lambda_schedule.empty()) solver["lambda_schedule"] = c.solver.lambda_schedule;
  solver["step_rule"] = json{{"initial_lipschitz", c.solver.step_rule.initial_lipschitz},
                             {"grow", c.solver.step_rule.grow},
                             {"relax", c.solver.step_rule.relax},
                             {"max_backtracks", c.solver.step_rule.max_backtracks}};
  j["solver"] = solver;
  j["sweep"] = json{{"levels", c.sweep.levels},
                    {"refine", c.sweep.refine_n && c.sweep.refine_k ? "NK" : (c.sweep.refine_k ? "K" : "N")}};
  j["output_dir"] = c.output_dir;
  j["emit"] = json{{"csv", c.emit.csv}, {"json", c.emit.json}, {"replay_bundle", c.emit.replay_bundle}};
  if (!c.problem.pinned.empty()) {
    json k = json::object();
    for (const auto& key : criterion_keys()) {
      auto it = c.problem.pinned.find(key);
      if (it != c.problem.pinned.end()) k[key] = it->second;
    }
    j["criteria"] = k;
  }
  return j.dump(2);
}

}  // namespace sdspde
