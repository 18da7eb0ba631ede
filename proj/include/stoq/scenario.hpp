#ifndef STOQ_SCENARIO_HPP
#define STOQ_SCENARIO_HPP

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "stoq/model.hpp"
#include "stoq/schrodinger.hpp"
#include "stoq/system.hpp"

namespace stoq {

/// Malformed document (not valid JSON). CLI exit code 2.
struct ScenarioParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Well-formed document violating the scenario schema or an invariant.
/// Carries the location (dotted key path) of the offending field.
/// CLI exit code 3.
struct ScenarioValidationError : std::runtime_error {
  std::string location;
  ScenarioValidationError(const std::string& loc, const std::string& what)
      : std::runtime_error(loc + ": " + what), location(loc) {}
};

enum class ScenarioKind {
  deviation_law,
  born_rule,
  fluctuation_scaling,
  classical_limit,
  information_balance,
  uncertainty,
  operator_averages,
  locality,
  solver_check,
};

inline ScenarioKind scenario_kind_from_string(const std::string& s) {
  if (s == "deviation-law") return ScenarioKind::deviation_law;
  if (s == "born-rule") return ScenarioKind::born_rule;
  if (s == "fluctuation-scaling") return ScenarioKind::fluctuation_scaling;
  if (s == "classical-limit") return ScenarioKind::classical_limit;
  if (s == "information-balance") return ScenarioKind::information_balance;
  if (s == "uncertainty") return ScenarioKind::uncertainty;
  if (s == "operator-averages") return ScenarioKind::operator_averages;
  if (s == "locality") return ScenarioKind::locality;
  if (s == "solver-check") return ScenarioKind::solver_check;
  throw ScenarioValidationError("kind", "unknown scenario kind '" + s + "'");
}

inline std::string to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::deviation_law: return "deviation-law";
    case ScenarioKind::born_rule: return "born-rule";
    case ScenarioKind::fluctuation_scaling: return "fluctuation-scaling";
    case ScenarioKind::classical_limit: return "classical-limit";
    case ScenarioKind::information_balance: return "information-balance";
    case ScenarioKind::uncertainty: return "uncertainty";
    case ScenarioKind::operator_averages: return "operator-averages";
    case ScenarioKind::locality: return "locality";
    case ScenarioKind::solver_check: return "solver-check";
  }
  return "?";
}

struct GridSpec {
  std::size_t n = 512;
  double qmin = -16.0;
  double extent = 32.0;
  Boundary boundary = Boundary::periodic;

  SpatialGrid make_1d() const {
    return SpatialGrid::make_1d(n, qmin, extent, boundary);
  }
};

/// One benchmark state on one configuration axis.
struct StateSpec {
  AnalyticKind kind = AnalyticKind::sho_ground;
  AnalyticParams params;

  WaveFunction realize(const SpatialGrid& g, double t = 0.0) const {
    return analytic_state(kind, params, t, g);
  }
};

struct ParticleSpec {
  Potential pot;
  double mass = 1.0;
  GridSpec grid;
  StateSpec state;
};

struct Scenario {
  std::string name;
  ScenarioKind kind = ScenarioKind::born_rule;
  double hbar = 1.0;
  int particles = 1;
  ParticleSpec part[2];

  PropagatorMethod method = PropagatorMethod::split_step;
  ModelParams model;
  std::size_t n = 1000;
  std::uint64_t master_seed = 1;
  std::vector<double> checkpoints;
  bool stratified = false;

  // kind-specific knobs
  std::vector<double> lambdas;      // deviation-law / classical-limit scales
  std::vector<double> dts;          // fluctuation-scaling
  double dt_refined = 0.0;          // born-rule refinement pass
  double duration = 1.0;            // fluctuation-scaling / solver-check T
  double dt_solver = 1e-3;          // field solver step where decoupled
  bool has_alt_v2 = false;
  Potential alt_v2;                 // locality potential swap
  std::vector<StateSpec> states;    // uncertainty / operator / solver lists
  std::vector<double> state_times;  // matching evaluation times

  nlohmann::json raw;  // verbatim echo for the manifest

  ClassicalSystem system() const {
    if (particles == 2)
      return ClassicalSystem::two_particle(part[0].pot, part[1].pot,
                                           part[0].mass, part[1].mass, hbar);
    return ClassicalSystem::one_particle(part[0].pot, part[0].mass, hbar);
  }
};

namespace scenario_detail {

using nlohmann::json;

inline const json& require(const json& j, const std::string& key,
                           const std::string& loc) {
  if (!j.is_object() || !j.contains(key))
    throw ScenarioValidationError(loc.empty() ? key : loc + "." + key,
                                  "missing required field");
  return j.at(key);
}

inline double num(const json& j, const std::string& key,
                  const std::string& loc) {
  const json& v = require(j, key, loc);
  if (!v.is_number())
    throw ScenarioValidationError(loc + "." + key, "expected a number");
  return v.get<double>();
}

inline double num_or(const json& j, const std::string& key, double dflt) {
  if (!j.is_object() || !j.contains(key)) return dflt;
  return j.at(key).get<double>();
}

inline std::string str(const json& j, const std::string& key,
                       const std::string& loc) {
  const json& v = require(j, key, loc);
  if (!v.is_string())
    throw ScenarioValidationError(loc + "." + key, "expected a string");
  return v.get<std::string>();
}

inline Potential parse_potential(const json& j, const std::string& loc) {
  const std::string kind = str(j, "kind", loc);
  const double center = num_or(j, "center", 0.0);
  if (kind == "free") return Potential::free_particle();
  if (kind == "sho")
    return Potential::harmonic(num_or(j, "omega", 1.0), center);
  if (kind == "quartic")
    return Potential::quartic_well(num_or(j, "a4", 1.0), num_or(j, "b2", 0.0),
                                   center);
  if (kind == "box") return Potential::box_well();
  throw ScenarioValidationError(loc + ".kind",
                                "unknown potential kind '" + kind + "'");
}

inline GridSpec parse_grid(const json& j, const std::string& loc) {
  GridSpec g;
  g.n = static_cast<std::size_t>(num(j, "n", loc));
  g.qmin = num(j, "qmin", loc);
  g.extent = num(j, "extent", loc);
  const std::string b = j.contains("boundary")
                            ? j.at("boundary").get<std::string>()
                            : std::string("periodic");
  if (b == "periodic")
    g.boundary = Boundary::periodic;
  else if (b == "hard-wall")
    g.boundary = Boundary::hard_wall;
  else
    throw ScenarioValidationError(loc + ".boundary",
                                  "unknown boundary '" + b + "'");
  if ((g.n & (g.n - 1)) != 0 || g.n < 16)
    throw ScenarioValidationError(loc + ".n",
                                  "grid size must be a power of two >= 16");
  return g;
}

inline StateSpec parse_state(const json& j, const std::string& loc,
                             double mass, double hbar) {
  StateSpec s;
  try {
    s.kind = analytic_kind_from_string(str(j, "kind", loc));
  } catch (const std::invalid_argument& e) {
    throw ScenarioValidationError(loc + ".kind", e.what());
  }
  s.params.mass = mass;
  s.params.hbar = hbar;
  s.params.omega = num_or(j, "omega", 1.0);
  s.params.sigma0 = num_or(j, "sigma0", 1.0);
  s.params.q0 = num_or(j, "q0", 0.0);
  s.params.p0 = num_or(j, "p0", 0.0);
  s.params.n = static_cast<int>(num_or(j, "n", 1));
  return s;
}

inline ParticleSpec parse_particle(const json& j, const std::string& loc,
                                   double hbar) {
  ParticleSpec p;
  p.mass = num_or(j, "mass", 1.0);
  if (!(p.mass > 0.0))
    throw ScenarioValidationError(loc + ".mass", "mass must be > 0");
  p.pot = parse_potential(require(j, "potential", loc), loc + ".potential");
  p.grid = parse_grid(require(j, "grid", loc), loc + ".grid");
  p.state =
      parse_state(require(j, "state", loc), loc + ".state", p.mass, hbar);
  if (p.state.kind == AnalyticKind::box_eigenstate &&
      p.grid.boundary != Boundary::hard_wall)
    throw ScenarioValidationError(loc + ".state",
                                  "box eigenstate needs a hard-wall grid");
  return p;
}

}  // namespace scenario_detail

/// Parse and validate a scenario document. Schema violations throw
/// ScenarioValidationError with the offending key path.
inline Scenario parse_scenario(const nlohmann::json& j) {
  using namespace scenario_detail;
  Scenario sc;
  sc.raw = j;
  sc.name = str(j, "name", "");
  sc.kind = scenario_kind_from_string(str(j, "kind", ""));
  sc.hbar = num_or(j, "hbar", 1.0);

  const bool needs_particle =
      sc.kind != ScenarioKind::deviation_law;
  if (needs_particle) {
    if (j.contains("particles")) {
      const auto& arr = j.at("particles");
      if (!arr.is_array() || arr.empty() || arr.size() > 2)
        throw ScenarioValidationError("particles",
                                      "expected an array of 1 or 2 entries");
      sc.particles = static_cast<int>(arr.size());
      for (int i = 0; i < sc.particles; ++i)
        sc.part[i] = parse_particle(
            arr.at(i), "particles[" + std::to_string(i) + "]", sc.hbar);
    } else {
      sc.particles = 1;
      sc.part[0] = parse_particle(require(j, "particle", ""), "particle",
                                  sc.hbar);
    }
  }
  if (sc.kind == ScenarioKind::locality && sc.particles != 2)
    throw ScenarioValidationError("particles",
                                  "locality scenarios need two particles");

  if (j.contains("solver")) {
    const auto& s = j.at("solver");
    const std::string m = s.contains("method")
                              ? s.at("method").get<std::string>()
                              : std::string("split-step");
    if (m == "split-step")
      sc.method = PropagatorMethod::split_step;
    else if (m == "crank-nicolson")
      sc.method = PropagatorMethod::crank_nicolson;
    else
      throw ScenarioValidationError("solver.method",
                                    "unknown method '" + m + "'");
    sc.dt_solver = num_or(s, "dt", 1e-3);
    if (!(sc.dt_solver > 0.0))
      throw ScenarioValidationError("solver.dt", "dt must be > 0");
  }

  if (j.contains("model")) {
    const auto& m = j.at("model");
    sc.model.lambda_mag = num_or(m, "lambda", 1.0);
    sc.model.dt = num_or(m, "dt", 1e-3);
    sc.model.tau_xi = num_or(m, "tau_xi", 10.0 * sc.model.dt);
    sc.model.tau_lambda = num_or(m, "tau_lambda", 10.0 * sc.model.tau_xi);
    try {
      sc.model.check();
    } catch (const std::invalid_argument& e) {
      throw ScenarioValidationError("model", e.what());
    }
  }

  const bool needs_ensemble = sc.kind == ScenarioKind::born_rule ||
                              sc.kind == ScenarioKind::fluctuation_scaling ||
                              sc.kind == ScenarioKind::classical_limit ||
                              sc.kind == ScenarioKind::uncertainty ||
                              sc.kind == ScenarioKind::operator_averages ||
                              sc.kind == ScenarioKind::locality ||
                              sc.kind == ScenarioKind::deviation_law;
  if (needs_ensemble) {
    const auto& e = require(j, "ensemble", "");
    sc.n = static_cast<std::size_t>(num(e, "n", "ensemble"));
    if (sc.n < 10)
      throw ScenarioValidationError("ensemble.n", "need at least 10 samples");
    if (!e.contains("seed"))
      throw ScenarioValidationError("ensemble.seed",
                                    "missing required field (seed mandatory)");
    sc.master_seed = e.at("seed").get<std::uint64_t>();
    sc.stratified = e.contains("stratified") && e.at("stratified").get<bool>();
  } else if (j.contains("ensemble") && j.at("ensemble").contains("seed")) {
    sc.master_seed = j.at("ensemble").at("seed").get<std::uint64_t>();
  }

  if (j.contains("checkpoints")) {
    sc.checkpoints = j.at("checkpoints").get<std::vector<double>>();
    for (std::size_t i = 0; i < sc.checkpoints.size(); ++i)
      if (!(sc.checkpoints[i] >= 0.0) ||
          (i > 0 && sc.checkpoints[i] <= sc.checkpoints[i - 1]))
        throw ScenarioValidationError("checkpoints",
                                      "times must be ascending and >= 0");
  }
  if (j.contains("lambdas")) {
    sc.lambdas = j.at("lambdas").get<std::vector<double>>();
    for (double l : sc.lambdas)
      if (!(l > 0.0))
        throw ScenarioValidationError("lambdas", "all entries must be > 0");
  }
  if (j.contains("dts")) {
    sc.dts = j.at("dts").get<std::vector<double>>();
    for (double d : sc.dts)
      if (!(d > 0.0))
        throw ScenarioValidationError("dts", "all entries must be > 0");
  }
  sc.dt_refined = num_or(j, "dt_refined", 0.0);
  sc.duration = num_or(j, "duration", 1.0);
  if (j.contains("alt_potential2")) {
    sc.has_alt_v2 = true;
    sc.alt_v2 = parse_potential(j.at("alt_potential2"), "alt_potential2");
  }
  if (j.contains("states")) {
    const auto& arr = j.at("states");
    if (!arr.is_array() || arr.empty())
      throw ScenarioValidationError("states", "expected a non-empty array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string loc = "states[" + std::to_string(i) + "]";
      sc.states.push_back(parse_state(arr.at(i), loc,
                                      needs_particle ? sc.part[0].mass : 1.0,
                                      sc.hbar));
      sc.state_times.push_back(num_or(arr.at(i), "t", 0.0));
    }
  }

  // kind-specific completeness
  switch (sc.kind) {
    case ScenarioKind::deviation_law:
      if (sc.lambdas.empty())
        throw ScenarioValidationError("lambdas",
                                      "deviation-law needs a lambda list");
      break;
    case ScenarioKind::born_rule:
    case ScenarioKind::classical_limit:
    case ScenarioKind::locality:
      if (sc.checkpoints.empty())
        throw ScenarioValidationError("checkpoints",
                                      "this scenario kind needs checkpoints");
      break;
    case ScenarioKind::fluctuation_scaling:
      if (sc.dts.size() < 3)
        throw ScenarioValidationError(
            "dts", "fluctuation-scaling needs >= 3 step sizes");
      break;
    case ScenarioKind::uncertainty:
    case ScenarioKind::operator_averages:
    case ScenarioKind::solver_check:
      if (sc.states.empty())
        throw ScenarioValidationError("states",
                                      "this scenario kind needs a state list");
      break;
    default:
      break;
  }
  if (sc.kind == ScenarioKind::classical_limit && sc.lambdas.empty())
    throw ScenarioValidationError("lambdas",
                                  "classical-limit needs lambda scales");
  if (sc.kind == ScenarioKind::locality && !sc.has_alt_v2)
    throw ScenarioValidationError("alt_potential2",
                                  "locality needs the swapped potential");
  return sc;
}

inline Scenario parse_scenario_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ScenarioParseError(e.what());
  }
  return parse_scenario(j);
}

// ---------------------------------------------------------------------------
// Bundled scenarios
// ---------------------------------------------------------------------------

inline const std::vector<std::pair<std::string, std::string>>&
bundled_scenarios() {
  static const std::vector<std::pair<std::string, std::string>> v = {
      {"deviation-law", R"({
  "name": "deviation-law",
  "kind": "deviation-law",
  "lambdas": [0.5, 1.0, 2.0],
  "ensemble": {"n": 1000000, "seed": 20260815}
})"},
      {"sho-born-rule", R"({
  "name": "sho-born-rule",
  "kind": "born-rule",
  "particle": {
    "mass": 1.0,
    "potential": {"kind": "sho", "omega": 1.0},
    "grid": {"n": 512, "qmin": -16.0, "extent": 32.0},
    "state": {"kind": "sho-coherent", "q0": 1.0, "p0": 0.0}
  },
  "model": {"lambda": 1.0, "dt": 1e-3},
  "dt_refined": 1e-4,
  "checkpoints": [1.5707963267948966, 3.141592653589793, 6.283185307179586],
  "ensemble": {"n": 10000, "seed": 42}
})"},
      {"born-rule-quick", R"({
  "name": "born-rule-quick",
  "kind": "born-rule",
  "particle": {
    "mass": 1.0,
    "potential": {"kind": "sho", "omega": 1.0},
    "grid": {"n": 256, "qmin": -12.8, "extent": 25.6},
    "state": {"kind": "sho-coherent", "q0": 1.0, "p0": 0.0}
  },
  "model": {"lambda": 1.0, "dt": 1e-3},
  "checkpoints": [0.5],
  "ensemble": {"n": 500, "seed": 7}
})"},
      {"fluctuation-scaling", R"({
  "name": "fluctuation-scaling",
  "kind": "fluctuation-scaling",
  "particle": {
    "mass": 1.0,
    "potential": {"kind": "sho", "omega": 1.0},
    "grid": {"n": 512, "qmin": -16.0, "extent": 32.0},
    "state": {"kind": "sho-coherent", "q0": 1.0, "p0": 0.0}
  },
  "model": {"lambda": 1.0, "dt": 1e-3},
  "dts": [1e-2, 1e-3, 1e-4],
  "duration": 1.0,
  "ensemble": {"n": 400, "seed": 99}
})"},
      {"classical-limit", R"({
  "name": "classical-limit",
  "kind": "classical-limit",
  "particle": {
    "mass": 1.0,
    "potential": {"kind": "sho", "omega": 1.0},
    "grid": {"n": 512, "qmin": -16.0, "extent": 32.0},
    "state": {"kind": "sho-coherent", "q0": 2.0, "p0": 0.0}
  },
  "model": {"lambda": 1.0, "dt": 1e-3},
  "lambdas": [0.1, 0.01, 0.001],
  "checkpoints": [0.62831853071795862, 1.2566370614359172, 1.8849555921538759,
                  2.5132741228718345, 3.1415926535897931, 3.7699111843077517,
                  4.3982297150257104, 5.026548245743669, 5.6548667764616276,
                  6.2831853071795862],
  "ensemble": {"n": 5000, "seed": 17, "stratified": true}
})"},
      {"information-balance", R"({
  "name": "information-balance",
  "kind": "information-balance",
  "particle": {
    "mass": 1.0,
    "potential": {"kind": "sho", "omega": 1.0},
    "grid": {"n": 512, "qmin": -12.8, "extent": 25.6},
    "state": {"kind": "sho-coherent", "q0": 1.0, "p0": 0.0}
  },
  "solver": {"method": "split-step", "dt": 1e-4},
  "model": {"lambda": 1.0, "dt": 1e-3},
  "duration": 0.3,
  "ensemble": {"n": 10, "seed": 1}
})"},
      {"uncertainty-sho", R"({
  "name": "uncertainty-sho",
  "kind": "uncertainty",
  "particle": {
    "mass": 1.0,
    "potential": {"kind": "sho", "omega": 1.0},
    "grid": {"n": 512, "qmin": -16.0, "extent": 32.0},
    "state": {"kind": "sho-ground"}
  },
  "model": {"lambda": 1.0, "dt": 1e-3},
  "states": [
    {"kind": "sho-ground", "t": 0.0},
    {"kind": "free-gaussian", "sigma0": 1.0, "t": 0.0},
    {"kind": "free-gaussian", "sigma0": 1.0, "t": 1.0},
    {"kind": "free-gaussian", "sigma0": 1.0, "t": 2.0},
    {"kind": "box-eigenstate", "n": 1, "t": 0.0},
    {"kind": "box-eigenstate", "n": 2, "t": 0.0}
  ],
  "ensemble": {"n": 100000, "seed": 271828}
})"},
      {"operator-averages", R"({
  "name": "operator-averages",
  "kind": "operator-averages",
  "particle": {
    "mass": 1.0,
    "potential": {"kind": "sho", "omega": 1.0},
    "grid": {"n": 512, "qmin": -16.0, "extent": 32.0},
    "state": {"kind": "sho-ground"}
  },
  "model": {"lambda": 1.0, "dt": 1e-3},
  "states": [
    {"kind": "sho-ground", "t": 0.0},
    {"kind": "sho-coherent", "q0": 1.0, "p0": 1.0, "t": 0.0},
    {"kind": "free-gaussian", "sigma0": 1.0, "p0": 0.5, "t": 1.0}
  ],
  "ensemble": {"n": 100000, "seed": 314159}
})"},
      {"locality-product", R"({
  "name": "locality-product",
  "kind": "locality",
  "particles": [
    {
      "mass": 1.0,
      "potential": {"kind": "sho", "omega": 1.0},
      "grid": {"n": 256, "qmin": -12.8, "extent": 25.6},
      "state": {"kind": "sho-coherent", "q0": 1.0, "p0": 0.0}
    },
    {
      "mass": 1.0,
      "potential": {"kind": "sho", "omega": 1.0},
      "grid": {"n": 256, "qmin": -12.8, "extent": 25.6},
      "state": {"kind": "sho-ground"}
    }
  ],
  "alt_potential2": {"kind": "quartic", "a4": 0.25},
  "model": {"lambda": 1.0, "dt": 2e-3},
  "checkpoints": [0.5, 1.0, 2.0],
  "ensemble": {"n": 4000, "seed": 1618}
})"},
      {"solver-cross-validation", R"({
  "name": "solver-cross-validation",
  "kind": "solver-check",
  "particle": {
    "mass": 1.0,
    "potential": {"kind": "sho", "omega": 1.0},
    "grid": {"n": 2048, "qmin": -16.0, "extent": 32.0},
    "state": {"kind": "sho-ground"}
  },
  "solver": {"method": "split-step", "dt": 1e-4},
  "duration": 1.0,
  "states": [
    {"kind": "sho-ground", "t": 0.0},
    {"kind": "sho-coherent", "q0": 1.0, "p0": 1.0, "t": 0.0},
    {"kind": "free-gaussian", "sigma0": 1.0, "p0": 0.0, "t": 0.0}
  ],
  "ensemble": {"n": 10, "seed": 1}
})"},
  };
  return v;
}

inline std::vector<std::string> list_scenarios() {
  std::vector<std::string> names;
  for (const auto& [n, _] : bundled_scenarios()) names.push_back(n);
  return names;
}

/// Resolve a CLI argument: bundled scenario name first, file path second.
inline Scenario load_scenario(const std::string& arg) {
  for (const auto& [n, text] : bundled_scenarios())
    if (n == arg) return parse_scenario_text(text);
  std::ifstream in(arg);
  if (!in)
    throw ScenarioParseError("cannot open scenario '" + arg +
                             "' (not a bundled name or readable file)");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario_text(ss.str());
}

/// Dry-run validation report: "ok" plus the resolved parameter echo.
inline std::string validate_report(const Scenario& sc) {
  std::ostringstream os;
  os << "ok: scenario '" << sc.name << "' (" << to_string(sc.kind) << ")\n";
  os << "resolved parameters:\n" << sc.raw.dump(2) << "\n";
  return os.str();
}

}  // namespace stoq

#endif  // STOQ_SCENARIO_HPP
