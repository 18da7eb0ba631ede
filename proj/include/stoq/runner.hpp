#ifndef STOQ_RUNNER_HPP
#define STOQ_RUNNER_HPP

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stoq/classical.hpp"
#include "stoq/locality.hpp"
#include "stoq/model.hpp"
#include "stoq/scenario.hpp"
#include "stoq/stats.hpp"

namespace stoq {

inline constexpr const char* kEngineVersion = "1.0.0";

struct Verdict {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  double z = std::numeric_limits<double>::quiet_NaN();  // when statistical
};

struct FileEntry {
  std::string name;     // relative to the output directory
  std::string columns;  // documented column list
};

struct RunManifest {
  nlohmann::json scenario_echo;
  std::string engine_version = kEngineVersion;
  std::string compiler = __VERSION__;
  std::map<std::string, double> wall_times_s;
  std::vector<Verdict> verdicts;
  std::vector<FileEntry> files;
  std::string rng_note =
      "substreams derived from (master_seed, trajectory_id, key) via "
      "splitmix64-seeded xoroshiro128+; keys 0/1 position draw per particle, "
      "2/3 sign process per particle";
  std::string diagnostics;  // non-empty when the run aborted

  bool all_pass() const {
    if (!diagnostics.empty()) return false;
    for (const auto& v : verdicts)
      if (!v.pass) return false;
    return !verdicts.empty();
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["scenario"] = scenario_echo;
    j["versions"] = {{"engine", engine_version}, {"compiler", compiler}};
    j["rng"] = rng_note;
    j["wall_times_s"] = wall_times_s;
    auto verdict_arr = nlohmann::json::array();
    for (const auto& v : verdicts) {
      nlohmann::json e = {{"name", v.name},
                          {"value", v.value},
                          {"tolerance", v.tolerance},
                          {"pass", v.pass}};
      if (std::isfinite(v.z)) e["z"] = v.z;
      verdict_arr.push_back(e);
    }
    j["verdicts"] = verdict_arr;
    auto file_arr = nlohmann::json::array();
    for (const auto& f : files)
      file_arr.push_back({{"name", f.name}, {"columns", f.columns}});
    j["files"] = file_arr;
    if (!diagnostics.empty()) j["diagnostics"] = diagnostics;
    j["all_pass"] = all_pass();
    return j;
  }
};

struct RunOptions {
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  int threads = 1;
};

namespace runner_detail {

/// All numeric output goes through one fixed format so reruns are
/// byte-identical.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::string& header)
      : out_(path) {
    if (!out_) throw std::runtime_error("cannot open " + path.string());
    out_ << header << "\n";
  }

  void row(std::initializer_list<double> vals) {
    bool first = true;
    for (double v : vals) {
      if (!first) out_ << ',';
      first = false;
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out_ << buf;
    }
    out_ << "\n";
  }

  void row(const std::string& label, std::initializer_list<double> vals) {
    out_ << label;
    for (double v : vals) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), ",%.17g", v);
      out_ << buf;
    }
    out_ << "\n";
  }

 private:
  std::ofstream out_;
};

class Timer {
 public:
  Timer() : t0_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         t0_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point t0_;
};

struct Ctx {
  const Scenario& sc;
  const RunOptions& opt;
  RunManifest& man;
  std::filesystem::path dir;
  std::uint64_t seed;

  void verdict(const std::string& name, double value, double tol, bool pass,
               double z = std::numeric_limits<double>::quiet_NaN()) {
    man.verdicts.push_back({name, value, tol, pass, z});
  }
  void file(const std::string& name, const std::string& cols) {
    man.files.push_back({name, cols});
  }
};

/// Draw n Born positions (1D) plus fresh signs from dedicated substreams.
struct StateSamples {
  std::vector<std::array<double, 2>> q;
  std::vector<std::array<std::int8_t, 2>> sign;
};

inline StateSamples draw_state_samples(const WaveFunction& psi, std::size_t n,
                                       std::uint64_t seed,
                                       std::uint64_t state_key) {
  RealField omega(psi.grid());
  for (std::size_t k = 0; k < omega.v.size(); ++k)
    omega.v[k] = std::norm(psi.field.v[k]);
  const model_detail::BornSampler sampler(omega);
  StateSamples s;
  s.q.resize(n);
  s.sign.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    Stream pos(seed, i, 100 + state_key);
    Stream sgn(seed, i, 200 + state_key);
    s.q[i][0] = model_detail::BornSampler::invert(sampler.marg1_cdf,
                                                  pos.next_double(),
                                                  psi.grid(), 0);
    const std::int8_t sg = static_cast<std::int8_t>(sgn.next_sign());
    s.sign[i] = {sg, sg};
  }
  return s;
}

inline SpatialGrid state_grid(const Scenario& sc, const StateSpec& st) {
  if (st.kind == AnalyticKind::box_eigenstate)
    return SpatialGrid::make_1d(512, 0.0, 2.0 * 3.141592653589793,
                                Boundary::hard_wall);
  return sc.part[0].grid.make_1d();
}

inline std::string state_label(const StateSpec& st, double t) {
  std::string base;
  switch (st.kind) {
    case AnalyticKind::sho_ground: base = "sho-ground"; break;
    case AnalyticKind::sho_coherent: base = "sho-coherent"; break;
    case AnalyticKind::free_gaussian: base = "free-gaussian"; break;
    case AnalyticKind::box_eigenstate:
      base = "box-n" + std::to_string(st.params.n);
      break;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "@t=%g", t);
  return base + buf;
}

// ---------------------------------------------------------------------------
// Scenario kind implementations
// ---------------------------------------------------------------------------

inline void run_deviation_law(Ctx& cx) {
  CsvWriter csv(cx.dir / "deviation_summary.csv",
                "lambda,mean,expected_mean,mean_rel_err,ks,ks_band_99");
  cx.file("deviation_summary.csv",
          "lambda,mean,expected_mean,mean_rel_err,ks,ks_band_99");
  for (std::size_t li = 0; li < cx.sc.lambdas.size(); ++li) {
    const double lam = cx.sc.lambdas[li];
    Stream rng(cx.seed, li, 500);
    std::vector<double> mag(cx.sc.n);
    for (auto& x : mag) x = std::abs(sample_deviation(lam, rng).value);
    const double m = mean(mag);
    const double expect = lam / 2.0;
    const double rel = std::abs(m - expect) / expect;
    const double rate = 2.0 / lam;
    const double ks = ks_distance_cdf(mag, [rate](double x) {
      return x <= 0.0 ? 0.0 : 1.0 - std::exp(-rate * x);
    });
    const double band = ks_critical(cx.sc.n, 0.01);
    csv.row({lam, m, expect, rel, ks, band});
    const std::string tag = "lambda=" + std::to_string(lam);
    cx.verdict("deviation-mean " + tag, rel, 0.01, rel < 0.01);
    cx.verdict("deviation-ks " + tag, ks, band, ks < band);
  }
}

inline void run_born_rule(Ctx& cx) {
  const Scenario& sc = cx.sc;
  const SpatialGrid g = sc.part[0].grid.make_1d();
  const WaveFunction psi0 = sc.part[0].state.realize(g);
  const ClassicalSystem sys = sc.system();

  CsvWriter ks_csv(cx.dir / "ks_summary.csv", "dt,t,ks,ks_band_2x95");
  cx.file("ks_summary.csv", "dt,t,ks,ks_band_2x95");
  CsvWriter q_csv(cx.dir / "positions.csv", "dt,t,q,sign");
  cx.file("positions.csv", "dt,t,q,sign");

  auto run_at = [&](double dt) {
    ModelParams mp = sc.model;
    mp.dt = dt;
    mp.tau_xi = std::max(mp.tau_xi, 10.0 * dt);
    mp.tau_lambda = std::max(mp.tau_lambda, 10.0 * mp.tau_xi);
    EnsembleConfig ec;
    ec.n = sc.n;
    ec.master_seed = cx.seed;
    ec.checkpoints = sc.checkpoints;
    ec.threads = cx.opt.threads;
    const EnsembleResult res = evolve_ensemble(psi0, sys, mp, ec);
    std::vector<double> ks_per_cp;
    for (const auto& cp : res.checkpoints) {
      RealField omega(g);
      for (std::size_t k = 0; k < g.size(); ++k)
        omega.v[k] = std::norm(cp.psi.field.v[k]);
      std::vector<double> q(sc.n);
      for (std::size_t i = 0; i < sc.n; ++i) {
        q[i] = cp.q[i][0];
        q_csv.row({dt, cp.t, q[i], static_cast<double>(cp.sign[i][0])});
      }
      const double ks = ks_distance(q, omega);
      const double band = 2.0 * ks_critical(sc.n, 0.05);
      ks_csv.row({dt, cp.t, ks, band});
      ks_per_cp.push_back(ks);
      char buf[64];
      std::snprintf(buf, sizeof(buf), "born-ks dt=%g t=%g", dt, cp.t);
      if (dt == sc.model.dt) cx.verdict(buf, ks, band, ks < band);
    }
    return ks_per_cp;
  };

  const std::vector<double> coarse = run_at(sc.model.dt);
  if (sc.dt_refined > 0.0) {
    const std::vector<double> fine = run_at(sc.dt_refined);
    // the overall statistic is the worst checkpoint; per-checkpoint values
    // differ at pure sampling-noise level between the two passes
    const double worst_coarse = *std::max_element(coarse.begin(), coarse.end());
    const double worst_fine = *std::max_element(fine.begin(), fine.end());
    cx.verdict("born-ks refined not increased", worst_fine - worst_coarse, 0.0,
               worst_fine <= worst_coarse);
  }
}

inline void run_fluctuation_scaling(Ctx& cx) {
  const Scenario& sc = cx.sc;
  const SpatialGrid g = sc.part[0].grid.make_1d();
  const WaveFunction psi0 = sc.part[0].state.realize(g);
  const ClassicalSystem sys = sc.system();

  // shared initial positions: common random numbers across step sizes
  RealField omega(g);
  for (std::size_t k = 0; k < g.size(); ++k)
    omega.v[k] = std::norm(psi0.field.v[k]);
  const model_detail::BornSampler sampler(omega);
  std::vector<std::array<double, 2>> q0(sc.n);
  for (std::size_t i = 0; i < sc.n; ++i) {
    Stream s1(cx.seed, i, model_detail::kKeyPosition);
    Stream s2(cx.seed, i, model_detail::kKeyPosition + 1);
    q0[i] = sampler.draw(s1, s2);
  }

  auto ensemble_at = [&](double dt, bool osmotic) {
    ModelParams mp = sc.model;
    mp.dt = dt;
    mp.tau_xi = 10.0 * dt;
    mp.tau_lambda = 100.0 * dt;
    mp.osmotic_enabled = osmotic;
    EnsembleConfig ec;
    ec.n = sc.n;
    ec.master_seed = cx.seed;
    ec.checkpoints = {sc.duration};
    ec.threads = cx.opt.threads;
    ec.initial_positions = q0;
    return evolve_ensemble(psi0, sys, mp, ec);
  };

  double dt_min = sc.dts[0];
  for (double d : sc.dts) dt_min = std::min(dt_min, d);
  const EnsembleResult ref = ensemble_at(dt_min, false);  // Bohmian drift

  CsvWriter csv(cx.dir / "scaling.csv", "dt,rms_deviation");
  cx.file("scaling.csv", "dt,rms_deviation");
  std::vector<double> rms_list;
  for (double dt : sc.dts) {
    const EnsembleResult run = ensemble_at(dt, true);
    double s2 = 0.0;
    for (std::size_t i = 0; i < sc.n; ++i) {
      const double d =
          run.checkpoints.back().q[i][0] - ref.checkpoints.back().q[i][0];
      s2 += d * d;
    }
    const double rms = std::sqrt(s2 / static_cast<double>(sc.n));
    rms_list.push_back(rms);
    csv.row({dt, rms});
  }
  const PowerLawFit fit = fit_scaling(sc.dts, rms_list);
  cx.verdict("fluctuation-scaling exponent", fit.exponent, 0.1,
             std::abs(fit.exponent - 0.5) < 0.1);
}

inline void run_classical_limit(Ctx& cx) {
  const Scenario& sc = cx.sc;
  const SpatialGrid g = sc.part[0].grid.make_1d();
  const WaveFunction psi0 = sc.part[0].state.realize(g);
  const ClassicalSystem sys = sc.system();

  // classical oracle from the symplectic integrator, dense steps
  const double dt_cl = 1e-4;
  const ClassicalTrajectory oracle = integrate_hamilton(
      {sc.part[0].state.params.q0, 0.0}, {sc.part[0].state.params.p0, 0.0},
      sys, dt_cl, sc.checkpoints.back() + dt_cl);
  auto oracle_q = [&](double t) {
    const auto k = static_cast<std::size_t>(std::llround(t / dt_cl));
    return oracle.q[std::min(k, oracle.q.size() - 1)][0];
  };

  CsvWriter csv(cx.dir / "classical_deviation.csv",
                "lambda,t,mean_q,classical_q,abs_dev");
  cx.file("classical_deviation.csv", "lambda,t,mean_q,classical_q,abs_dev");
  std::vector<double> maxdev;
  for (double lam : sc.lambdas) {
    ModelParams mp = sc.model;
    mp.lambda_mag = lam;
    EnsembleConfig ec;
    ec.n = sc.n;
    ec.master_seed = cx.seed;
    ec.checkpoints = sc.checkpoints;
    ec.stratified_init = sc.stratified;
    ec.threads = cx.opt.threads;
    const EnsembleResult res = evolve_ensemble(psi0, sys, mp, ec);
    double md = 0.0;
    for (const auto& cp : res.checkpoints) {
      double m = 0.0;
      for (const auto& q : cp.q) m += q[0];
      m /= static_cast<double>(sc.n);
      const double qc = oracle_q(cp.t);
      md = std::max(md, std::abs(m - qc));
      csv.row({lam, cp.t, m, qc, std::abs(m - qc)});
    }
    maxdev.push_back(md);
  }
  double worst_increase = 0.0;
  for (std::size_t i = 1; i < maxdev.size(); ++i)
    worst_increase = std::max(worst_increase, maxdev[i] - maxdev[i - 1]);
  cx.verdict("classical-limit monotone decrease", worst_increase, 0.0,
             worst_increase <= 0.0);
  cx.verdict("classical-limit deviation at smallest lambda", maxdev.back(),
             1e-2, maxdev.back() < 1e-2);
}

inline void run_information_balance(Ctx& cx) {
  const Scenario& sc = cx.sc;
  const SpatialGrid g = sc.part[0].grid.make_1d();
  const ClassicalSystem sys = sc.system();

  CsvWriter csv(cx.dir / "residuals.csv",
                "state_idx,dt_solver,time_residual_sign_avg,spatial_residual");
  cx.file("residuals.csv",
          "state_idx,dt_solver,time_residual_sign_avg,spatial_residual");

  const StateSpec ground{AnalyticKind::sho_ground, sc.part[0].state.params};
  const StateSpec states[2] = {ground, sc.part[0].state};

  for (int si = 0; si < 2; ++si) {
    auto residual_at = [&](double dt) {
      PropagatorConfig cfg;
      cfg.method = sc.method;
      cfg.dt_solver = dt;
      cfg.steps = static_cast<std::size_t>(std::llround(sc.duration / dt)) + 1;
      std::deque<WaveFunction> last3;
      propagate(states[si].realize(g), sys, cfg,
                [&](const WaveFunction& p) {
                  last3.push_back(p);
                  if (last3.size() > 3) last3.pop_front();
                });
      const RealField r = balance_time_residual_sign_avg(
          last3[0], last3[1], last3[2], sc.model, sys);
      return max_abs(r);
    };
    const double r0 = residual_at(sc.dt_solver);
    // The O(dt^2) truncation error is only resolvable above the roundoff
    // floor of the log-density time difference, so the refinement order is
    // measured on coarser rungs; a residual already at the floor (orders
    // below tolerance) counts as converged.
    const double rc = residual_at(80.0 * sc.dt_solver);
    const double rf = residual_at(40.0 * sc.dt_solver);
    const WaveFunction psi_end = [&] {
      PropagatorConfig cfg;
      cfg.method = sc.method;
      cfg.dt_solver = sc.dt_solver;
      cfg.steps =
          static_cast<std::size_t>(std::llround(sc.duration / sc.dt_solver));
      return propagate(states[si].realize(g), sys, cfg);
    }();
    const double sp =
        std::max(max_abs(balance_spatial_residual(psi_end, +1, sc.model, sys)),
                 max_abs(balance_spatial_residual(psi_end, -1, sc.model, sys)));
    csv.row({static_cast<double>(si), sc.dt_solver, r0, sp});
    csv.row({static_cast<double>(si), 80.0 * sc.dt_solver, rc, sp});
    csv.row({static_cast<double>(si), 40.0 * sc.dt_solver, rf, sp});
    const std::string tag = si == 0 ? "ground" : "coherent";
    cx.verdict("balance time residual (" + tag + ")", r0, 1e-4, r0 < 1e-4);
    const double ratio = rf > 0.0 ? rc / rf : 1e9;
    cx.verdict("balance residual refinement ratio (" + tag + ")", ratio, 2.5,
               rc < 1e-6 || ratio > 2.5);
    cx.verdict("balance spatial residual (" + tag + ")", sp, 1e-12,
               sp < 1e-12);
  }
}

inline void run_uncertainty(Ctx& cx) {
  const Scenario& sc = cx.sc;
  const ClassicalSystem sys = sc.system();
  CsvWriter csv(cx.dir / "uncertainty.csv",
                "state_idx,t,sigma_q,sigma_p,product,bound,stat_err");
  cx.file("uncertainty.csv",
          "state_idx,t,sigma_q,sigma_p,product,bound,stat_err");
  for (std::size_t si = 0; si < sc.states.size(); ++si) {
    const StateSpec& st = sc.states[si];
    const double t = sc.state_times[si];
    const SpatialGrid g = state_grid(sc, st);
    const WaveFunction psi = st.realize(g, t);
    const FieldFrame fr = build_frame(psi, sys);
    const StateSamples smp = draw_state_samples(psi, sc.n, cx.seed, si);
    const MomentumSampleResult ps =
        momentum_samples(smp.q, smp.sign, fr, sc.model, sys);
    std::vector<double> q;
    q.reserve(sc.n);
    for (const auto& x : smp.q) q.push_back(x[0]);
    const UncertaintyResult u = uncertainty_product(q, ps.p);
    const double bound = 0.5 * sys.hbar * (1.0 - 3.0 * u.stat_err);
    csv.row({static_cast<double>(si), t, u.sigma_q, u.sigma_p, u.product,
             bound, u.stat_err});
    const std::string tag = state_label(st, t);
    if (st.kind == AnalyticKind::sho_ground)
      cx.verdict("uncertainty equality " + tag,
                 std::abs(u.product - 0.5) / 0.5, 0.02,
                 std::abs(u.product - 0.5) < 0.01);
    cx.verdict("uncertainty bound " + tag, u.product, bound,
               u.product >= bound);
  }
}

inline void run_operator_averages(Ctx& cx) {
  const Scenario& sc = cx.sc;
  const ClassicalSystem sys = sc.system();
  CsvWriter csv(cx.dir / "expectations.csv",
                "state_idx,observable,model_avg,operator_avg,z,stat_err");
  cx.file("expectations.csv",
          "state_idx,observable,model_avg,operator_avg,z,stat_err");
  const Observable obs[3] = {Observable::p, Observable::p2, Observable::H};
  const char* obs_name[3] = {"p", "p2", "H"};
  for (std::size_t si = 0; si < sc.states.size(); ++si) {
    const StateSpec& st = sc.states[si];
    const double t = sc.state_times[si];
    const SpatialGrid g = state_grid(sc, st);
    const WaveFunction psi = st.realize(g, t);
    const FieldFrame fr = build_frame(psi, sys);
    const StateSamples smp = draw_state_samples(psi, sc.n, cx.seed, si);
    const MomentumSampleResult ps =
        momentum_samples(smp.q, smp.sign, fr, sc.model, sys);
    for (int oi = 0; oi < 3; ++oi) {
      const ExpectationComparison c =
          expectation_compare(smp.q, ps.p, psi, sys, obs[oi]);
      csv.row({static_cast<double>(si), static_cast<double>(oi), c.model,
               c.op, c.z, c.stat_err});
      cx.verdict("operator-average " + state_label(st, t) + " <" +
                     obs_name[oi] + ">",
                 std::abs(c.z), 3.0, std::abs(c.z) < 3.0, c.z);
    }
  }
}

inline void run_locality(Ctx& cx) {
  const Scenario& sc = cx.sc;
  const ClassicalSystem s1 =
      ClassicalSystem::one_particle(sc.part[0].pot, sc.part[0].mass, sc.hbar);
  const ClassicalSystem s2 =
      ClassicalSystem::one_particle(sc.part[1].pot, sc.part[1].mass, sc.hbar);
  const WaveFunction a = sc.part[0].state.realize(sc.part[0].grid.make_1d());
  const WaveFunction b = sc.part[1].state.realize(sc.part[1].grid.make_1d());
  const ProductScenario ps = ProductScenario::make(s1, a, s2, b);

  const MarginalInvarianceReport mi = marginal_invariance_test(
      ps, sc.alt_v2, sc.model, sc.n, cx.seed, cx.seed, sc.checkpoints,
      cx.opt.threads);
  CsvWriter ks_csv(cx.dir / "locality_ks.csv", "t,ks,ks_band_99");
  cx.file("locality_ks.csv", "t,ks,ks_band_99");
  for (std::size_t i = 0; i < mi.ks.size(); ++i) {
    ks_csv.row({mi.checkpoint_times[i], mi.ks[i], mi.ks_band});
    char buf[64];
    std::snprintf(buf, sizeof(buf), "marginal-invariance ks t=%g",
                  mi.checkpoint_times[i]);
    cx.verdict(buf, mi.ks[i], mi.ks_band, mi.ks[i] < mi.ks_band);
  }

  const std::size_t n_dev = 1000000;
  const SeparabilityReport sep =
      check_transition_separability(ps, sc.model.lambda_mag, n_dev, cx.seed);
  CsvWriter sep_csv(cx.dir / "separability.csv",
                    "abs_corr,corr_band,mean1,mean2,ks1,ks2,ks_band");
  cx.file("separability.csv", "abs_corr,corr_band,mean1,mean2,ks1,ks2,ks_band");
  sep_csv.row({sep.correlation_abs, sep.correlation_band, sep.marginal_mean[0],
               sep.marginal_mean[1], sep.marginal_ks[0], sep.marginal_ks[1],
               sep.ks_band});
  cx.verdict("deviation independence |r|", sep.correlation_abs,
             sep.correlation_band, sep.correlation_abs < sep.correlation_band);
  cx.verdict("deviation marginals", sep.pass ? 0.0 : 1.0, 0.5, sep.pass);

  const DecompositionReport dec =
      check_decomposition(ps, 0.5, 1e-3, sc.model.lambda_mag, cx.seed);
  CsvWriter dec_csv(cx.dir / "decomposition.csv",
                    "theta_defect,grad_s_defect,di_defect,sigma_defect");
  cx.file("decomposition.csv",
          "theta_defect,grad_s_defect,di_defect,sigma_defect");
  dec_csv.row({dec.theta_defect, dec.grad_s_defect, dec.di_defect,
               dec.sigma_defect});
  cx.verdict("decomposition additivity",
             std::max({dec.theta_defect, dec.grad_s_defect, dec.di_defect}),
             1e-6, dec.pass);
}

inline void run_solver_check(Ctx& cx) {
  const Scenario& sc = cx.sc;
  const SpatialGrid g = sc.part[0].grid.make_1d();
  const ClassicalSystem sys = sc.system();
  CsvWriter csv(cx.dir / "solver_check.csv",
                "state_idx,l2_disagreement,norm_drift_split,norm_drift_cn");
  cx.file("solver_check.csv",
          "state_idx,l2_disagreement,norm_drift_split,norm_drift_cn");
  for (std::size_t si = 0; si < sc.states.size(); ++si) {
    const WaveFunction psi0 = sc.states[si].realize(g);
    PropagatorConfig cfg;
    cfg.dt_solver = sc.dt_solver;
    cfg.steps =
        static_cast<std::size_t>(std::llround(sc.duration / sc.dt_solver));
    cfg.method = PropagatorMethod::split_step;
    const WaveFunction ss = propagate(psi0, sys, cfg);
    cfg.method = PropagatorMethod::crank_nicolson;
    const WaveFunction cn = propagate(psi0, sys, cfg);
    const double l2 = l2_distance(ss, cn);
    const double drift_ss = std::abs(ss.norm_sq() - 1.0);
    const double drift_cn = std::abs(cn.norm_sq() - 1.0);
    csv.row({static_cast<double>(si), l2, drift_ss, drift_cn});
    const std::string tag = state_label(sc.states[si], 0.0);
    cx.verdict("solver l2 disagreement " + tag, l2, 1e-5, l2 < 1e-5);
    cx.verdict("norm conservation " + tag, std::max(drift_ss, drift_cn), 1e-8,
               std::max(drift_ss, drift_cn) < 1e-8);
  }
}

}  // namespace runner_detail

/// Execute a validated scenario, writing data files and the manifest into
/// the output directory. The manifest is emitted even when the run aborts
/// (with diagnostics attached); exceptions are rethrown for the caller's
/// exit-code mapping.
inline RunManifest run_scenario(const Scenario& sc, const RunOptions& opt) {
  using namespace runner_detail;
  RunManifest man;
  man.scenario_echo = sc.raw;

  std::filesystem::path dir =
      opt.out_dir.empty() ? std::filesystem::path(".")
                          : std::filesystem::path(opt.out_dir);
  std::filesystem::create_directories(dir);

  Ctx cx{sc, opt, man, dir, opt.seed.value_or(sc.master_seed)};
  man.scenario_echo["resolved_seed"] = cx.seed;

  Timer total;
  try {
    Timer phase;
    switch (sc.kind) {
      case ScenarioKind::deviation_law: run_deviation_law(cx); break;
      case ScenarioKind::born_rule: run_born_rule(cx); break;
      case ScenarioKind::fluctuation_scaling:
        run_fluctuation_scaling(cx);
        break;
      case ScenarioKind::classical_limit: run_classical_limit(cx); break;
      case ScenarioKind::information_balance:
        run_information_balance(cx);
        break;
      case ScenarioKind::uncertainty: run_uncertainty(cx); break;
      case ScenarioKind::operator_averages: run_operator_averages(cx); break;
      case ScenarioKind::locality: run_locality(cx); break;
      case ScenarioKind::solver_check: run_solver_check(cx); break;
    }
    man.wall_times_s["compute"] = phase.seconds();
  } catch (const std::exception& e) {
    man.diagnostics = e.what();
    man.wall_times_s["total"] = total.seconds();
    std::ofstream(dir / "manifest.json") << man.to_json().dump(2) << "\n";
    throw;
  }
  man.wall_times_s["total"] = total.seconds();
  std::ofstream(dir / "manifest.json") << man.to_json().dump(2) << "\n";
  return man;
}

}  // namespace stoq

#endif  // STOQ_RUNNER_HPP
