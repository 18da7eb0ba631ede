#ifndef STOQ_MODEL_HPP
#define STOQ_MODEL_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <thread>
#include <vector>

#include "stoq/grid.hpp"
#include "stoq/interp.hpp"
#include "stoq/polar.hpp"
#include "stoq/rng.hpp"
#include "stoq/schrodinger.hpp"
#include "stoq/system.hpp"

namespace stoq {

/// Parameters of the sign-fluctuating information-dynamics law.
/// The time-scale hierarchy tau_lambda >= 10 tau_xi >= 100 dt is enforced;
/// |lambda| is constant over the run (the paper's lambda = +-hbar case),
/// its sign rides the xi sign process refreshed every dt.
struct ModelParams {
  double lambda_mag = 1.0;
  double dt = 1e-3;
  double tau_xi = 1e-1;
  double tau_lambda = 10.0;
  bool osmotic_enabled = true;  // off reduces the law to Bohmian drift

  void check() const {
    if (!(lambda_mag > 0.0))
      throw std::invalid_argument("ModelParams: lambda magnitude must be > 0");
    if (!(dt > 0.0)) throw std::invalid_argument("ModelParams: dt must be > 0");
    if (!(tau_xi >= 10.0 * dt))
      throw std::invalid_argument(
          "ModelParams: time-scale hierarchy violated, need tau_xi >= 10 dt");
    if (!(tau_lambda >= 10.0 * tau_xi))
      throw std::invalid_argument(
          "ModelParams: time-scale hierarchy violated, need tau_lambda >= 10 "
          "tau_xi");
  }
};

/// One draw of the deviation-from-stationary-action variable dS - dA.
/// Exponentially distributed with mean |lambda|/2 and the sign of lambda,
/// so the production term (2/lambda)(dS-dA) is non-negative.
struct DeviationSample {
  double value = 0.0;
  double lambda_signed = 0.0;

  double production() const { return 2.0 / lambda_signed * value; }
};

inline DeviationSample sample_deviation(double lambda_signed, Stream& rng) {
  if (lambda_signed == 0.0)
    throw std::invalid_argument("sample_deviation: lambda must be non-zero");
  DeviationSample s;
  s.lambda_signed = lambda_signed;
  const double mag = rng.next_exponential(std::abs(lambda_signed) / 2.0);
  s.value = lambda_signed > 0.0 ? mag : -mag;
  return s;
}

// ---------------------------------------------------------------------------
// Field frames
// ---------------------------------------------------------------------------

/// Per-solver-frame velocity data: Bohmian drift gradS/m and the osmotic
/// log-derivative d ln(Omega) per dim, plus the node mask.
struct FieldFrame {
  SpatialGrid grid;
  double t = 0.0;
  std::array<std::vector<double>, 2> drift;  // gradS_d / m_d
  std::array<std::vector<double>, 2> osm;    // d_d ln Omega (0 at nodes)
  std::vector<double> omega;
  std::vector<std::uint8_t> mask;
};

inline FieldFrame build_frame(const WaveFunction& psi,
                              const ClassicalSystem& sys) {
  const SpatialGrid& g = psi.grid();
  FieldFrame fr;
  fr.grid = g;
  fr.t = psi.time;
  fr.omega.resize(g.size());
  fr.mask.assign(g.size(), 0);
  double omax = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    fr.omega[k] = std::norm(psi.field.v[k]);
    omax = std::max(omax, fr.omega[k]);
  }
  const double eps = kNodeEpsRel * omax;
  for (int d = 0; d < g.dims; ++d) {
    const ComplexField dpsi = gradient(psi.field, d);
    fr.drift[d].resize(g.size());
    fr.osm[d].resize(g.size());
    const double im = 1.0 / sys.mass[d];
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (fr.omega[k] > eps) {
        const std::complex<double> cross =
            std::conj(psi.field.v[k]) * dpsi.v[k];
        fr.drift[d][k] = sys.hbar * cross.imag() / fr.omega[k] * im;
        fr.osm[d][k] = 2.0 * cross.real() / fr.omega[k];
      } else {
        fr.mask[k] = 1;
      }
    }
  }
  return fr;
}

// ---------------------------------------------------------------------------
// Actual velocity and trajectory stepping
// ---------------------------------------------------------------------------

/// Per-trajectory mutable state carried across steps (node policy: the
/// osmotic term freezes at its last valid value inside flagged cells).
struct TrajectoryState {
  std::array<double, 2> q{};
  std::array<double, 2> last_osm{};
  std::uint64_t node_events = 0;
};

/// Fused sampler: one interpolation stencil per position serves drift and
/// osmotic fields of every dim plus the node-mask check.
inline bool sample_frame(const FieldFrame& fr, const double* q,
                         double drift_out[2], double osm_out[2]) {
  using namespace interp_detail;
  const SpatialGrid& g = fr.grid;
  const Stencil1D sx = stencil(g, 0, q[0]);
  bool masked = false;
  if (g.dims == 1) {
    double dr = 0.0, os = 0.0;
    for (int k = 0; k < 4; ++k) {
      const auto ix = sx.idx[k];
      if (fr.mask[ix]) masked = true;
      dr += sx.w[k] * fr.drift[0][ix];
      os += sx.w[k] * fr.osm[0][ix];
    }
    drift_out[0] = dr;
    osm_out[0] = os;
    return masked;
  }
  const Stencil1D sy = stencil(g, 1, q[1]);
  const auto ny = static_cast<std::ptrdiff_t>(g.n[1]);
  double dr0 = 0.0, dr1 = 0.0, os0 = 0.0, os1 = 0.0;
  for (int a = 0; a < 4; ++a) {
    const std::ptrdiff_t row = sx.idx[a] * ny;
    double rdr0 = 0.0, rdr1 = 0.0, ros0 = 0.0, ros1 = 0.0;
    for (int b = 0; b < 4; ++b) {
      const auto ix = row + sy.idx[b];
      if (fr.mask[ix]) masked = true;
      rdr0 += sy.w[b] * fr.drift[0][ix];
      rdr1 += sy.w[b] * fr.drift[1][ix];
      ros0 += sy.w[b] * fr.osm[0][ix];
      ros1 += sy.w[b] * fr.osm[1][ix];
    }
    dr0 += sx.w[a] * rdr0;
    dr1 += sx.w[a] * rdr1;
    os0 += sx.w[a] * ros0;
    os1 += sx.w[a] * ros1;
  }
  drift_out[0] = dr0;
  drift_out[1] = dr1;
  osm_out[0] = os0;
  osm_out[1] = os1;
  return masked;
}

/// p(qdot)/m = (gradS + sign_d (lambda/2) gradOmega/Omega)/m per dim,
/// fields cubically interpolated at q; sign may differ per dim (two-
/// particle runs carry one sign process per particle). Never returns
/// non-finite values.
inline void actual_velocity_multi(const FieldFrame& fr, const double* q,
                                  const int* sign_per_dim,
                                  const ModelParams& mp,
                                  const ClassicalSystem& sys,
                                  TrajectoryState* ts, double* v_out) {
  double drift[2], osm[2];
  const bool masked = sample_frame(fr, q, drift, osm);
  if (masked && ts) ++ts->node_events;
  for (int d = 0; d < fr.grid.dims; ++d) {
    double o;
    if (masked) {
      o = ts ? ts->last_osm[d] : 0.0;
    } else {
      o = osm[d];
      if (ts) ts->last_osm[d] = o;
    }
    double v = drift[d];
    if (mp.osmotic_enabled)
      v += sign_per_dim[d] * 0.5 * mp.lambda_mag * o / sys.mass[d];
    v_out[d] = std::isfinite(v) ? v : 0.0;
  }
}

inline void actual_velocity(const FieldFrame& fr, const double* q, int sign,
                            const ModelParams& mp, const ClassicalSystem& sys,
                            TrajectoryState* ts, double* v_out) {
  const int sg[2] = {sign, sign};
  actual_velocity_multi(fr, q, sg, mp, sys, ts, v_out);
}

inline void apply_boundary(const SpatialGrid& g, double* q) {
  for (int d = 0; d < g.dims; ++d) {
    const double lo = g.qmin[d], len = g.extent[d];
    if (g.boundary == Boundary::periodic) {
      double x = std::fmod(q[d] - lo, len);
      if (x < 0.0) x += len;
      q[d] = lo + x;
    } else {
      // reflect off the walls
      double x = q[d];
      for (int it = 0; it < 4 && (x < lo || x > lo + len); ++it) {
        if (x < lo) x = 2.0 * lo - x;
        if (x > lo + len) x = 2.0 * (lo + len) - x;
      }
      q[d] = std::clamp(x, lo, lo + len);
    }
  }
}

/// One Heun (predictor-corrector) step with the sign frozen across the
/// step; fr0 supplies the fields at t, fr1 at t+dt.
inline void step_trajectory(const FieldFrame& fr0, const FieldFrame& fr1,
                            int sign, const ModelParams& mp,
                            const ClassicalSystem& sys, TrajectoryState& ts) {
  double v1[2], v2[2], qp[2] = {ts.q[0], ts.q[1]};
  actual_velocity(fr0, ts.q.data(), sign, mp, sys, &ts, v1);
  for (int d = 0; d < fr0.grid.dims; ++d) qp[d] = ts.q[d] + mp.dt * v1[d];
  apply_boundary(fr0.grid, qp);
  actual_velocity(fr1, qp, sign, mp, sys, &ts, v2);
  for (int d = 0; d < fr0.grid.dims; ++d)
    ts.q[d] += 0.5 * mp.dt * (v1[d] + v2[d]);
  apply_boundary(fr0.grid, ts.q.data());
}

// ---------------------------------------------------------------------------
// Action increments along a step (diagnostics)
// ---------------------------------------------------------------------------

/// dA = L dt = (m qdot^2/2 - V(q_mid)) dt along a recorded step.
inline double compute_dA_step(const double* q, const double* q_next,
                              const ClassicalSystem& sys, double dt) {
  double qdot[2]{}, qmid[2]{};
  for (int d = 0; d < sys.dims; ++d) {
    qdot[d] = (q_next[d] - q[d]) / dt;
    qmid[d] = 0.5 * (q[d] + q_next[d]);
  }
  return sys.lagrangian(qmid, qdot) * dt;
}

/// Chain-rule differential of the phase field along a step:
/// dS = dtS(q_mid) dt + gradS(q_mid) . (q_next - q).
inline double compute_dS_step(const double* q, const double* q_next,
                              const PolarFields& fields, double dt) {
  if (!fields.has_dtS)
    throw std::invalid_argument("compute_dS_step: fields carry no dtS");
  double qmid[2]{};
  for (int d = 0; d < fields.grid.dims; ++d)
    qmid[d] = 0.5 * (q[d] + q_next[d]);
  double ds = interpolate(fields.dtS, qmid) * dt;
  for (int d = 0; d < fields.grid.dims; ++d)
    ds += interpolate(fields.gradS[d], qmid) * (q_next[d] - q[d]);
  return ds;
}

// ---------------------------------------------------------------------------
// Ensemble evolution
// ---------------------------------------------------------------------------

struct EnsembleConfig {
  std::size_t n = 1000;
  std::uint64_t master_seed = 1;
  std::vector<double> checkpoints;  // ascending times
  bool stratified_init = false;     // quantile-stratified initial sampling
  int threads = 1;
  PropagatorMethod method = PropagatorMethod::split_step;
  /// optional explicit starts (size n) overriding Born sampling
  std::vector<std::array<double, 2>> initial_positions;
};

struct EnsembleCheckpoint {
  double t = 0.0;
  std::vector<std::array<double, 2>> q;
  std::vector<std::array<std::int8_t, 2>> sign;
  WaveFunction psi;  // solver state at the checkpoint
};

struct EnsembleResult {
  std::vector<EnsembleCheckpoint> checkpoints;
  std::uint64_t node_events = 0;
};

namespace model_detail {

// RNG stream keys per trajectory: position draw and sign process, one of
// each per configuration dimension.
inline constexpr std::uint64_t kKeyPosition = 0;
inline constexpr std::uint64_t kKeySign = 2;

/// Inverse-CDF position draw. 1D: marginal over the single axis.
/// 2D: marginal in q1 with the particle-1 stream, conditional in q2 given
/// q1 with the particle-2 stream (for product states the conditional
/// equals the particle-2 marginal, so both particles' draws match their
/// standalone 1D runs).
struct BornSampler {
  SpatialGrid grid;
  std::vector<double> marg1_cdf;                // over i, size nx+1
  std::vector<std::vector<double>> cond2_cdf;   // per i, size ny+1
  std::vector<double> omega;                    // row-major copy

  explicit BornSampler(const RealField& omega0) : grid(omega0.grid) {
    const std::size_t nx = grid.n[0], ny = grid.n[1];
    omega = omega0.v;
    marg1_cdf.assign(nx + 1, 0.0);
    for (std::size_t i = 0; i < nx; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < ny; ++j) row += omega[i * ny + j];
      marg1_cdf[i + 1] = marg1_cdf[i] + row;
    }
    for (auto& c : marg1_cdf) c /= marg1_cdf[nx];
    if (grid.dims == 2) {
      cond2_cdf.resize(nx);
      for (std::size_t i = 0; i < nx; ++i) {
        auto& c = cond2_cdf[i];
        c.assign(ny + 1, 0.0);
        for (std::size_t j = 0; j < ny; ++j)
          c[j + 1] = c[j] + omega[i * ny + j];
        const double tot = c[ny] > 0.0 ? c[ny] : 1.0;
        for (auto& x : c) x /= tot;
      }
    }
  }

  static double invert(const std::vector<double>& cdf, double u,
                       const SpatialGrid& g, int d) {
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    std::size_t cell = it == cdf.begin()
                           ? 0
                           : static_cast<std::size_t>(it - cdf.begin()) - 1;
    cell = std::min(cell, cdf.size() - 2);
    const double lo = cdf[cell], hi = cdf[cell + 1];
    const double frac = hi > lo ? (u - lo) / (hi - lo) : 0.5;
    // cell mass is centered on the node
    return g.coord(d, cell) + (frac - 0.5) * g.dq(d);
  }

  std::array<double, 2> draw(Stream& s1, Stream& s2) const {
    std::array<double, 2> q{};
    const double u1 = s1.next_double();
    q[0] = invert(marg1_cdf, u1, grid, 0);
    if (grid.dims == 2) {
      const double x = interp_detail::frac_coord(grid, 0, q[0]);
      const auto cell = static_cast<std::size_t>(std::clamp(
          std::llround(x), 0ll, static_cast<long long>(grid.n[0] - 1)));
      const double u2 = s2.next_double();
      q[1] = invert(cond2_cdf[cell], u2, grid, 1);
    }
    return q;
  }
};

}  // namespace model_detail

/// Propagate N stochastic trajectories through the evolving fields.
/// Deterministic given (master_seed, scenario); thread count and trajectory
/// execution order do not change the output.
inline EnsembleResult evolve_ensemble(const WaveFunction& psi0,
                                      const ClassicalSystem& sys,
                                      const ModelParams& mp,
                                      const EnsembleConfig& ec) {
  mp.check();
  if (ec.checkpoints.empty())
    throw std::invalid_argument("evolve_ensemble: no checkpoints requested");
  const SpatialGrid& g = psi0.grid();

  // initial positions
  std::vector<TrajectoryState> ts(ec.n);
  std::vector<SignProcess> signs1(ec.n), signs2(ec.n);
  {
    const PolarFields f0 = polar_decompose(psi0, sys.hbar);
    const model_detail::BornSampler sampler(f0.omega);
    for (std::size_t i = 0; i < ec.n; ++i) {
      Stream s1(ec.master_seed, i, model_detail::kKeyPosition + 0);
      Stream s2(ec.master_seed, i, model_detail::kKeyPosition + 1);
      if (!ec.initial_positions.empty()) {
        ts[i].q = ec.initial_positions[i];
      } else if (ec.stratified_init && g.dims == 1) {
        const double u = (static_cast<double>(i) + s1.next_double()) /
                         static_cast<double>(ec.n);
        ts[i].q[0] = model_detail::BornSampler::invert(sampler.marg1_cdf, u,
                                                       g, 0);
      } else {
        ts[i].q = sampler.draw(s1, s2);
      }
      signs1[i] = SignProcess(Stream(ec.master_seed, i,
                                     model_detail::kKeySign + 0));
      signs2[i] = SignProcess(Stream(ec.master_seed, i,
                                     model_detail::kKeySign + 1));
    }
  }

  PropagatorConfig pcfg;
  pcfg.method = ec.method;
  pcfg.dt_solver = mp.dt;
  Propagator prop(g, sys, pcfg);

  std::vector<double> cps = ec.checkpoints;
  std::sort(cps.begin(), cps.end());
  const auto nsteps =
      static_cast<std::size_t>(std::llround(cps.back() / mp.dt));

  EnsembleResult res;
  WaveFunction psi = psi0;
  FieldFrame fr0 = build_frame(psi, sys), fr1;

  auto record = [&](double t) {
    EnsembleCheckpoint cp;
    cp.t = t;
    cp.q.resize(ec.n);
    cp.sign.resize(ec.n);
    for (std::size_t i = 0; i < ec.n; ++i) {
      cp.q[i] = ts[i].q;
      cp.sign[i] = {static_cast<std::int8_t>(signs1[i].current_sign),
                    static_cast<std::int8_t>(signs2[i].current_sign)};
    }
    cp.psi = psi;
    res.checkpoints.push_back(std::move(cp));
  };

  std::size_t next_cp = 0;
  while (next_cp < cps.size() &&
         std::llround(cps[next_cp] / mp.dt) == 0) {
    record(0.0);
    ++next_cp;
  }

  const int nthreads = std::max(1, ec.threads);
  for (std::size_t s = 0; s < nsteps; ++s) {
    prop.step(psi);
    fr1 = build_frame(psi, sys);
    auto work = [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) {
        const int sgn1 = signs1[i].step();
        if (g.dims == 2) signs2[i].step();
        // in 2D each particle carries its own sign; step per dim
        const int sg[2] = {sgn1, signs2[i].current_sign};
        double v1[2], v2[2], qp[2] = {ts[i].q[0], ts[i].q[1]};
        actual_velocity_multi(fr0, ts[i].q.data(), sg, mp, sys, &ts[i], v1);
        for (int d = 0; d < g.dims; ++d) qp[d] = ts[i].q[d] + mp.dt * v1[d];
        apply_boundary(g, qp);
        actual_velocity_multi(fr1, qp, sg, mp, sys, &ts[i], v2);
        for (int d = 0; d < g.dims; ++d)
          ts[i].q[d] += 0.5 * mp.dt * (v1[d] + v2[d]);
        apply_boundary(g, ts[i].q.data());
      }
    };
    if (nthreads == 1 || ec.n < 256) {
      work(0, ec.n);
    } else {
      std::vector<std::thread> pool;
      const std::size_t chunk = (ec.n + nthreads - 1) / nthreads;
      for (int tix = 0; tix < nthreads; ++tix) {
        const std::size_t lo = tix * chunk;
        const std::size_t hi = std::min(ec.n, lo + chunk);
        if (lo < hi) pool.emplace_back(work, lo, hi);
      }
      for (auto& th : pool) th.join();
    }
    fr0 = std::move(fr1);
    while (next_cp < cps.size() &&
           static_cast<std::size_t>(std::llround(cps[next_cp] / mp.dt)) ==
               s + 1) {
      record(static_cast<double>(s + 1) * mp.dt);
      ++next_cp;
    }
  }
  for (const auto& t : ts) res.node_events += t.node_events;
  return res;
}

// ---------------------------------------------------------------------------
// Information-balance residuals
// ---------------------------------------------------------------------------

/// Pointwise residual of the time component of the balance law
/// dI = theta dt + (2/lambda)(dS - dA) at a fixed sign, evaluated from
/// three adjacent solver frames (central differences in time). Zero
/// outside the region Omega >= floor_rel * max(Omega).
inline RealField balance_time_residual(const WaveFunction& prev,
                                       const WaveFunction& mid,
                                       const WaveFunction& next, int sign,
                                       const ModelParams& mp,
                                       const ClassicalSystem& sys,
                                       double floor_rel = 1e-6) {
  const SpatialGrid& g = mid.grid();
  const double dt = 0.5 * (next.time - prev.time);
  if (!(dt > 0.0))
    throw std::invalid_argument("balance_time_residual: bad frame times");
  const double lam = sign * mp.lambda_mag;

  const FieldFrame fr = build_frame(mid, sys);
  const RealField dtS = phase_rate_from_frames(prev, next, sys.hbar);
  const RealField V = sys.potential_field(g);

  // theta = div(gradS/m); local stencils keep the masked tail (where the
  // drift field is zeroed) from contaminating the evaluation region
  std::vector<RealField> vel(g.dims, RealField(g));
  for (int d = 0; d < g.dims; ++d) vel[d].v = fr.drift[d];
  const RealField theta = divergence_local(vel);

  double omax = 0.0;
  for (double x : fr.omega) omax = std::max(omax, x);
  const double floor = floor_rel * omax;

  RealField out(g);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double om = fr.omega[k];
    const double om_p = std::norm(prev.field.v[k]);
    const double om_n = std::norm(next.field.v[k]);
    if (om < floor || om_p <= 0.0 || om_n <= 0.0) continue;
    const double dlnom_dt = 0.5 * (std::log(om_n) - std::log(om_p)) / dt;
    double h = V.v[k];
    for (int d = 0; d < g.dims; ++d) {
      const double pd =
          fr.drift[d][k] * sys.mass[d] + 0.5 * lam * fr.osm[d][k];
      h += 0.5 * pd * pd / sys.mass[d];
    }
    out.v[k] = dlnom_dt + theta.v[k] + 2.0 / lam * (h + dtS.v[k]);
  }
  return out;
}

inline RealField balance_time_residual_sign_avg(const WaveFunction& prev,
                                                const WaveFunction& mid,
                                                const WaveFunction& next,
                                                const ModelParams& mp,
                                                const ClassicalSystem& sys,
                                                double floor_rel = 1e-6) {
  RealField rp = balance_time_residual(prev, mid, next, +1, mp, sys, floor_rel);
  const RealField rm =
      balance_time_residual(prev, mid, next, -1, mp, sys, floor_rel);
  for (std::size_t k = 0; k < rp.v.size(); ++k)
    rp.v[k] = 0.5 * (rp.v[k] + rm.v[k]);
  return rp;
}

/// Spatial component -d_q ln(Omega) = (2/lambda)(gradS - p(qdot)): with p
/// taken from the same osmotic route the identity is algebraic, so the
/// residual is roundoff. Returned per dim 0.
inline RealField balance_spatial_residual(const WaveFunction& psi, int sign,
                                          const ModelParams& mp,
                                          const ClassicalSystem& sys) {
  const SpatialGrid& g = psi.grid();
  const FieldFrame fr = build_frame(psi, sys);
  const double lam = sign * mp.lambda_mag;
  RealField out(g);
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (fr.mask[k]) continue;
    const double grad_s = fr.drift[0][k] * sys.mass[0];
    const double p = grad_s + 0.5 * lam * fr.osm[0][k];
    out.v[k] = -fr.osm[0][k] - 2.0 / lam * (grad_s - p);
  }
  return out;
}

inline double max_abs(const RealField& f) {
  double m = 0.0;
  for (double x : f.v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace stoq

#endif  // STOQ_MODEL_HPP
