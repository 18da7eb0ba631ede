#ifndef STOQ_SCHRODINGER_HPP
#define STOQ_SCHRODINGER_HPP

#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "stoq/fft.hpp"
#include "stoq/grid.hpp"
#include "stoq/ops.hpp"
#include "stoq/system.hpp"

namespace stoq {

enum class PropagatorMethod { split_step, crank_nicolson };

struct PropagatorConfig {
  PropagatorMethod method = PropagatorMethod::split_step;
  double dt_solver = 1e-3;
  std::size_t steps = 0;

  void check(const SpatialGrid& g, const ClassicalSystem& sys) const {
    if (!(dt_solver > 0.0))
      throw std::invalid_argument("PropagatorConfig: dt_solver must be > 0");
    if (method == PropagatorMethod::crank_nicolson) {
      const double bound = g.dq(0) * g.dq(0) * sys.mass[0] / sys.hbar;
      if (dt_solver >= bound)
        throw std::invalid_argument(
            "PropagatorConfig: crank-nicolson accuracy bound requires "
            "dt_solver < dq^2 m/hbar = " +
            std::to_string(bound));
    }
  }
};

namespace schrodinger_detail {

using cd = std::complex<double>;

/// Complex banded LU, bandwidth 2, no pivoting. The Cayley matrices are
/// near-identity (dt below the dq^2 m/hbar bound), so pivots stay away
/// from zero.
struct Banded5LU {
  std::size_t n = 0;
  // band[b][i] = entry (i, i+b-2), b in 0..4
  std::array<std::vector<cd>, 5> band;

  void factor() {
    for (std::size_t i = 0; i < n; ++i) {
      const cd piv = band[2][i];
      if (std::abs(piv) < 1e-12)
        throw std::runtime_error("Banded5LU: vanishing pivot");
      for (std::size_t r = 1; r <= 2 && i + r < n; ++r) {
        const std::size_t row = i + r;
        cd& l = band[2 - r][row];
        l /= piv;
        for (std::size_t c = 1; c <= 2 && i + c < n; ++c) {
          // A(row, i+c) -= l * A(i, i+c)
          band[2 - r + c][row] -= l * band[2 + c][i];
        }
      }
    }
  }

  void solve(std::vector<cd>& x) const {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t r = 1; r <= 2 && r <= i; ++r)
        x[i] -= band[2 - r][i] * x[i - r];
    for (std::size_t ii = n; ii-- > 0;) {
      for (std::size_t c = 1; c <= 2 && ii + c < n; ++c)
        x[ii] -= band[2 + c][ii] * x[ii + c];
      x[ii] /= band[2][ii];
    }
  }
};

}  // namespace schrodinger_detail

/// Advances a wave function by a fixed dt. Construct once per run; the
/// internal factorizations/phases are reused every step.
class Propagator {
 public:
  Propagator(const SpatialGrid& g, const ClassicalSystem& sys,
             const PropagatorConfig& cfg)
      : grid_(g), sys_(sys), cfg_(cfg) {
    cfg_.check(g, sys);
    if (g.dims != sys.dims)
      throw std::invalid_argument("Propagator: grid/system dims mismatch");
    if (cfg_.method == PropagatorMethod::split_step) {
      if (g.boundary != Boundary::periodic)
        throw std::invalid_argument(
            "Propagator: split-step requires a periodic grid (use "
            "crank-nicolson on hard-wall grids)");
      init_split_step();
    } else {
      if (g.dims != 1)
        throw std::invalid_argument(
            "Propagator: crank-nicolson is 1D only; 2D runs use split-step");
      init_crank_nicolson();
    }
  }

  double dt() const { return cfg_.dt_solver; }

  void step(WaveFunction& psi) {
    if (!(psi.grid() == grid_))
      throw std::invalid_argument("Propagator::step: grid mismatch");
    if (cfg_.method == PropagatorMethod::split_step)
      step_split(psi);
    else
      step_cn(psi);
    psi.time += cfg_.dt_solver;
  }

 private:
  using cd = std::complex<double>;

  void init_split_step() {
    const double dt = cfg_.dt_solver;
    const double hbar = sys_.hbar;
    kin_phase_.resize(grid_.size());
    const std::size_t nx = grid_.n[0], ny = grid_.n[1];
    for (std::size_t i = 0; i < nx; ++i) {
      const double kx = ops_detail::wavenumber(i, nx, grid_.extent[0]);
      for (std::size_t j = 0; j < ny; ++j) {
        double k2m = kx * kx / (2.0 * sys_.mass[0]);
        if (grid_.dims == 2) {
          const double ky = ops_detail::wavenumber(j, ny, grid_.extent[1]);
          k2m += ky * ky / (2.0 * sys_.mass[1]);
        }
        kin_phase_[i * ny + j] = std::polar(1.0, -hbar * k2m * dt);
      }
    }
    const RealField V = sys_.potential_field(grid_);
    pot_half_phase_.resize(grid_.size());
    for (std::size_t k = 0; k < grid_.size(); ++k)
      pot_half_phase_[k] = std::polar(1.0, -0.5 * V.v[k] * dt / hbar);
  }

  void step_split(WaveFunction& psi) {
    auto& v = psi.field.v;
    for (std::size_t k = 0; k < v.size(); ++k) v[k] *= pot_half_phase_[k];
    if (grid_.dims == 1)
      fft_inplace(v.data(), v.size(), false);
    else
      fft2_forward(v, grid_.n[0], grid_.n[1]);
    for (std::size_t k = 0; k < v.size(); ++k) v[k] *= kin_phase_[k];
    if (grid_.dims == 1) {
      fft_inplace(v.data(), v.size(), true);
      const double s = 1.0 / static_cast<double>(v.size());
      for (auto& z : v) z *= s;
    } else {
      fft2_inverse(v, grid_.n[0], grid_.n[1]);
    }
    for (std::size_t k = 0; k < v.size(); ++k) v[k] *= pot_half_phase_[k];
  }

  // Cayley form (I + aH) psi' = (I - aH) psi with the 4th-order 5-point
  // Laplacian; H stays Hermitian (odd-image closure on hard walls, wrap
  // handled by a rank-4 Woodbury correction on periodic grids), so the
  // step is exactly unitary.
  void init_crank_nicolson() {
    const std::size_t n = grid_.n[0];
    const double dq = grid_.dq(0);
    const double hbar = sys_.hbar;
    const cd a = cd(0.0, cfg_.dt_solver / (2.0 * hbar));
    const double kpre = -hbar * hbar / (2.0 * sys_.mass[0]) / (12.0 * dq * dq);
    h_diag_.assign(n, 0.0);
    const RealField V = sys_.potential_field(grid_);
    for (std::size_t i = 0; i < n; ++i)
      h_diag_[i] = kpre * (-30.0) + V.v[i];
    h_off1_ = kpre * 16.0;
    h_off2_ = kpre * (-1.0);
    if (grid_.boundary == Boundary::hard_wall) {
      // ghost two past the wall is the odd image of node 0 / n-1
      h_diag_[0] -= h_off2_;
      h_diag_[n - 1] -= h_off2_;
    }

    lu_.n = n;
    for (auto& b : lu_.band) b.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      lu_.band[2][i] = 1.0 + a * h_diag_[i];
      if (i + 1 < n) {
        lu_.band[3][i] = a * h_off1_;
        lu_.band[1][i + 1] = a * h_off1_;
      }
      if (i + 2 < n) {
        lu_.band[4][i] = a * h_off2_;
        lu_.band[0][i + 2] = a * h_off2_;
      }
    }
    a_cn_ = a;
    lu_.factor();

    if (grid_.boundary == Boundary::periodic) {
      // M_per = M_band + U V^T with U = E D over corner rows/cols.
      const std::size_t idx[4] = {0, 1, n - 2, n - 1};
      const cd m1 = a * h_off1_, m2 = a * h_off2_;
      cd D[4][4] = {{0, 0, m2, m1}, {0, 0, 0, m2}, {m2, 0, 0, 0},
                    {m1, m2, 0, 0}};
      binv_u_.assign(4, std::vector<cd>(n, 0.0));
      for (int c = 0; c < 4; ++c) {
        for (int r = 0; r < 4; ++r) binv_u_[c][idx[r]] = D[r][c];
        lu_.solve(binv_u_[c]);
      }
      // K = I4 + E^T B^-1 U
      for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c)
          k4_[r][c] = (r == c ? 1.0 : 0.0) + binv_u_[c][idx[r]];
      factor4();
    }
  }

  void factor4() {
    for (int i = 0; i < 4; ++i) {
      int piv = i;
      for (int r = i + 1; r < 4; ++r)
        if (std::abs(k4_[r][i]) > std::abs(k4_[piv][i])) piv = r;
      k4_perm_[i] = piv;
      if (piv != i)
        for (int c = 0; c < 4; ++c) std::swap(k4_[i][c], k4_[piv][c]);
      for (int r = i + 1; r < 4; ++r) {
        k4_[r][i] /= k4_[i][i];
        for (int c = i + 1; c < 4; ++c) k4_[r][c] -= k4_[r][i] * k4_[i][c];
      }
    }
  }

  void solve4(cd x[4]) const {
    for (int i = 0; i < 4; ++i) {
      if (k4_perm_[i] != i) std::swap(x[i], x[k4_perm_[i]]);
      for (int r = i + 1; r < 4; ++r) x[r] -= k4_[r][i] * x[i];
    }
    for (int i = 3; i >= 0; --i) {
      for (int c = i + 1; c < 4; ++c) x[i] -= k4_[i][c] * x[c];
      x[i] /= k4_[i][i];
    }
  }

  void step_cn(WaveFunction& psi) {
    const std::size_t n = grid_.n[0];
    const auto& v = psi.field.v;
    std::vector<cd> rhs(n);
    const bool wrap = grid_.boundary == Boundary::periodic;
    auto at = [&](std::ptrdiff_t i) -> cd {
      if (i >= 0 && i < static_cast<std::ptrdiff_t>(n)) return v[i];
      if (wrap) return v[(i + n) % n];
      return 0.0;  // wall; odd image is folded into h_diag_
    };
    for (std::size_t i = 0; i < n; ++i) {
      const auto is = static_cast<std::ptrdiff_t>(i);
      cd hv = h_diag_[i] * v[i] +
              h_off1_ * (at(is - 1) + at(is + 1)) +
              h_off2_ * (at(is - 2) + at(is + 2));
      rhs[i] = v[i] - a_cn_ * hv;
    }
    lu_.solve(rhs);
    if (wrap) {
      const std::size_t idx[4] = {0, 1, n - 2, n - 1};
      cd z[4] = {rhs[idx[0]], rhs[idx[1]], rhs[idx[2]], rhs[idx[3]]};
      solve4(z);
      for (int c = 0; c < 4; ++c)
        for (std::size_t i = 0; i < n; ++i) rhs[i] -= binv_u_[c][i] * z[c];
    }
    psi.field.v = std::move(rhs);
  }

  SpatialGrid grid_;
  ClassicalSystem sys_;
  PropagatorConfig cfg_;
  // split-step
  std::vector<cd> kin_phase_, pot_half_phase_;
  // crank-nicolson
  std::vector<double> h_diag_;
  double h_off1_ = 0.0, h_off2_ = 0.0;
  cd a_cn_;
  schrodinger_detail::Banded5LU lu_;
  std::vector<std::vector<cd>> binv_u_;
  cd k4_[4][4];
  int k4_perm_[4] = {0, 1, 2, 3};
};

/// <psi|H|psi> by grid quadrature (spectral/FD4 laplacian).
inline double energy_expectation(const WaveFunction& psi,
                                 const ClassicalSystem& sys) {
  const ComplexField lap = laplacian(psi.field);
  const RealField V = sys.potential_field(psi.grid());
  const double hbar = sys.hbar;
  double e = 0.0;
  for (std::size_t k = 0; k < psi.grid().size(); ++k) {
    const auto z = psi.field.v[k];
    e += std::real(std::conj(z) *
                   (-hbar * hbar / (2.0 * sys.mass[0]) * lap.v[k] +
                    V.v[k] * z));
  }
  return e * psi.grid().cell_volume();
}

inline double l2_distance(const WaveFunction& a, const WaveFunction& b) {
  if (!(a.grid() == b.grid()))
    throw std::invalid_argument("l2_distance: grid mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < a.grid().size(); ++k)
    s += std::norm(a.field.v[k] - b.field.v[k]);
  return std::sqrt(s * a.grid().cell_volume());
}

/// Propagate for cfg.steps, invoking on_frame after every step (and once
/// for the initial state). Aborts with a diagnostic if the norm drifts
/// beyond 1e-4.
inline WaveFunction propagate(
    const WaveFunction& psi0, const ClassicalSystem& sys,
    const PropagatorConfig& cfg,
    const std::function<void(const WaveFunction&)>& on_frame = nullptr) {
  Propagator prop(psi0.grid(), sys, cfg);
  WaveFunction psi = psi0;
  if (std::abs(psi.norm_sq() - 1.0) > 1e-6)
    throw std::invalid_argument("propagate: psi not normalized");
  if (on_frame) on_frame(psi);
  for (std::size_t s = 0; s < cfg.steps; ++s) {
    prop.step(psi);
    if ((s & 1023) == 1023 || s + 1 == cfg.steps) {
      const double drift = std::abs(psi.norm_sq() - 1.0);
      if (drift > 1e-4)
        throw std::runtime_error(
            "propagate: instability detected, norm drift " +
            std::to_string(drift) + " at step " + std::to_string(s + 1));
    }
    if (on_frame) on_frame(psi);
  }
  return psi;
}

// ---------------------------------------------------------------------------
// Closed-form reference states
// ---------------------------------------------------------------------------

enum class AnalyticKind { sho_ground, sho_coherent, free_gaussian,
                          box_eigenstate };

struct AnalyticParams {
  double mass = 1.0;
  double omega = 1.0;    // sho
  double sigma0 = 1.0;   // free gaussian initial density std
  double q0 = 0.0;       // displacement / packet center
  double p0 = 0.0;       // initial momentum
  double hbar = 1.0;
  int n = 1;             // box quantum number
};

inline AnalyticKind analytic_kind_from_string(const std::string& s) {
  if (s == "sho-ground") return AnalyticKind::sho_ground;
  if (s == "sho-coherent") return AnalyticKind::sho_coherent;
  if (s == "free-gaussian") return AnalyticKind::free_gaussian;
  if (s == "box-eigenstate") return AnalyticKind::box_eigenstate;
  throw std::invalid_argument("unknown analytic state kind: " + s);
}

/// Exact benchmark state at time t, sampled on the grid and normalized.
inline WaveFunction analytic_state(AnalyticKind kind, const AnalyticParams& p,
                                   double t, const SpatialGrid& g) {
  using cd = std::complex<double>;
  WaveFunction psi;
  psi.field = ComplexField(g);
  psi.time = t;
  const double hbar = p.hbar, m = p.mass, w = p.omega;

  auto fill = [&](auto&& fn) {
    for (std::size_t i = 0; i < g.n[0]; ++i)
      for (std::size_t j = 0; j < g.n[1]; ++j)
        psi.field(i, j) = fn(g.coord(0, i));
    // 2D states are built by callers as products of 1D states
  };

  switch (kind) {
    case AnalyticKind::sho_ground: {
      const double pref = std::pow(m * w / (3.141592653589793 * hbar), 0.25);
      fill([&](double q) {
        return pref * std::exp(-0.5 * m * w * q * q / hbar) *
               std::polar(1.0, -0.5 * w * t);
      });
      break;
    }
    case AnalyticKind::sho_coherent: {
      const double qc = p.q0 * std::cos(w * t) + p.p0 / (m * w) * std::sin(w * t);
      const double pc = p.p0 * std::cos(w * t) - m * w * p.q0 * std::sin(w * t);
      const double action = 0.5 * (pc * qc - p.p0 * p.q0);
      const double phi = -0.5 * w * t + action / hbar;
      const double pref = std::pow(m * w / (3.141592653589793 * hbar), 0.25);
      fill([&](double q) {
        const double x = q - qc;
        return pref * std::exp(-0.5 * m * w * x * x / hbar) *
               std::polar(1.0, pc * x / hbar + phi);
      });
      break;
    }
    case AnalyticKind::free_gaussian: {
      const double s0 = p.sigma0, v = p.p0 / m;
      const cd alpha(1.0, hbar * t / (2.0 * m * s0 * s0));
      const cd pref =
          std::pow(2.0 * 3.141592653589793 * s0 * s0, -0.25) /
          std::sqrt(alpha);
      fill([&](double q) {
        const double x = q - p.q0 - v * t;
        return pref * std::exp(-x * x / (4.0 * s0 * s0 * alpha)) *
               std::polar(1.0, (p.p0 * (q - p.q0) -
                                0.5 * p.p0 * p.p0 * t / m) / hbar);
      });
      break;
    }
    case AnalyticKind::box_eigenstate: {
      if (g.boundary != Boundary::hard_wall)
        throw std::invalid_argument(
            "analytic_state: box eigenstates need a hard-wall grid");
      const double L = g.extent[0];
      const double en = p.n * p.n * 3.141592653589793 * 3.141592653589793 *
                        hbar * hbar / (2.0 * m * L * L);
      fill([&](double q) {
        return std::sqrt(2.0 / L) *
               std::sin(p.n * 3.141592653589793 * (q - g.qmin[0]) / L) *
               std::polar(1.0, -en * t / hbar);
      });
      break;
    }
  }
  psi.normalize();
  return psi;
}

/// Tensor product of two 1D states on a 2D grid (q1 slow, q2 fast).
inline WaveFunction product_state(const WaveFunction& a, const WaveFunction& b,
                                  const SpatialGrid& g2) {
  if (g2.dims != 2 || a.grid().n[0] != g2.n[0] || b.grid().n[0] != g2.n[1])
    throw std::invalid_argument("product_state: incompatible grids");
  WaveFunction psi;
  psi.field = ComplexField(g2);
  psi.time = a.time;
  for (std::size_t i = 0; i < g2.n[0]; ++i)
    for (std::size_t j = 0; j < g2.n[1]; ++j)
      psi.field(i, j) = a.field(i) * b.field(j);
  psi.normalize();
  return psi;
}

}  // namespace stoq

#endif  // STOQ_SCHRODINGER_HPP
