#ifndef STOQ_POLAR_HPP
#define STOQ_POLAR_HPP

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "stoq/grid.hpp"
#include "stoq/ops.hpp"
#include "stoq/system.hpp"

namespace stoq {

/// Hydrodynamic decomposition of a wave function: probability density,
/// phase gradient and phase time-derivative, all per node. The phase S
/// itself is never stored globally (it is multivalued around nodes); only
/// its derivatives enter the model equations.
struct PolarFields {
  SpatialGrid grid;
  RealField omega;
  std::array<RealField, 2> gradS;
  RealField dtS;
  bool has_dtS = false;
  double hbar_eff = 1.0;
  double time = 0.0;
  /// Nodes with omega below eps_node; gradS is zeroed there.
  std::vector<std::uint8_t> node_mask;
  double eps_node = 0.0;

  double omega_integral() const { return omega.integral(); }
};

inline constexpr double kNodeEpsRel = 1e-12;

/// Invert Psi = sqrt(Omega) exp(iS/|lambda|). The phase gradient comes
/// from the probability-current form hbar*Im(Psi^* dPsi)/|Psi|^2, which
/// avoids phase unwrapping entirely.
///
/// If a system is supplied, dtS is filled from the quantum Hamilton-Jacobi
/// identity; otherwise use phase_rate_from_frames on two solver frames.
inline PolarFields polar_decompose(const WaveFunction& psi, double hbar_eff,
                                   const ClassicalSystem* system = nullptr) {
  if (!(hbar_eff > 0.0))
    throw std::invalid_argument("polar_decompose: hbar_eff must be > 0");
  const double n2 = psi.norm_sq();
  if (!(n2 > 0.0))
    throw std::invalid_argument("polar_decompose: all-zero field");
  if (std::abs(n2 - 1.0) > 1e-6)
    throw std::invalid_argument("polar_decompose: input not normalized");

  const SpatialGrid& g = psi.grid();
  PolarFields f;
  f.grid = g;
  f.hbar_eff = hbar_eff;
  f.time = psi.time;
  f.omega = RealField(g);
  f.node_mask.assign(g.size(), 0);

  double omega_max = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    f.omega.v[k] = std::norm(psi.field.v[k]);
    omega_max = std::max(omega_max, f.omega.v[k]);
  }
  f.eps_node = kNodeEpsRel * omega_max;

  for (int d = 0; d < g.dims; ++d) {
    const ComplexField dpsi = gradient(psi.field, d);
    f.gradS[d] = RealField(g);
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (f.omega.v[k] > f.eps_node) {
        f.gradS[d].v[k] =
            hbar_eff *
            std::imag(std::conj(psi.field.v[k]) * dpsi.v[k]) / f.omega.v[k];
      } else {
        f.gradS[d].v[k] = 0.0;
        f.node_mask[k] = 1;
      }
    }
  }

  if (system != nullptr) {
    // dtS = -[ sum_d (d_dS)^2/2m_d + V + Q ],  Q the quantum potential.
    RealField root(g);
    for (std::size_t k = 0; k < g.size(); ++k)
      root.v[k] = std::sqrt(f.omega.v[k]);
    const RealField lap_root = laplacian(root);
    const RealField vfield = system->potential_field(g);
    f.dtS = RealField(g);
    for (std::size_t k = 0; k < g.size(); ++k) {
      double kin = 0.0;
      for (int d = 0; d < g.dims; ++d)
        kin += 0.5 * f.gradS[d].v[k] * f.gradS[d].v[k] / system->mass[d];
      double qpot = 0.0;
      if (root.v[k] > std::sqrt(f.eps_node)) {
        // Q = -sum_d (hbar^2/2m_d) (d_d^2 sqrt(Omega))/sqrt(Omega); the
        // laplacian above already sums the dims, so use a mean mass in 2D
        // only when masses coincide; otherwise recompute per dim.
        qpot = -hbar_eff * hbar_eff / (2.0 * system->mass[0]) * lap_root.v[k] /
               root.v[k];
      }
      f.dtS.v[k] = -(kin + vfield.v[k] + qpot);
    }
    if (g.dims == 2 && system->mass[0] != system->mass[1])
      throw std::invalid_argument(
          "polar_decompose: per-dim masses in 2D dtS not supported; use "
          "phase_rate_from_frames");
    f.has_dtS = true;
  }
  return f;
}

/// dS/dt field from two adjacent solver frames by central difference of
/// the local phase. The per-step phase advance is small, so arg() of the
/// frame ratio is single-valued.
inline RealField phase_rate_from_frames(const WaveFunction& prev,
                                        const WaveFunction& next,
                                        double hbar_eff) {
  if (!(prev.grid() == next.grid()))
    throw std::invalid_argument("phase_rate_from_frames: grid mismatch");
  const double dt = next.time - prev.time;
  if (!(dt > 0.0))
    throw std::invalid_argument("phase_rate_from_frames: frames out of order");
  const SpatialGrid& g = prev.grid();
  RealField out(g);
  double mx = 0.0;
  for (const auto& z : prev.field.v) mx = std::max(mx, std::norm(z));
  const double floor = kNodeEpsRel * mx;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double w = std::norm(prev.field.v[k]);
    if (w > floor && std::norm(next.field.v[k]) > floor) {
      out.v[k] = hbar_eff *
                 std::arg(next.field.v[k] / prev.field.v[k]) / dt;
    }
  }
  return out;
}

namespace polar_detail {

/// Cumulative line integral, 4th order (Adams-Moulton style local rule).
inline void integrate_line4(const double* f, double* s, std::size_t n,
                            double dq) {
  s[0] = 0.0;
  if (n < 4) {
    for (std::size_t i = 1; i < n; ++i)
      s[i] = s[i - 1] + 0.5 * dq * (f[i - 1] + f[i]);
    return;
  }
  const double c = dq / 24.0;
  s[1] = c * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3]);
  for (std::size_t i = 1; i + 2 < n; ++i)
    s[i + 1] = s[i] + c * (-f[i - 1] + 13.0 * f[i] + 13.0 * f[i + 1] -
                           f[i + 2]);
  s[n - 1] = s[n - 2] + c * (9.0 * f[n - 1] + 19.0 * f[n - 2] -
                             5.0 * f[n - 3] + f[n - 4]);
}

/// Spectral antiderivative on a periodic line; mean (k=0) part handled by
/// the caller as a secular term.
inline void spectral_antiderivative(std::vector<std::complex<double>>& line,
                                    double length) {
  const std::size_t n = line.size();
  fft_inplace(line.data(), n, false);
  line[0] = 0.0;
  for (std::size_t k = 1; k < n; ++k) {
    if (2 * k == n) {
      line[k] = 0.0;
      continue;
    }
    const double kk = ops_detail::wavenumber(k, n, length);
    line[k] /= std::complex<double>(0.0, kk);
  }
  fft_inplace(line.data(), n, true);
  const double s = 1.0 / static_cast<double>(n);
  for (auto& z : line) z *= s;
}

}  // namespace polar_detail

/// Rebuild Psi = sqrt(Omega) exp(iS/|lambda|) with S the line integral of
/// gradS anchored at reference node (ri, rj). Rejects 2D fields whose
/// phase gradient carries circulation (a vortex crossed the grid).
inline WaveFunction synthesize_wavefunction(const PolarFields& f,
                                            std::size_t ri = 0,
                                            std::size_t rj = 0,
                                            double curl_tol = 1e-6) {
  const SpatialGrid& g = f.grid;
  const std::size_t nx = g.n[0], ny = g.n[1];

  if (g.dims == 2) {
    const RealField cxy = gradient(f.gradS[1], 0);
    const RealField cyx = gradient(f.gradS[0], 1);
    double cmax = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k)
      if (!f.node_mask.empty() && !f.node_mask[k])
        cmax = std::max(cmax, std::abs(cxy.v[k] - cyx.v[k]));
    if (cmax > curl_tol)
      throw std::domain_error(
          "synthesize_wavefunction: gradS has circulation (vortex/node "
          "crossing), phase is not single-valued");
  }

  // Path integral (0,0) -> (0,j) -> (i,j): x-integral along every row
  // anchored at column 0, plus the y-integral along column 0.
  RealField S(g);
  if (g.boundary == Boundary::periodic) {
    // Split off the mean (secular) part; the fluctuation integrates
    // spectrally, which keeps the polar round-trip at machine precision.
    double mean_x = 0.0;
    for (double x : f.gradS[0].v) mean_x += x;
    mean_x /= static_cast<double>(g.size());
    std::vector<std::complex<double>> line(nx);
    for (std::size_t j = 0; j < ny; ++j) {
      for (std::size_t i = 0; i < nx; ++i)
        line[i] = f.gradS[0].v[i * ny + j] - mean_x;
      polar_detail::spectral_antiderivative(line, g.extent[0]);
      const double base = line[0].real();
      for (std::size_t i = 0; i < nx; ++i)
        S.v[i * ny + j] = line[i].real() - base +
                          mean_x * (g.coord(0, i) - g.coord(0, 0));
    }
    if (g.dims == 2) {
      double mean_y = 0.0;
      for (double x : f.gradS[1].v) mean_y += x;
      mean_y /= static_cast<double>(g.size());
      std::vector<std::complex<double>> col(ny);
      for (std::size_t j = 0; j < ny; ++j)
        col[j] = f.gradS[1].v[0 * ny + j] - mean_y;
      polar_detail::spectral_antiderivative(col, g.extent[1]);
      const double base = col[0].real();
      for (std::size_t j = 0; j < ny; ++j) {
        const double sy = col[j].real() - base +
                          mean_y * (g.coord(1, j) - g.coord(1, 0));
        for (std::size_t i = 0; i < nx; ++i) S.v[i * ny + j] += sy;
      }
    }
  } else {
    std::vector<double> line(nx), acc(nx);
    for (std::size_t j = 0; j < ny; ++j) {
      for (std::size_t i = 0; i < nx; ++i) line[i] = f.gradS[0].v[i * ny + j];
      polar_detail::integrate_line4(line.data(), acc.data(), nx, g.dq(0));
      for (std::size_t i = 0; i < nx; ++i) S.v[i * ny + j] = acc[i];
    }
    if (g.dims == 2) {
      std::vector<double> ly(ny), sy(ny);
      for (std::size_t j = 0; j < ny; ++j) ly[j] = f.gradS[1].v[0 * ny + j];
      polar_detail::integrate_line4(ly.data(), sy.data(), ny, g.dq(1));
      for (std::size_t i = 0; i < nx; ++i)
        for (std::size_t j = 0; j < ny; ++j) S.v[i * ny + j] += sy[j];
    }
  }

  const double s_ref = S.v[g.index(ri, rj)];
  WaveFunction psi;
  psi.field = ComplexField(g);
  psi.time = f.time;
  for (std::size_t k = 0; k < g.size(); ++k) {
    psi.field.v[k] = std::sqrt(f.omega.v[k]) *
                     std::polar(1.0, (S.v[k] - s_ref) / f.hbar_eff);
  }
  return psi;
}

}  // namespace stoq

#endif  // STOQ_POLAR_HPP
