#ifndef STOQ_STATS_HPP
#define STOQ_STATS_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "stoq/grid.hpp"
#include "stoq/interp.hpp"
#include "stoq/model.hpp"
#include "stoq/polar.hpp"
#include "stoq/system.hpp"

namespace stoq {

inline double mean(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

inline double variance(const std::vector<double>& x) {
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

inline double correlation(const std::vector<double>& a,
                          const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2)
    throw std::invalid_argument("correlation: size mismatch");
  const double ma = mean(a), mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov
// ---------------------------------------------------------------------------

/// Reference CDF built from a density sampled on grid nodes (cell mass
/// centered on the node, linear within a cell -- no kernel smoothing).
struct GridCdf {
  std::vector<double> edges;  // n+1 cell edges
  std::vector<double> cdf;    // value at each edge

  GridCdf(const RealField& density, int dim = 0) {
    const SpatialGrid& g = density.grid;
    if (g.dims != 1 && dim == 0 && g.n[1] != 1)
      throw std::invalid_argument("GridCdf: 1D densities only");
    const std::size_t n = g.n[dim];
    edges.resize(n + 1);
    cdf.assign(n + 1, 0.0);
    for (std::size_t i = 0; i <= n; ++i)
      edges[i] = g.coord(dim, 0) + (static_cast<double>(i) - 0.5) * g.dq(dim);
    for (std::size_t i = 0; i < n; ++i)
      cdf[i + 1] = cdf[i] + density.v[i];
    const double tot = cdf[n];
    if (!(tot > 0.0)) throw std::invalid_argument("GridCdf: zero density");
    for (auto& c : cdf) c /= tot;
  }

  double operator()(double x) const {
    if (x <= edges.front()) return 0.0;
    if (x >= edges.back()) return 1.0;
    const auto it = std::upper_bound(edges.begin(), edges.end(), x);
    const auto i = static_cast<std::size_t>(it - edges.begin()) - 1;
    const double f = (x - edges[i]) / (edges[i + 1] - edges[i]);
    return cdf[i] + f * (cdf[i + 1] - cdf[i]);
  }
};

/// Sup-norm distance between the empirical CDF of samples and a reference
/// CDF callable.
template <typename RefCdf>
inline double ks_distance_cdf(std::vector<double> samples, const RefCdf& ref) {
  if (samples.size() < 1)
    throw std::invalid_argument("ks_distance: empty sample set");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = ref(samples[i]);
    d = std::max(d, std::max(f - static_cast<double>(i) / n,
                             static_cast<double>(i + 1) / n - f));
  }
  return d;
}

inline double ks_distance(const std::vector<double>& samples,
                          const RealField& reference_density) {
  if (samples.size() < 10)
    throw std::invalid_argument("ks_distance: need at least 10 samples");
  return ks_distance_cdf(samples, GridCdf(reference_density));
}

inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("ks_two_sample: empty sample set");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na -
                             static_cast<double>(j) / nb));
  }
  return d;
}

/// One-sample KS critical value c(alpha)/sqrt(n); c = 1.358 at 95%,
/// 1.628 at 99%.
inline double ks_critical(std::size_t n, double alpha) {
  double c;
  if (alpha >= 0.049 && alpha <= 0.051)
    c = 1.358;
  else if (alpha >= 0.009 && alpha <= 0.011)
    c = 1.628;
  else
    c = std::sqrt(-0.5 * std::log(alpha / 2.0));
  return c / std::sqrt(static_cast<double>(n));
}

inline double ks_critical_two_sample(std::size_t n, std::size_t m,
                                     double alpha) {
  const double ne = static_cast<double>(n) * static_cast<double>(m) /
                    static_cast<double>(n + m);
  return ks_critical(1, alpha) * std::sqrt(1.0 / ne);
}

// ---------------------------------------------------------------------------
// Momentum samples and verdicts
// ---------------------------------------------------------------------------

struct MomentumSampleResult {
  std::vector<double> p;
  std::size_t excluded = 0;  // node-cell positions skipped
};

/// p_i = gradS(q_i) + sign_i (|lambda|/2) dlnOmega(q_i), dim 0.
inline MomentumSampleResult momentum_samples(
    const std::vector<std::array<double, 2>>& positions,
    const std::vector<std::array<std::int8_t, 2>>& signs,
    const FieldFrame& frame, const ModelParams& mp,
    const ClassicalSystem& sys, int dim = 0) {
  MomentumSampleResult out;
  out.p.reserve(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    double drift[2], osm[2];
    if (sample_frame(frame, positions[i].data(), drift, osm)) {
      ++out.excluded;
      continue;
    }
    const double grad_s = drift[dim] * sys.mass[dim];
    double p = grad_s;
    if (mp.osmotic_enabled)
      p += signs[i][dim] * 0.5 * mp.lambda_mag * osm[dim];
    out.p.push_back(p);
  }
  if (out.p.empty())
    throw std::runtime_error("momentum_samples: all samples in node cells");
  return out;
}

struct UncertaintyResult {
  double sigma_q = 0.0;
  double sigma_p = 0.0;
  double product = 0.0;
  double stat_err = 0.0;  // relative 1-sigma error of the product
};

inline UncertaintyResult uncertainty_product(const std::vector<double>& q,
                                             const std::vector<double>& p) {
  if (q.size() < 2 || p.size() < 2)
    throw std::invalid_argument("uncertainty_product: need samples");
  UncertaintyResult r;
  r.sigma_q = std::sqrt(variance(q));
  r.sigma_p = std::sqrt(variance(p));
  if (!(r.sigma_q > 0.0) || !(r.sigma_p > 0.0))
    throw std::invalid_argument("uncertainty_product: degenerate samples");
  r.product = r.sigma_q * r.sigma_p;
  // var of sample sd is approx sigma^2/(2n); the two factors are nearly
  // independent, so relative errors add in quadrature
  r.stat_err = std::sqrt(1.0 / (2.0 * static_cast<double>(q.size())) +
                         1.0 / (2.0 * static_cast<double>(p.size())));
  return r;
}

/// Grid Fisher information of the density, int (dOmega)^2/Omega dq; the
/// Cramer-Rao route to the uncertainty bound.
inline double fisher_information(const RealField& omega,
                                 double floor_rel = 1e-10) {
  const RealField grad = gradient(omega, 0);
  double omax = 0.0;
  for (double x : omega.v) omax = std::max(omax, x);
  double s = 0.0;
  for (std::size_t k = 0; k < omega.v.size(); ++k)
    if (omega.v[k] > floor_rel * omax)
      s += grad.v[k] * grad.v[k] / omega.v[k];
  return s * omega.grid.cell_volume();
}

enum class Observable { p, p2, H };

struct ExpectationComparison {
  double model = 0.0;     // trajectory/sign sample average
  double op = 0.0;        // grid quadrature of Psi* O Psi
  double z = 0.0;         // under sampling error of the model average
  double stat_err = 0.0;  // 1-sigma error of the model average
};

/// Compare the model average of an observable (computed from trajectory
/// positions and momentum samples) against the operator average.
inline ExpectationComparison expectation_compare(
    const std::vector<std::array<double, 2>>& positions,
    const std::vector<double>& p_samples, const WaveFunction& psi,
    const ClassicalSystem& sys, Observable obs) {
  ExpectationComparison r;
  std::vector<double> vals;
  vals.reserve(p_samples.size());
  switch (obs) {
    case Observable::p:
      vals = p_samples;
      break;
    case Observable::p2:
      for (double p : p_samples) vals.push_back(p * p);
      break;
    case Observable::H: {
      if (positions.size() != p_samples.size())
        throw std::invalid_argument(
            "expectation_compare: H needs matched position/momentum samples");
      for (std::size_t i = 0; i < p_samples.size(); ++i) {
        const double p = p_samples[i];
        vals.push_back(0.5 * p * p / sys.mass[0] +
                       sys.potential(positions[i].data()));
      }
      break;
    }
  }
  r.model = mean(vals);
  r.stat_err = std::sqrt(variance(vals) / static_cast<double>(vals.size()));

  // operator average by grid quadrature
  const double hbar = sys.hbar;
  const double dv = psi.grid().cell_volume();
  switch (obs) {
    case Observable::p: {
      const ComplexField dpsi = gradient(psi.field, 0);
      double s = 0.0;
      for (std::size_t k = 0; k < psi.grid().size(); ++k)
        s += std::imag(std::conj(psi.field.v[k]) * dpsi.v[k]);
      r.op = hbar * s * dv;
      break;
    }
    case Observable::p2: {
      const ComplexField dpsi = gradient(psi.field, 0);
      double s = 0.0;
      for (std::size_t k = 0; k < psi.grid().size(); ++k)
        s += std::norm(dpsi.v[k]);
      r.op = hbar * hbar * s * dv;
      break;
    }
    case Observable::H:
      r.op = energy_expectation(psi, sys);
      break;
  }
  const double denom = r.stat_err > 0.0 ? r.stat_err : 1e-300;
  r.z = (r.model - r.op) / denom;
  return r;
}

// ---------------------------------------------------------------------------
// Scaling fits and histograms
// ---------------------------------------------------------------------------

struct PowerLawFit {
  double exponent = 0.0;
  double stderr_exponent = 0.0;
  double log_prefactor = 0.0;
};

/// Least-squares power-law fit in log-log space.
inline PowerLawFit fit_scaling(const std::vector<double>& xs,
                               const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 3)
    throw std::invalid_argument("fit_scaling: need >= 3 points");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0))
      throw std::invalid_argument("fit_scaling: inputs must be positive");
    lx.push_back(std::log(xs[i]));
    ly.push_back(std::log(ys[i]));
  }
  const double mx = mean(lx), my = mean(ly);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  PowerLawFit f;
  f.exponent = sxy / sxx;
  f.log_prefactor = my - f.exponent * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - (f.log_prefactor + f.exponent * lx[i]);
    sse += r * r;
  }
  const auto n = static_cast<double>(lx.size());
  f.stderr_exponent = n > 2.0 ? std::sqrt(sse / (n - 2.0) / sxx) : 0.0;
  return f;
}

/// Histogram density estimate with bandwidth = grid spacing.
inline RealField histogram_density(const std::vector<double>& samples,
                                   const SpatialGrid& g, int dim = 0) {
  RealField h(g);
  const double dq = g.dq(dim);
  const double lo = g.coord(dim, 0) - 0.5 * dq;
  std::size_t inside = 0;
  for (double x : samples) {
    const auto cell = static_cast<std::ptrdiff_t>(std::floor((x - lo) / dq));
    if (cell >= 0 && cell < static_cast<std::ptrdiff_t>(g.n[dim])) {
      h.v[static_cast<std::size_t>(cell)] += 1.0;
      ++inside;
    }
  }
  if (inside == 0)
    throw std::invalid_argument("histogram_density: all samples off-grid");
  const double norm = 1.0 / (static_cast<double>(inside) * dq);
  for (auto& x : h.v) x *= norm;
  return h;
}

/// Ensemble summary used in manifests.
struct EnsembleStats {
  RealField histogram;
  double mean_q = 0.0, var_q = 0.0;
  double mean_p = 0.0, var_p = 0.0;
  double ks = 0.0;
  std::size_t n = 0;
};

}  // namespace stoq

#endif  // STOQ_STATS_HPP
