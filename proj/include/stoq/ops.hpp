#ifndef STOQ_OPS_HPP
#define STOQ_OPS_HPP

#include <cmath>
#include <complex>
#include <vector>

#include "stoq/fft.hpp"
#include "stoq/grid.hpp"

namespace stoq {

/// Differential operators on grid fields. Periodic grids use spectral
/// differentiation; hard-wall grids use 4th-order central differences with
/// one-sided closures at the walls. Both are exposed; the boundary type
/// picks the default.
namespace ops_detail {

inline double wavenumber(std::size_t k, std::size_t n, double length) {
  const double two_pi = 2.0 * 3.141592653589793238462643383279502884;
  const std::ptrdiff_t ks =
      k <= n / 2 ? static_cast<std::ptrdiff_t>(k)
                 : static_cast<std::ptrdiff_t>(k) - static_cast<std::ptrdiff_t>(n);
  return two_pi * static_cast<double>(ks) / length;
}

// Fornberg finite-difference weights, 4th order.
// first derivative, central, offsets {-2,-1,1,2}
// one-sided rows verified against exact quartics in the unit tests.
template <typename T>
inline void fd4_line_gradient(const T* f, T* out, std::size_t n, double dq) {
  const double s = 1.0 / (12.0 * dq);
  // forward closure, offsets {0,1,2,3,4}
  out[0] = s * (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] -
                3.0 * f[4]);
  // offsets {-1,0,1,2,3}
  out[1] = s * (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]);
  for (std::size_t i = 2; i + 2 < n; ++i)
    out[i] = s * (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]);
  out[n - 2] = -s * (-3.0 * f[n - 1] - 10.0 * f[n - 2] + 18.0 * f[n - 3] -
                     6.0 * f[n - 4] + f[n - 5]);
  out[n - 1] = -s * (-25.0 * f[n - 1] + 48.0 * f[n - 2] - 36.0 * f[n - 3] +
                     16.0 * f[n - 4] - 3.0 * f[n - 5]);
}

// second derivative, central, offsets {-2,-1,0,1,2}
template <typename T>
inline void fd4_line_laplacian(const T* f, T* out, std::size_t n, double dq) {
  const double s = 1.0 / (12.0 * dq * dq);
  // forward closure, offsets {0..5}
  out[0] = s * (45.0 * f[0] - 154.0 * f[1] + 214.0 * f[2] - 156.0 * f[3] +
                61.0 * f[4] - 10.0 * f[5]);
  // offsets {-1..4}
  out[1] = s * (10.0 * f[0] - 15.0 * f[1] - 4.0 * f[2] + 14.0 * f[3] -
                6.0 * f[4] + f[5]);
  for (std::size_t i = 2; i + 2 < n; ++i)
    out[i] = s * (-f[i - 2] + 16.0 * f[i - 1] - 30.0 * f[i] + 16.0 * f[i + 1] -
                  f[i + 2]);
  out[n - 2] = s * (10.0 * f[n - 1] - 15.0 * f[n - 2] - 4.0 * f[n - 3] +
                    14.0 * f[n - 4] - 6.0 * f[n - 5] + f[n - 6]);
  out[n - 1] = s * (45.0 * f[n - 1] - 154.0 * f[n - 2] + 214.0 * f[n - 3] -
                    156.0 * f[n - 4] + 61.0 * f[n - 5] - 10.0 * f[n - 6]);
}

enum class SpectralOp { gradient, laplacian };

inline void spectral_line(std::vector<std::complex<double>>& line,
                          double length, SpectralOp op) {
  const std::size_t n = line.size();
  fft_inplace(line.data(), n, false);
  for (std::size_t k = 0; k < n; ++k) {
    const double kk = wavenumber(k, n, length);
    if (op == SpectralOp::gradient) {
      // Nyquist mode has no well-defined sign; drop it.
      if (2 * k == n)
        line[k] = 0.0;
      else
        line[k] *= std::complex<double>(0.0, kk);
    } else {
      line[k] *= -kk * kk;
    }
  }
  fft_inplace(line.data(), n, true);
  const double s = 1.0 / static_cast<double>(n);
  for (auto& z : line) z *= s;
}

template <typename FieldT, typename Extract, typename Store>
inline void apply_along_dim(const FieldT& in, FieldT& out, int dim,
                            SpectralOp op, Extract get, Store put) {
  const SpatialGrid& g = in.grid;
  const std::size_t nx = g.n[0], ny = g.n[1];
  if (g.boundary == Boundary::periodic) {
    std::vector<std::complex<double>> line;
    if (dim == 0) {
      line.resize(nx);
      for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) line[i] = get(in.v[i * ny + j]);
        spectral_line(line, g.extent[0], op);
        for (std::size_t i = 0; i < nx; ++i) put(out.v[i * ny + j], line[i]);
      }
    } else {
      line.resize(ny);
      for (std::size_t i = 0; i < nx; ++i) {
        for (std::size_t j = 0; j < ny; ++j) line[j] = get(in.v[i * ny + j]);
        spectral_line(line, g.extent[1], op);
        for (std::size_t j = 0; j < ny; ++j) put(out.v[i * ny + j], line[j]);
      }
    }
  } else {
    using Val = decltype(get(in.v[0]));
    std::vector<Val> line, dline;
    if (dim == 0) {
      line.resize(nx);
      dline.resize(nx);
      for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) line[i] = get(in.v[i * ny + j]);
        if (op == SpectralOp::gradient)
          fd4_line_gradient(line.data(), dline.data(), nx, g.dq(0));
        else
          fd4_line_laplacian(line.data(), dline.data(), nx, g.dq(0));
        for (std::size_t i = 0; i < nx; ++i) put(out.v[i * ny + j], dline[i]);
      }
    } else {
      line.resize(ny);
      dline.resize(ny);
      for (std::size_t i = 0; i < nx; ++i) {
        for (std::size_t j = 0; j < ny; ++j) line[j] = get(in.v[i * ny + j]);
        if (op == SpectralOp::gradient)
          fd4_line_gradient(line.data(), dline.data(), ny, g.dq(1));
        else
          fd4_line_laplacian(line.data(), dline.data(), ny, g.dq(1));
        for (std::size_t j = 0; j < ny; ++j) put(out.v[i * ny + j], dline[j]);
      }
    }
  }
}

}  // namespace ops_detail

inline RealField gradient(const RealField& f, int dim = 0) {
  RealField out(f.grid);
  ops_detail::apply_along_dim(
      f, out, dim, ops_detail::SpectralOp::gradient,
      [](double x) { return x; },
      [](double& dst, auto z) {
        if constexpr (std::is_same_v<std::decay_t<decltype(z)>,
                                     std::complex<double>>)
          dst = z.real();
        else
          dst = z;
      });
  return out;
}

inline ComplexField gradient(const ComplexField& f, int dim = 0) {
  ComplexField out(f.grid);
  ops_detail::apply_along_dim(
      f, out, dim, ops_detail::SpectralOp::gradient,
      [](const std::complex<double>& x) { return x; },
      [](std::complex<double>& dst, const std::complex<double>& z) { dst = z; });
  return out;
}

inline RealField laplacian_1d(const RealField& f, int dim) {
  RealField out(f.grid);
  ops_detail::apply_along_dim(
      f, out, dim, ops_detail::SpectralOp::laplacian,
      [](double x) { return x; },
      [](double& dst, auto z) {
        if constexpr (std::is_same_v<std::decay_t<decltype(z)>,
                                     std::complex<double>>)
          dst = z.real();
        else
          dst = z;
      });
  return out;
}

inline RealField laplacian(const RealField& f) {
  RealField out = laplacian_1d(f, 0);
  if (f.grid.dims == 2) {
    const RealField ly = laplacian_1d(f, 1);
    for (std::size_t k = 0; k < out.v.size(); ++k) out.v[k] += ly.v[k];
  }
  return out;
}

inline ComplexField laplacian(const ComplexField& f) {
  ComplexField out(f.grid);
  ops_detail::apply_along_dim(
      f, out, 0, ops_detail::SpectralOp::laplacian,
      [](const std::complex<double>& x) { return x; },
      [](std::complex<double>& dst, const std::complex<double>& z) { dst = z; });
  if (f.grid.dims == 2) {
    ComplexField ly(f.grid);
    ops_detail::apply_along_dim(
        f, ly, 1, ops_detail::SpectralOp::laplacian,
        [](const std::complex<double>& x) { return x; },
        [](std::complex<double>& dst, const std::complex<double>& z) {
          dst = z;
        });
    for (std::size_t k = 0; k < out.v.size(); ++k) out.v[k] += ly.v[k];
  }
  return out;
}

/// Local (stencil-based) first derivative: 4th-order central differences
/// with periodic wrap or one-sided wall closures. Unlike the spectral
/// route, errors stay local, so fields that are only piecewise smooth
/// (e.g. zeroed beyond a support floor) do not contaminate the smooth
/// region.
inline RealField gradient_local(const RealField& f, int dim = 0) {
  const SpatialGrid& g = f.grid;
  RealField out(g);
  const std::size_t nx = g.n[0], ny = g.n[1];
  const double s = 1.0 / (12.0 * g.dq(dim));
  const std::size_t n = dim == 0 ? nx : ny;
  std::vector<double> line(n), dline(n);
  const std::size_t nlines = dim == 0 ? ny : nx;
  for (std::size_t l = 0; l < nlines; ++l) {
    for (std::size_t i = 0; i < n; ++i)
      line[i] = dim == 0 ? f.v[i * ny + l] : f.v[l * ny + i];
    if (g.boundary == Boundary::periodic) {
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t im2 = (i + n - 2) % n, im1 = (i + n - 1) % n;
        const std::size_t ip1 = (i + 1) % n, ip2 = (i + 2) % n;
        dline[i] = s * (line[im2] - 8.0 * line[im1] + 8.0 * line[ip1] -
                        line[ip2]);
      }
    } else {
      ops_detail::fd4_line_gradient(line.data(), dline.data(), n, g.dq(dim));
    }
    for (std::size_t i = 0; i < n; ++i)
      (dim == 0 ? out.v[i * ny + l] : out.v[l * ny + i]) = dline[i];
  }
  return out;
}

inline RealField divergence_local(const std::vector<RealField>& comps) {
  if (comps.empty())
    throw std::invalid_argument("divergence_local: no components");
  RealField out = gradient_local(comps[0], 0);
  if (comps[0].grid.dims == 2) {
    if (comps.size() != 2)
      throw std::invalid_argument(
          "divergence_local: need one component per dim");
    const RealField gy = gradient_local(comps[1], 1);
    for (std::size_t k = 0; k < out.v.size(); ++k) out.v[k] += gy.v[k];
  }
  return out;
}

/// Divergence of a vector field given per-component fields.
inline RealField divergence(const std::vector<RealField>& comps) {
  if (comps.empty())
    throw std::invalid_argument("divergence: no components");
  RealField out = gradient(comps[0], 0);
  if (comps[0].grid.dims == 2) {
    if (comps.size() != 2)
      throw std::invalid_argument("divergence: need one component per dim");
    const RealField gy = gradient(comps[1], 1);
    for (std::size_t k = 0; k < out.v.size(); ++k) out.v[k] += gy.v[k];
  }
  return out;
}

}  // namespace stoq

#endif  // STOQ_OPS_HPP
