#ifndef STOQ_INTERP_HPP
#define STOQ_INTERP_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>

#include "stoq/grid.hpp"

namespace stoq {

/// Cubic (Catmull-Rom) interpolation of grid fields at off-node positions.
/// Periodic grids wrap indices; hard-wall grids clamp to the first/last
/// interior node (the walls carry no data).
namespace interp_detail {

inline void cubic_weights(double t, double w[4]) {
  const double t2 = t * t, t3 = t2 * t;
  w[0] = 0.5 * (-t3 + 2.0 * t2 - t);
  w[1] = 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0);
  w[2] = 0.5 * (-3.0 * t3 + 4.0 * t2 + t);
  w[3] = 0.5 * (t3 - t2);
}

inline std::ptrdiff_t wrap_index(std::ptrdiff_t i, std::ptrdiff_t n) {
  i %= n;
  return i < 0 ? i + n : i;
}

inline std::ptrdiff_t clamp_index(std::ptrdiff_t i, std::ptrdiff_t n) {
  if (i < 0) return 0;
  if (i >= n) return n - 1;
  return i;
}

/// Fractional grid coordinate of physical position q along dim d.
inline double frac_coord(const SpatialGrid& g, int d, double q) {
  const double off = g.boundary == Boundary::periodic ? 0.0 : 1.0;
  return (q - g.qmin[d]) / g.dq(d) - off;
}

struct Stencil1D {
  std::ptrdiff_t idx[4];
  double w[4];
};

inline Stencil1D stencil(const SpatialGrid& g, int d, double q) {
  Stencil1D s;
  const double x = frac_coord(g, d, q);
  const double xf = std::floor(x);
  const auto i0 = static_cast<std::ptrdiff_t>(xf);
  cubic_weights(x - xf, s.w);
  const auto n = static_cast<std::ptrdiff_t>(g.n[d]);
  for (int k = 0; k < 4; ++k) {
    const std::ptrdiff_t i = i0 - 1 + k;
    s.idx[k] = g.boundary == Boundary::periodic ? wrap_index(i, n)
                                                : clamp_index(i, n);
  }
  return s;
}

}  // namespace interp_detail

/// Interpolate a flat row-major array on grid g at position q (1D or 2D).
inline double interpolate(const SpatialGrid& g, const double* data,
                          const double* q) {
  using namespace interp_detail;
  const Stencil1D sx = stencil(g, 0, q[0]);
  if (g.dims == 1) {
    double r = 0.0;
    for (int k = 0; k < 4; ++k) r += sx.w[k] * data[sx.idx[k]];
    return r;
  }
  const Stencil1D sy = stencil(g, 1, q[1]);
  const auto ny = static_cast<std::ptrdiff_t>(g.n[1]);
  double r = 0.0;
  for (int a = 0; a < 4; ++a) {
    const double* row = data + sx.idx[a] * ny;
    double rr = 0.0;
    for (int b = 0; b < 4; ++b) rr += sy.w[b] * row[sy.idx[b]];
    r += sx.w[a] * rr;
  }
  return r;
}

inline double interpolate(const RealField& f, const double* q) {
  return interpolate(f.grid, f.v.data(), q);
}

/// True if any node of the interpolation stencil at q is flagged in mask.
inline bool stencil_touches_mask(const SpatialGrid& g, const std::uint8_t* mask,
                                 const double* q) {
  using namespace interp_detail;
  const Stencil1D sx = stencil(g, 0, q[0]);
  if (g.dims == 1) {
    for (int k = 0; k < 4; ++k)
      if (mask[sx.idx[k]]) return true;
    return false;
  }
  const Stencil1D sy = stencil(g, 1, q[1]);
  const auto ny = static_cast<std::ptrdiff_t>(g.n[1]);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      if (mask[sx.idx[a] * ny + sy.idx[b]]) return true;
  return false;
}

}  // namespace stoq

#endif  // STOQ_INTERP_HPP
