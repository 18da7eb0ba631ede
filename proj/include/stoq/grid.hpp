#ifndef STOQ_GRID_HPP
#define STOQ_GRID_HPP

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace stoq {

enum class Boundary { periodic, hard_wall };

/// Uniform 1D/2D discretization of configuration space.
///
/// Periodic grids place nodes at qmin + i*dq with dq = extent/n (the point
/// at qmin+extent is the image of qmin). Hard-wall grids place nodes
/// strictly inside the walls, at qmin + (i+1)*dq with dq = extent/(n+1),
/// so the walls themselves carry the Dirichlet zero.
struct SpatialGrid {
  int dims = 1;
  std::array<std::size_t, 2> n{};          // points per dim (n[1]=1 in 1D)
  std::array<double, 2> qmin{};
  std::array<double, 2> extent{};
  Boundary boundary = Boundary::periodic;

  SpatialGrid() = default;

  static SpatialGrid make_1d(std::size_t npoints, double qmin_, double extent_,
                             Boundary b) {
    SpatialGrid g;
    g.dims = 1;
    g.n = {npoints, 1};
    g.qmin = {qmin_, 0.0};
    g.extent = {extent_, 0.0};
    g.boundary = b;
    g.check();
    return g;
  }

  static SpatialGrid make_2d(std::size_t nx, std::size_t ny, double qmin_x,
                             double qmin_y, double ext_x, double ext_y,
                             Boundary b) {
    SpatialGrid g;
    g.dims = 2;
    g.n = {nx, ny};
    g.qmin = {qmin_x, qmin_y};
    g.extent = {ext_x, ext_y};
    g.boundary = b;
    g.check();
    return g;
  }

  void check() const {
    if (dims != 1 && dims != 2)
      throw std::invalid_argument("SpatialGrid: dims must be 1 or 2");
    for (int d = 0; d < dims; ++d) {
      if (n[d] < 16)
        throw std::invalid_argument("SpatialGrid: need at least 16 points");
      if (!(extent[d] > 0.0) || !std::isfinite(extent[d]))
        throw std::invalid_argument("SpatialGrid: extent must be finite > 0");
    }
  }

  double dq(int d) const {
    return boundary == Boundary::periodic
               ? extent[d] / static_cast<double>(n[d])
               : extent[d] / static_cast<double>(n[d] + 1);
  }

  double coord(int d, std::size_t i) const {
    const double off = boundary == Boundary::periodic ? 0.0 : 1.0;
    return qmin[d] + (static_cast<double>(i) + off) * dq(d);
  }

  std::size_t size() const { return n[0] * n[1]; }

  /// Volume element dq^dims.
  double cell_volume() const {
    double v = 1.0;
    for (int d = 0; d < dims; ++d) v *= dq(d);
    return v;
  }

  std::size_t index(std::size_t i, std::size_t j = 0) const {
    return i * n[1] + j;
  }

  bool operator==(const SpatialGrid&) const = default;
};

struct RealField {
  SpatialGrid grid;
  std::vector<double> v;

  RealField() = default;
  explicit RealField(const SpatialGrid& g, double fill = 0.0)
      : grid(g), v(g.size(), fill) {}

  double& operator()(std::size_t i, std::size_t j = 0) {
    return v[grid.index(i, j)];
  }
  double operator()(std::size_t i, std::size_t j = 0) const {
    return v[grid.index(i, j)];
  }

  double integral() const {
    double s = 0.0;
    for (double x : v) s += x;
    return s * grid.cell_volume();
  }
};

struct ComplexField {
  SpatialGrid grid;
  std::vector<std::complex<double>> v;

  ComplexField() = default;
  explicit ComplexField(const SpatialGrid& g)
      : grid(g), v(g.size(), std::complex<double>{}) {}

  std::complex<double>& operator()(std::size_t i, std::size_t j = 0) {
    return v[grid.index(i, j)];
  }
  std::complex<double> operator()(std::size_t i, std::size_t j = 0) const {
    return v[grid.index(i, j)];
  }
};

/// Complex field Psi with its clock.
struct WaveFunction {
  ComplexField field;
  double time = 0.0;

  const SpatialGrid& grid() const { return field.grid; }

  double norm_sq() const {
    double s = 0.0;
    for (const auto& z : field.v) s += std::norm(z);
    return s * field.grid.cell_volume();
  }

  void normalize() {
    const double n2 = norm_sq();
    if (!(n2 > 0.0))
      throw std::invalid_argument("WaveFunction::normalize: zero field");
    const double s = 1.0 / std::sqrt(n2);
    for (auto& z : field.v) z *= s;
  }
};

}  // namespace stoq

#endif  // STOQ_GRID_HPP
