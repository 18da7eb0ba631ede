#ifndef STOQ_CLASSICAL_HPP
#define STOQ_CLASSICAL_HPP

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "stoq/grid.hpp"
#include "stoq/system.hpp"

namespace stoq {

struct ClassicalTrajectory {
  std::vector<double> times;
  std::vector<std::array<double, 2>> q;
  std::vector<std::array<double, 2>> p;

  double energy(const ClassicalSystem& sys, std::size_t k) const {
    return sys.hamiltonian(q[k].data(), p[k].data());
  }
};

/// Velocity-Verlet (symplectic) integration of Hamilton's equations.
inline ClassicalTrajectory integrate_hamilton(const std::array<double, 2>& q0,
                                              const std::array<double, 2>& p0,
                                              const ClassicalSystem& sys,
                                              double dt, double T) {
  if (!(dt > 0.0) || !(T > 0.0))
    throw std::invalid_argument("integrate_hamilton: dt and T must be > 0");
  const auto steps = static_cast<std::size_t>(std::llround(T / dt));
  ClassicalTrajectory tr;
  tr.times.reserve(steps + 1);
  tr.q.reserve(steps + 1);
  tr.p.reserve(steps + 1);

  std::array<double, 2> q = q0, p = p0, f{};
  for (int d = 0; d < sys.dims; ++d) f[d] = sys.force(q.data(), d);
  tr.times.push_back(0.0);
  tr.q.push_back(q);
  tr.p.push_back(p);
  for (std::size_t s = 0; s < steps; ++s) {
    for (int d = 0; d < sys.dims; ++d) {
      p[d] += 0.5 * dt * f[d];
      q[d] += dt * p[d] / sys.mass[d];
    }
    for (int d = 0; d < sys.dims; ++d) {
      f[d] = sys.force(q.data(), d);
      if (!std::isfinite(f[d]))
        throw std::runtime_error("integrate_hamilton: non-finite force");
      p[d] += 0.5 * dt * f[d];
    }
    tr.times.push_back(static_cast<double>(s + 1) * dt);
    tr.q.push_back(q);
    tr.p.push_back(p);
  }
  return tr;
}

/// v = dH/dp at p = gradient field, i.e. grad/m componentwise for
/// H = p^2/2m + V. Works for gradA (classical) and gradS (model) alike.
inline std::vector<RealField> classical_velocity_field(
    const ClassicalSystem& sys, const std::vector<RealField>& grad) {
  if (static_cast<int>(grad.size()) != sys.dims)
    throw std::invalid_argument(
        "classical_velocity_field: one gradient component per dim");
  std::vector<RealField> v;
  v.reserve(grad.size());
  for (int d = 0; d < sys.dims; ++d) {
    RealField g = grad[d];
    for (auto& x : g.v) x /= sys.mass[d];
    v.push_back(std::move(g));
  }
  return v;
}

}  // namespace stoq

#endif  // STOQ_CLASSICAL_HPP
