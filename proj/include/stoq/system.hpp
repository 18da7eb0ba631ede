#ifndef STOQ_SYSTEM_HPP
#define STOQ_SYSTEM_HPP

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "stoq/grid.hpp"

namespace stoq {

/// One-dimensional potential term. Two-particle systems combine one term
/// per configuration dimension (plus an optional bilinear coupling, kept
/// only so separability checks have something to reject).
struct Potential {
  enum class Kind { free, sho, quartic, box };
  Kind kind = Kind::free;
  double omega = 1.0;    // sho
  double a4 = 1.0;       // quartic: a4*(q-center)^4 + b2*(q-center)^2
  double b2 = 0.0;
  double center = 0.0;

  static Potential free_particle() { return {}; }
  static Potential harmonic(double w, double c = 0.0) {
    Potential p;
    p.kind = Kind::sho;
    p.omega = w;
    p.center = c;
    return p;
  }
  static Potential quartic_well(double a, double b = 0.0, double c = 0.0) {
    Potential p;
    p.kind = Kind::quartic;
    p.a4 = a;
    p.b2 = b;
    p.center = c;
    return p;
  }
  static Potential box_well() {
    Potential p;
    p.kind = Kind::box;
    return p;
  }

  double value(double q, double mass) const {
    const double x = q - center;
    switch (kind) {
      case Kind::free:
      case Kind::box:
        return 0.0;
      case Kind::sho:
        return 0.5 * mass * omega * omega * x * x;
      case Kind::quartic:
        return a4 * x * x * x * x + b2 * x * x;
    }
    return 0.0;
  }

  double derivative(double q, double mass) const {
    const double x = q - center;
    switch (kind) {
      case Kind::free:
      case Kind::box:
        return 0.0;
      case Kind::sho:
        return mass * omega * omega * x;
      case Kind::quartic:
        return 4.0 * a4 * x * x * x + 2.0 * b2 * x;
    }
    return 0.0;
  }
};

/// Masses plus a separable potential defining L, H and the classical
/// velocity field. hbar is the Planck scale used by the field generator.
struct ClassicalSystem {
  int dims = 1;
  std::array<double, 2> mass{1.0, 1.0};
  std::array<Potential, 2> pot{};
  double coupling = 0.0;  // coupling * q1 * q2; nonzero breaks separability
  double hbar = 1.0;

  static ClassicalSystem one_particle(Potential p, double m = 1.0,
                                      double hbar_ = 1.0) {
    ClassicalSystem s;
    s.dims = 1;
    s.mass = {m, 1.0};
    s.pot = {p, Potential{}};
    s.hbar = hbar_;
    return s;
  }

  static ClassicalSystem two_particle(Potential p1, Potential p2,
                                      double m1 = 1.0, double m2 = 1.0,
                                      double hbar_ = 1.0) {
    ClassicalSystem s;
    s.dims = 2;
    s.mass = {m1, m2};
    s.pot = {p1, p2};
    s.hbar = hbar_;
    return s;
  }

  bool separable() const { return coupling == 0.0; }

  double potential(const double* q) const {
    double v = 0.0;
    for (int d = 0; d < dims; ++d) v += pot[d].value(q[d], mass[d]);
    if (dims == 2) v += coupling * q[0] * q[1];
    return v;
  }

  /// -dV/dq_d
  double force(const double* q, int d) const {
    double f = -pot[d].derivative(q[d], mass[d]);
    if (dims == 2) f -= coupling * q[1 - d];
    return f;
  }

  double kinetic(const double* qdot) const {
    double t = 0.0;
    for (int d = 0; d < dims; ++d) t += 0.5 * mass[d] * qdot[d] * qdot[d];
    return t;
  }

  double lagrangian(const double* q, const double* qdot) const {
    return kinetic(qdot) - potential(q);
  }

  double hamiltonian(const double* q, const double* p) const {
    double h = potential(q);
    for (int d = 0; d < dims; ++d) h += 0.5 * p[d] * p[d] / mass[d];
    return h;
  }

  /// Evaluate V on every node of a grid.
  RealField potential_field(const SpatialGrid& g) const {
    if (g.dims != dims)
      throw std::invalid_argument("potential_field: grid/system dims mismatch");
    RealField out(g);
    for (std::size_t i = 0; i < g.n[0]; ++i) {
      for (std::size_t j = 0; j < g.n[1]; ++j) {
        double q[2] = {g.coord(0, i), dims == 2 ? g.coord(1, j) : 0.0};
        out(i, j) = potential(q);
      }
    }
    return out;
  }
};

}  // namespace stoq

#endif  // STOQ_SYSTEM_HPP
