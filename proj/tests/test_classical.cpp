#include <doctest.h>

#include <cmath>

#include "stoq/classical.hpp"
#include "stoq/ops.hpp"

using namespace stoq;

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
}

TEST_CASE("oscillator trajectory returns to cos(t) after one period") {
  const ClassicalSystem sys =
      ClassicalSystem::one_particle(Potential::harmonic(1.0));
  const ClassicalTrajectory tr =
      integrate_hamilton({1.0, 0.0}, {0.0, 0.0}, sys, 1e-3, 2.0 * kPi);
  for (std::size_t k = 0; k < tr.times.size(); k += 500) {
    CHECK(std::abs(tr.q[k][0] - std::cos(tr.times[k])) < 1e-6);
  }
  CHECK(std::abs(tr.q.back()[0] - std::cos(tr.times.back())) < 1e-6);
}

TEST_CASE("free motion is linear to roundoff") {
  const ClassicalSystem sys =
      ClassicalSystem::one_particle(Potential::free_particle());
  const ClassicalTrajectory tr =
      integrate_hamilton({0.5, 0.0}, {2.0, 0.0}, sys, 1e-2, 3.0);
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    CHECK(std::abs(tr.q[k][0] - (0.5 + 2.0 * tr.times[k])) < 1e-12);
    CHECK(tr.p[k][0] == 2.0);
  }
}

TEST_CASE("energy is conserved to 1e-6 relative over t=10") {
  const ClassicalSystem sys =
      ClassicalSystem::one_particle(Potential::harmonic(1.0));
  const ClassicalTrajectory tr =
      integrate_hamilton({1.0, 0.0}, {0.5, 0.0}, sys, 1e-3, 10.0);
  const double e0 = tr.energy(sys, 0);
  for (std::size_t k = 0; k < tr.times.size(); k += 1000)
    CHECK(std::abs(tr.energy(sys, k) - e0) / e0 < 1e-6);
  CHECK(std::abs(tr.energy(sys, tr.times.size() - 1) - e0) / e0 < 1e-6);
}

TEST_CASE("integration is time-reversible") {
  const ClassicalSystem sys =
      ClassicalSystem::one_particle(Potential::quartic_well(0.25, 0.1));
  const ClassicalTrajectory fwd =
      integrate_hamilton({1.2, 0.0}, {0.3, 0.0}, sys, 1e-3, 5.0);
  const ClassicalTrajectory bwd = integrate_hamilton(
      fwd.q.back(), {-fwd.p.back()[0], 0.0}, sys, 1e-3, 5.0);
  CHECK(std::abs(bwd.q.back()[0] - 1.2) < 1e-8);
  CHECK(std::abs(-bwd.p.back()[0] - 0.3) < 1e-8);
}

TEST_CASE("two-particle separable forces act blockwise") {
  const ClassicalSystem sys = ClassicalSystem::two_particle(
      Potential::harmonic(1.0), Potential::harmonic(2.0), 1.0, 2.0);
  const ClassicalTrajectory tr =
      integrate_hamilton({1.0, 0.5}, {0.0, 0.0}, sys, 1e-3, 1.0);
  // particle 1: omega 1; particle 2: omega 2 (mass cancels in q(t))
  CHECK(std::abs(tr.q.back()[0] - std::cos(1.0)) < 1e-5);
  CHECK(std::abs(tr.q.back()[1] - 0.5 * std::cos(2.0)) < 1e-5);
}

TEST_CASE("linear dynamics transports the ensemble variance exactly") {
  const ClassicalSystem sys =
      ClassicalSystem::one_particle(Potential::harmonic(1.0));
  // deterministic spread of initial conditions, p0 = 0: q(t) = q0 cos(t),
  // so Var(q(t))/Var(q0) = cos^2(t)
  std::vector<double> q0s, qts;
  for (int i = -10; i <= 10; ++i) q0s.push_back(0.13 * i);
  const double t = 1.0;
  for (double q0 : q0s) {
    const ClassicalTrajectory tr =
        integrate_hamilton({q0, 0.0}, {0.0, 0.0}, sys, 1e-3, t);
    qts.push_back(tr.q.back()[0]);
  }
  auto var = [](const std::vector<double>& x) {
    double m = 0.0;
    for (double v : x) m += v;
    m /= static_cast<double>(x.size());
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size());
  };
  const double ratio = var(qts) / var(q0s);
  CHECK(std::abs(ratio - std::cos(t) * std::cos(t)) < 1e-6);
}

TEST_CASE("velocity field divides the gradient by the mass") {
  const SpatialGrid g = SpatialGrid::make_1d(64, 0.0, 1.0, Boundary::periodic);
  const ClassicalSystem sys =
      ClassicalSystem::one_particle(Potential::free_particle(), 2.0);
  RealField grad(g, 3.0);  // plane-wave-like constant gradS = 3
  const std::vector<RealField> v =
      classical_velocity_field(sys, {grad});
  for (double x : v[0].v) CHECK(x == doctest::Approx(1.5));

  RealField zero(g, 0.0);
  const std::vector<RealField> v0 = classical_velocity_field(sys, {zero});
  for (double x : v0[0].v) CHECK(x == 0.0);

  CHECK_THROWS_AS(classical_velocity_field(sys, {grad, grad}),
                  std::invalid_argument);
}

TEST_CASE("integrator rejects non-positive steps") {
  const ClassicalSystem sys =
      ClassicalSystem::one_particle(Potential::harmonic(1.0));
  CHECK_THROWS_AS(integrate_hamilton({0, 0}, {0, 0}, sys, 0.0, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(integrate_hamilton({0, 0}, {0, 0}, sys, 1e-3, -1.0),
                  std::invalid_argument);
}
