#include <doctest.h>

#include <cmath>
#include <complex>

#include "stoq/schrodinger.hpp"

using namespace stoq;

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;

double mean_position(const WaveFunction& psi) {
  const SpatialGrid& g = psi.grid();
  double m = 0.0;
  for (std::size_t i = 0; i < g.n[0]; ++i)
    m += g.coord(0, i) * std::norm(psi.field.v[i]);
  return m * g.cell_volume();
}

double position_sigma(const WaveFunction& psi) {
  const SpatialGrid& g = psi.grid();
  const double m = mean_position(psi);
  double v = 0.0;
  for (std::size_t i = 0; i < g.n[0]; ++i) {
    const double d = g.coord(0, i) - m;
    v += d * d * std::norm(psi.field.v[i]);
  }
  return std::sqrt(v * g.cell_volume());
}
}  // namespace

TEST_CASE("coherent packet center follows cos(t) over two periods") {
  const SpatialGrid g = SpatialGrid::make_1d(512, -16.0, 32.0,
                                             Boundary::periodic);
  const ClassicalSystem sys =
      ClassicalSystem::one_particle(Potential::harmonic(1.0));
  AnalyticParams p;
  p.q0 = 1.0;
  PropagatorConfig cfg;
  cfg.dt_solver = 1e-3;
  cfg.steps = static_cast<std::size_t>(std::llround(4.0 * kPi / cfg.dt_solver));
  double max_err = 0.0;
  std::size_t frame = 0;
  propagate(analytic_state(AnalyticKind::sho_coherent, p, 0.0, g), sys, cfg,
            [&](const WaveFunction& psi) {
              if (frame++ % 500 == 0) {
                const double t = psi.time;
                max_err = std::max(max_err,
                                   std::abs(mean_position(psi) - std::cos(t)));
              }
            });
  CHECK(max_err < 1e-4);
}

TEST_CASE("free Gaussian width spreads to sqrt(2) at t=2") {
  const SpatialGrid g = SpatialGrid::make_1d(512, -16.0, 32.0,
                                             Boundary::periodic);
  const ClassicalSystem sys =
      ClassicalSystem::one_particle(Potential::free_particle());
  AnalyticParams p;
  p.sigma0 = 1.0;
  PropagatorConfig cfg;
  cfg.dt_solver = 1e-3;
  cfg.steps = 2000;
  const WaveFunction psi =
      propagate(analytic_state(AnalyticKind::free_gaussian, p, 0.0, g), sys,
                cfg);
  CHECK(std::abs(position_sigma(psi) - std::sqrt(2.0)) < 1e-4);
  const WaveFunction exact =
      analytic_state(AnalyticKind::free_gaussian, p, 2.0, g);
  CHECK(l2_distance(psi, exact) < 1e-6);
}

TEST_CASE("plane wave under V=0 acquires only the kinetic phase") {
  const SpatialGrid g = SpatialGrid::make_1d(64, 0.0, 2.0 * kPi,
                                             Boundary::periodic);
  const ClassicalSystem sys =
      ClassicalSystem::one_particle(Potential::free_particle());
  const double k = 4.0;  // commensurate with the box
  WaveFunction psi;
  psi.field = ComplexField(g);
  for (std::size_t i = 0; i < g.n[0]; ++i)
    psi.field.v[i] = std::polar(1.0 / std::sqrt(g.extent[0]),
                                k * g.coord(0, i));
  PropagatorConfig cfg;
  cfg.dt_solver = 1e-2;
  cfg.steps = 100;
  const WaveFunction out = propagate(psi, sys, cfg);
  const double t = 1.0;
  for (std::size_t i = 0; i < g.n[0]; ++i) {
    const std::complex<double> want =
        psi.field.v[i] * std::polar(1.0, -0.5 * k * k * t);
    CHECK(std::abs(out.field.v[i] - want) < 1e-12);
  }
}

TEST_CASE("both solvers conserve norm and energy over 1e4 steps") {
  const SpatialGrid g = SpatialGrid::make_1d(512, -16.0, 32.0,
                                             Boundary::periodic);
  const ClassicalSystem sys =
      ClassicalSystem::one_particle(Potential::harmonic(1.0));
  AnalyticParams p;
  p.q0 = 1.0;
  const WaveFunction psi0 =
      analytic_state(AnalyticKind::sho_coherent, p, 0.0, g);
  const double e0 = energy_expectation(psi0, sys);
  for (PropagatorMethod m :
       {PropagatorMethod::split_step, PropagatorMethod::crank_nicolson}) {
    PropagatorConfig cfg;
    cfg.method = m;
    cfg.dt_solver = 1e-3;
    cfg.steps = 10000;
    const WaveFunction out = propagate(psi0, sys, cfg);
    CHECK(std::abs(out.norm_sq() - 1.0) < 1e-8);
    CHECK(std::abs(energy_expectation(out, sys) - e0) / e0 < 1e-6);
  }
}

TEST_CASE("split-step error shrinks at second order in dt") {
  const SpatialGrid g = SpatialGrid::make_1d(512, -16.0, 32.0,
                                             Boundary::periodic);
  const ClassicalSystem sys =
      ClassicalSystem::one_particle(Potential::harmonic(1.0));
  AnalyticParams p;
  p.q0 = 1.0;
  const WaveFunction psi0 =
      analytic_state(AnalyticKind::sho_coherent, p, 0.0, g);
  const WaveFunction exact =
      analytic_state(AnalyticKind::sho_coherent, p, 0.5, g);
  auto err_at = [&](double dt) {
    PropagatorConfig cfg;
    cfg.dt_solver = dt;
    cfg.steps = static_cast<std::size_t>(std::llround(0.5 / dt));
    return l2_distance(propagate(psi0, sys, cfg), exact);
  };
  const double e1 = err_at(4e-3), e2 = err_at(2e-3);
  CHECK(e1 / e2 > 3.2);
  CHECK(e1 / e2 < 4.8);
}

TEST_CASE("spatial refinement reduces the propagation error") {
  const ClassicalSystem sys =
      ClassicalSystem::one_particle(Potential::free_particle());
  AnalyticParams p;
  // a narrow packet keeps the coarse grid under-resolved so the spectral
  // truncation error dominates the comparison
  p.sigma0 = 0.25;
  auto err_at = [&](std::size_t n) {
    const SpatialGrid g = SpatialGrid::make_1d(n, -16.0, 32.0,
                                               Boundary::periodic);
    PropagatorConfig cfg;
    cfg.dt_solver = 1e-3;
    cfg.steps = 500;
    const WaveFunction out =
        propagate(analytic_state(AnalyticKind::free_gaussian, p, 0.0, g), sys,
                  cfg);
    return l2_distance(out, analytic_state(AnalyticKind::free_gaussian, p,
                                           0.5, g));
  };
  CHECK(err_at(128) < err_at(64) / 10.0);
}

TEST_CASE("2D split-step preserves product structure for separable systems") {
  const SpatialGrid g1 = SpatialGrid::make_1d(128, -12.8, 25.6,
                                              Boundary::periodic);
  const SpatialGrid g2 = SpatialGrid::make_2d(128, 128, -12.8, -12.8, 25.6,
                                              25.6, Boundary::periodic);
  const ClassicalSystem s1 =
      ClassicalSystem::one_particle(Potential::harmonic(1.0));
  const ClassicalSystem s12 = ClassicalSystem::two_particle(
      Potential::harmonic(1.0), Potential::harmonic(1.0));
  AnalyticParams pc;
  pc.q0 = 1.0;
  AnalyticParams pg;
  const WaveFunction a = analytic_state(AnalyticKind::sho_coherent, pc, 0.0, g1);
  const WaveFunction b = analytic_state(AnalyticKind::sho_ground, pg, 0.0, g1);

  PropagatorConfig cfg;
  cfg.dt_solver = 1e-3;
  cfg.steps = 500;
  const WaveFunction joint = propagate(product_state(a, b, g2), s12, cfg);
  const WaveFunction a1 = propagate(a, s1, cfg);
  const WaveFunction b1 = propagate(b, s1, cfg);
  WaveFunction want = product_state(a1, b1, g2);
  want.time = joint.time;
  CHECK(l2_distance(joint, want) < 1e-8);
}

TEST_CASE("box eigenstate is stationary under Crank-Nicolson") {
  const SpatialGrid g = SpatialGrid::make_1d(256, 0.0, 2.0 * kPi,
                                             Boundary::hard_wall);
  const ClassicalSystem sys =
      ClassicalSystem::one_particle(Potential::box_well());
  AnalyticParams p;
  p.n = 1;
  const WaveFunction psi0 =
      analytic_state(AnalyticKind::box_eigenstate, p, 0.0, g);
  PropagatorConfig cfg;
  cfg.method = PropagatorMethod::crank_nicolson;
  cfg.dt_solver = 1e-4;
  cfg.steps = 2000;
  const WaveFunction out = propagate(psi0, sys, cfg);
  CHECK(std::abs(out.norm_sq() - 1.0) < 1e-10);
  const WaveFunction exact =
      analytic_state(AnalyticKind::box_eigenstate, p, 0.2, g);
  CHECK(l2_distance(out, exact) < 1e-5);
}

TEST_CASE("propagator rejects unsupported configurations") {
  const SpatialGrid wall = SpatialGrid::make_1d(256, 0.0, 2.0 * kPi,
                                                Boundary::hard_wall);
  const SpatialGrid g2 = SpatialGrid::make_2d(32, 32, 0.0, 0.0, 4.0, 4.0,
                                              Boundary::periodic);
  const ClassicalSystem s1 =
      ClassicalSystem::one_particle(Potential::free_particle());
  const ClassicalSystem s2 = ClassicalSystem::two_particle(
      Potential::free_particle(), Potential::free_particle());
  PropagatorConfig cfg;
  cfg.dt_solver = 1e-5;
  CHECK_THROWS_AS(Propagator(wall, s1, cfg), std::invalid_argument);
  PropagatorConfig cn2;
  cn2.method = PropagatorMethod::crank_nicolson;
  cn2.dt_solver = 1e-5;
  CHECK_THROWS_AS(Propagator(g2, s2, cn2), std::invalid_argument);
  PropagatorConfig coarse;
  coarse.method = PropagatorMethod::crank_nicolson;
  coarse.dt_solver = 1.0;  // far above the dq^2 m/hbar accuracy bound
  const SpatialGrid g1 = SpatialGrid::make_1d(512, -16.0, 32.0,
                                              Boundary::periodic);
  CHECK_THROWS_AS(Propagator(g1, s1, coarse), std::invalid_argument);

  AnalyticParams p;
  CHECK_THROWS_AS(analytic_state(AnalyticKind::box_eigenstate, p, 0.0, g1),
                  std::invalid_argument);
  WaveFunction unnorm;
  unnorm.field = ComplexField(g1);
  for (auto& z : unnorm.field.v) z = 1.0;
  PropagatorConfig ok;
  ok.dt_solver = 1e-3;
  ok.steps = 1;
  CHECK_THROWS_AS(propagate(unnorm, s1, ok), std::invalid_argument);
}
