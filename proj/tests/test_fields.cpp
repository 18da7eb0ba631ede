#include <doctest.h>

#include <cmath>
#include <complex>

#include "stoq/fft.hpp"
#include "stoq/grid.hpp"
#include "stoq/interp.hpp"
#include "stoq/ops.hpp"
#include "stoq/polar.hpp"
#include "stoq/rng.hpp"
#include "stoq/schrodinger.hpp"

using namespace stoq;

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
}

TEST_CASE("fft round trip recovers the input") {
  const std::size_t n = 64;
  std::vector<std::complex<double>> v(n), orig;
  Stream rng(1, 0, 0);
  for (auto& z : v) z = {rng.next_double() - 0.5, rng.next_double() - 0.5};
  orig = v;
  fft_inplace(v.data(), n, false);
  fft_inplace(v.data(), n, true);
  for (std::size_t k = 0; k < n; ++k) {
    CHECK(std::abs(v[k] / static_cast<double>(n) - orig[k]) < 1e-12);
  }
}

TEST_CASE("spectral gradient of sin is cos on a periodic grid") {
  const SpatialGrid g = SpatialGrid::make_1d(128, 0.0, 2.0 * kPi,
                                             Boundary::periodic);
  RealField f(g);
  for (std::size_t i = 0; i < g.n[0]; ++i) f.v[i] = std::sin(g.coord(0, i));
  const RealField df = gradient(f, 0);
  for (std::size_t i = 0; i < g.n[0]; ++i)
    CHECK(std::abs(df.v[i] - std::cos(g.coord(0, i))) < 1e-10);
  const RealField lap = laplacian(f);
  for (std::size_t i = 0; i < g.n[0]; ++i)
    CHECK(std::abs(lap.v[i] + std::sin(g.coord(0, i))) < 1e-9);
}

TEST_CASE("hard-wall FD4 stencils are exact for quartic polynomials") {
  const SpatialGrid g = SpatialGrid::make_1d(64, -1.0, 2.0,
                                             Boundary::hard_wall);
  RealField f(g);
  auto poly = [](double q) { return q * q * q * q - 2.0 * q * q + q; };
  auto dpoly = [](double q) { return 4.0 * q * q * q - 4.0 * q + 1.0; };
  auto ddpoly = [](double q) { return 12.0 * q * q - 4.0; };
  for (std::size_t i = 0; i < g.n[0]; ++i) f.v[i] = poly(g.coord(0, i));
  const RealField df = gradient(f, 0);
  const RealField ddf = laplacian(f);
  for (std::size_t i = 0; i < g.n[0]; ++i) {
    CHECK(std::abs(df.v[i] - dpoly(g.coord(0, i))) < 1e-9);
    CHECK(std::abs(ddf.v[i] - ddpoly(g.coord(0, i))) < 1e-7);
  }
}

TEST_CASE("local FD4 gradient matches the analytic derivative") {
  const SpatialGrid g = SpatialGrid::make_1d(256, 0.0, 2.0 * kPi,
                                             Boundary::periodic);
  RealField f(g);
  for (std::size_t i = 0; i < g.n[0]; ++i) f.v[i] = std::sin(g.coord(0, i));
  const RealField df = gradient_local(f, 0);
  for (std::size_t i = 0; i < g.n[0]; ++i)
    CHECK(std::abs(df.v[i] - std::cos(g.coord(0, i))) < 1e-6);
}

TEST_CASE("local gradient errors stay local; spectral ones ring globally") {
  // A smooth field zeroed beyond |q| > 8 has an O(1) jump; the local
  // stencil is unaffected far from the jump while the spectral derivative
  // picks up global Gibbs oscillations.
  const SpatialGrid g = SpatialGrid::make_1d(512, -16.0, 32.0,
                                             Boundary::periodic);
  RealField f(g);
  for (std::size_t i = 0; i < g.n[0]; ++i) {
    const double q = g.coord(0, i);
    f.v[i] = std::abs(q) <= 8.0 ? std::cos(q) : 0.0;
  }
  const RealField dl = gradient_local(f, 0);
  const RealField ds = gradient(f, 0);
  double err_local = 0.0, err_spectral = 0.0;
  for (std::size_t i = 0; i < g.n[0]; ++i) {
    const double q = g.coord(0, i);
    if (std::abs(q) > 4.0) continue;
    err_local = std::max(err_local, std::abs(dl.v[i] + std::sin(q)));
    err_spectral = std::max(err_spectral, std::abs(ds.v[i] + std::sin(q)));
  }
  CHECK(err_local < 1e-6);
  CHECK(err_spectral > 1e-3);
}

TEST_CASE("divergence of a 2D vector field sums the component gradients") {
  const SpatialGrid g = SpatialGrid::make_2d(64, 64, 0.0, 0.0, 2.0 * kPi,
                                             2.0 * kPi, Boundary::periodic);
  std::vector<RealField> v(2, RealField(g));
  for (std::size_t i = 0; i < g.n[0]; ++i)
    for (std::size_t j = 0; j < g.n[1]; ++j) {
      v[0](i, j) = std::sin(g.coord(0, i));
      v[1](i, j) = std::cos(g.coord(1, j));
    }
  const RealField div = divergence(v);
  const RealField divl = divergence_local(v);
  for (std::size_t i = 0; i < g.n[0]; ++i)
    for (std::size_t j = 0; j < g.n[1]; ++j) {
      const double want =
          std::cos(g.coord(0, i)) - std::sin(g.coord(1, j));
      CHECK(std::abs(div(i, j) - want) < 1e-9);
      CHECK(std::abs(divl(i, j) - want) < 1e-5);
    }
}

TEST_CASE("cubic interpolation is exact on quadratics, near on cubics") {
  const SpatialGrid g = SpatialGrid::make_1d(64, -2.0, 4.0,
                                             Boundary::hard_wall);
  RealField f(g);
  // Catmull-Rom tangents are central differences, so quadratics are
  // reproduced exactly and cubics to O(dq^2).
  auto quad = [](double q) { return -q * q + 0.5 * q - 3.0; };
  auto cubic = [](double q) { return 2.0 * q * q * q - q * q + 0.5 * q - 3.0; };
  for (std::size_t i = 0; i < g.n[0]; ++i) f.v[i] = quad(g.coord(0, i));
  for (double q : {-0.73, 0.111, 1.2345, 1.618}) {
    CHECK(std::abs(interpolate(f, &q) - quad(q)) < 1e-10);
  }
  for (std::size_t i = 0; i < g.n[0]; ++i) f.v[i] = cubic(g.coord(0, i));
  for (double q : {-0.73, 0.111, 1.2345, 1.618}) {
    CHECK(std::abs(interpolate(f, &q) - cubic(q)) < 2e-4);
  }
}

TEST_CASE("plane wave decomposes into uniform density and constant gradS") {
  const SpatialGrid g = SpatialGrid::make_1d(64, 0.0, 2.0 * kPi,
                                             Boundary::periodic);
  const double L = g.extent[0];
  WaveFunction psi;
  psi.field = ComplexField(g);
  for (std::size_t i = 0; i < g.n[0]; ++i)
    psi.field.v[i] = std::polar(1.0 / std::sqrt(L), 2.0 * g.coord(0, i));
  const PolarFields f = polar_decompose(psi, 1.0);
  for (std::size_t i = 0; i < g.n[0]; ++i) {
    CHECK(std::abs(f.omega.v[i] - 1.0 / L) < 1e-12);
    CHECK(std::abs(f.gradS[0].v[i] - 2.0) < 1e-10);
  }
  CHECK(std::abs(f.omega_integral() - 1.0) < 1e-10);
}

TEST_CASE("real positive states carry zero phase gradient") {
  const SpatialGrid g = SpatialGrid::make_1d(512, -16.0, 32.0,
                                             Boundary::periodic);
  AnalyticParams p;
  const WaveFunction psi = analytic_state(AnalyticKind::sho_ground, p, 0.0, g);
  const PolarFields f = polar_decompose(psi, 1.0);
  for (std::size_t i = 0; i < g.n[0]; ++i)
    CHECK(std::abs(f.gradS[0].v[i]) < 1e-9);
  // density is the analytic Gaussian pi^{-1/2} exp(-q^2)
  for (std::size_t i = 0; i < g.n[0]; ++i) {
    const double q = g.coord(0, i);
    if (std::abs(q) > 4.0) continue;
    CHECK(std::abs(f.omega.v[i] - std::exp(-q * q) / std::sqrt(kPi)) < 1e-8);
  }
}

TEST_CASE("polar decomposition is invariant under a global phase rotation") {
  const SpatialGrid g = SpatialGrid::make_1d(256, -12.8, 25.6,
                                             Boundary::periodic);
  AnalyticParams p;
  p.q0 = 1.0;
  p.p0 = 1.0;
  WaveFunction psi = analytic_state(AnalyticKind::sho_coherent, p, 0.0, g);
  WaveFunction rot = psi;
  const std::complex<double> ph = std::polar(1.0, 0.7);
  for (auto& z : rot.field.v) z *= ph;
  const PolarFields fa = polar_decompose(psi, 1.0);
  const PolarFields fb = polar_decompose(rot, 1.0);
  for (std::size_t i = 0; i < g.n[0]; ++i) {
    CHECK(fa.omega.v[i] == doctest::Approx(fb.omega.v[i]).epsilon(1e-14));
    CHECK(std::abs(fa.gradS[0].v[i] - fb.gradS[0].v[i]) < 1e-8);
  }
}

TEST_CASE("polar round trip reconstructs the wave function") {
  const SpatialGrid g = SpatialGrid::make_1d(512, -16.0, 32.0,
                                             Boundary::periodic);
  AnalyticParams p;
  p.q0 = 1.0;
  p.p0 = 1.0;
  const WaveFunction psi = analytic_state(AnalyticKind::sho_coherent, p, 0.3, g);
  const PolarFields f = polar_decompose(psi, 1.0);
  WaveFunction rec = synthesize_wavefunction(f);
  // the synthesis anchors the phase at the reference node: align globally
  std::size_t kmax = 0;
  for (std::size_t k = 0; k < g.size(); ++k)
    if (std::norm(psi.field.v[k]) > std::norm(psi.field.v[kmax])) kmax = k;
  const std::complex<double> align =
      psi.field.v[kmax] / rec.field.v[kmax] /
      std::abs(psi.field.v[kmax] / rec.field.v[kmax]);
  for (auto& z : rec.field.v) z *= align;
  // residual lives in the far tail where the density is ~1e-12 of the peak
  CHECK(l2_distance(psi, rec) < 1e-4);
}

TEST_CASE("synthesis rejects a phase gradient with circulation") {
  const SpatialGrid g = SpatialGrid::make_2d(64, 64, -8.0, -8.0, 16.0, 16.0,
                                             Boundary::periodic);
  WaveFunction psi;
  psi.field = ComplexField(g);
  for (std::size_t i = 0; i < g.n[0]; ++i)
    for (std::size_t j = 0; j < g.n[1]; ++j) {
      const double x = g.coord(0, i), y = g.coord(1, j);
      psi.field(i, j) =
          std::complex<double>(x, y) * std::exp(-0.5 * (x * x + y * y));
    }
  psi.normalize();
  const PolarFields f = polar_decompose(psi, 1.0);
  CHECK_THROWS_AS(synthesize_wavefunction(f), std::domain_error);
}

TEST_CASE("polar decomposition rejects bad inputs") {
  const SpatialGrid g = SpatialGrid::make_1d(64, 0.0, 1.0, Boundary::periodic);
  WaveFunction zero;
  zero.field = ComplexField(g);
  CHECK_THROWS_AS(polar_decompose(zero, 1.0), std::invalid_argument);
  WaveFunction unnorm;
  unnorm.field = ComplexField(g);
  for (auto& z : unnorm.field.v) z = 5.0;
  CHECK_THROWS_AS(polar_decompose(unnorm, 1.0), std::invalid_argument);
  AnalyticParams p;
  const SpatialGrid g2 = SpatialGrid::make_1d(256, -12.8, 25.6,
                                              Boundary::periodic);
  const WaveFunction ok = analytic_state(AnalyticKind::sho_ground, p, 0.0, g2);
  CHECK_THROWS_AS(polar_decompose(ok, 0.0), std::invalid_argument);
}

TEST_CASE("dtS fields match the stationary phase rate of the ground state") {
  const SpatialGrid g = SpatialGrid::make_1d(512, -16.0, 32.0,
                                             Boundary::periodic);
  AnalyticParams p;
  const ClassicalSystem sys =
      ClassicalSystem::one_particle(Potential::harmonic(1.0));
  const WaveFunction psi = analytic_state(AnalyticKind::sho_ground, p, 0.0, g);

  const PolarFields f = polar_decompose(psi, 1.0, &sys);
  REQUIRE(f.has_dtS);
  for (std::size_t i = 0; i < g.n[0]; ++i) {
    if (std::abs(g.coord(0, i)) > 3.0) continue;
    CHECK(std::abs(f.dtS.v[i] + 0.5) < 1e-6);
  }

  const WaveFunction later =
      analytic_state(AnalyticKind::sho_ground, p, 1e-4, g);
  const RealField rate = phase_rate_from_frames(psi, later, 1.0);
  for (std::size_t i = 0; i < g.n[0]; ++i) {
    if (std::abs(g.coord(0, i)) > 3.0) continue;
    CHECK(std::abs(rate.v[i] + 0.5) < 1e-8);
  }
  CHECK_THROWS_AS(phase_rate_from_frames(later, psi, 1.0),
                  std::invalid_argument);
}

TEST_CASE("grids expose consistent geometry") {
  const SpatialGrid gp = SpatialGrid::make_1d(64, -1.0, 2.0,
                                              Boundary::periodic);
  CHECK(gp.dq(0) == doctest::Approx(2.0 / 64.0));
  CHECK(gp.coord(0, 0) == doctest::Approx(-1.0));
  const SpatialGrid gw = SpatialGrid::make_1d(63, -1.0, 2.0,
                                              Boundary::hard_wall);
  CHECK(gw.dq(0) == doctest::Approx(2.0 / 64.0));
  CHECK(gw.coord(0, 0) == doctest::Approx(-1.0 + 2.0 / 64.0));
  CHECK_THROWS_AS(SpatialGrid::make_1d(8, 0.0, 1.0, Boundary::periodic),
                  std::invalid_argument);
  CHECK_THROWS_AS(SpatialGrid::make_1d(64, 0.0, -1.0, Boundary::periodic),
                  std::invalid_argument);
}
