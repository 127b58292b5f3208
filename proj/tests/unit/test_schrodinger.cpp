#include <cmath>
#include <numbers>

#include "doctest.h"
#include "emq/errors.hpp"
#include "emq/madelung.hpp"
#include "emq/schrodinger.hpp"

using namespace emq;
using doctest::Approx;
using cplx = std::complex<double>;

namespace {

constexpr double kPi = std::numbers::pi;

ScalarField normalized(const Grid& g, const std::function<double(const Point3&)>& f) {
  auto p = ScalarField::from_function(g, f);
  normalize_density(p);
  return p;
}

ScalarField harmonic(const Grid& g, double omega = 1.0) {
  return ScalarField::from_function(g, [&](const Point3& q) {
    double r2 = 0.0;
    for (std::size_t k = 0; k < g.dims(); ++k) r2 += q[k] * q[k];
    return 0.5 * omega * omega * r2;
  });
}

double l2_distance(const WaveFunction& a, const WaveFunction& b) {
  ScalarField d(a.grid());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = std::norm(a.psi[i] - b.psi[i]);
  return std::sqrt(integrate(d));
}

}  // namespace

TEST_CASE("assemble examples") {
  const Grid g{{0.0, 1.0, 32, Boundary::periodic}};
  const WaveFunction flat = assemble(ScalarField(g, 1.0), ScalarField(g), 0.5, 1.0, 1.0);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(flat.psi[i] == cplx(1.0, 0.0));

  const double eps = 0.5, hbar = 0.8;
  const ScalarField p = normalized(g, [](const Point3& q) { return 1.0 + 0.5 * std::cos(2 * kPi * q[0]); });
  const auto F = ScalarField::from_function(g, [](const Point3& q) { return 0.7 * std::sin(2 * kPi * q[0]); });
  ScalarField shifted = F;
  for (double& v : shifted.values()) v += 3.0 * 2.0 * kPi * hbar / eps;
  const WaveFunction a = assemble(p, F, eps, hbar, 1.0), b = assemble(p, shifted, eps, hbar, 1.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    CHECK(std::abs(a.psi[i] - b.psi[i]) <= 1e-14);
    CHECK(std::abs(std::norm(a.psi[i]) - p[i]) <= 1e-14);
  }
  CHECK(norm(a) == Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(assemble(p, F, 0.0, hbar, 1.0), InvalidArgument);
}

TEST_CASE("decompose inverts assemble") {
  const Grid g{{-6.0, 6.0, 241, Boundary::reflecting}};
  const double eps = 0.9, hbar = 1.1;
  const ScalarField p = normalized(g, [](const Point3& q) { return std::exp(-0.5 * q[0] * q[0]); });
  const auto F = ScalarField::from_function(g, [](const Point3& q) { return 2.0 * q[0] + 0.4 * q[0] * q[0]; });
  const Decomposition d = decompose(assemble(p, F, eps, hbar, 1.0), eps);
  CHECK(d.free_energy_period == Approx(2 * kPi * hbar / eps));
  const VectorField gF = gradient(F), gd = gradient(d.free_energy);
  for (std::size_t i = 0; i < g.size(); ++i) {
    CHECK(std::abs(d.density[i] - p[i]) <= 1e-15);
    if (d.mask[i]) CHECK(std::abs(gd.component(0)[i] - gF.component(0)[i]) <= 1e-10);
  }
}

TEST_CASE("plane wave velocity") {
  const Grid g{{0.0, 2 * kPi, 64, Boundary::periodic}};
  const double hbar = 0.7, m = 1.9;
  const int k = 3;
  ComplexField psi(g);
  for (std::size_t i = 0; i < g.size(); ++i) psi[i] = std::polar(1.0 / std::sqrt(2 * kPi), k * g.position(i)[0]);
  const Decomposition d = decompose({psi, hbar, m}, 1.0);
  // the phase is linear, so the unwrapped central difference is exact
  for (double v : d.velocity.component(0).values()) CHECK(v == Approx(hbar * k / m).epsilon(1e-12));
}

TEST_CASE("vortex winding is recorded") {
  const Grid g{{-4.0, 4.0, 64, Boundary::reflecting}, {-4.0, 4.0, 64, Boundary::reflecting}};
  const double eps = 0.5, hbar = 1.0, m = 1.0;
  const double mu = 2 * kPi * hbar / eps;
  ComplexField psi(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Point3 q = g.position(i);
    psi[i] = cplx(q[0] - 0.03, q[1] - 0.02) * std::exp(-(q[0] * q[0] + q[1] * q[1]) / 4.0);
  }
  const WaveFunction wf{psi, hbar, m};
  const Decomposition d = decompose(wf, eps);
  CHECK(d.total_winding == 1);
  CHECK(d.free_energy_period == Approx(mu));

  // F jump around the core: circulation times m / eps
  const MadelungState st = to_madelung(wf);
  const double gamma = circulation(st, rectangle_loop(g, 20, 20, 44, 44));
  CHECK(gamma * m / eps == Approx(mu).epsilon(1e-10));
}

TEST_CASE("unitarity over many steps") {
  SUBCASE("Crank-Nicolson") {
    const Grid g{{-8.0, 8.0, 256, Boundary::absorbing}};
    const WaveFunction psi = gaussian_packet(g, {1.0, 0, 0}, 0.8, {0.5, 0, 0}, 1.0, 1.0);
    const Evolution ev = evolve(psi, harmonic(g), 0.001, 10000, {Scheme::crank_nicolson, 10000});
    CHECK(std::abs(norm(ev.frames.back()) - 1.0) <= 1e-9);
  }
  SUBCASE("split-step") {
    const Grid g{{-10.0, 10.0, 256, Boundary::periodic}};
    const WaveFunction psi = gaussian_packet(g, {}, 0.8, {0.5, 0, 0}, 1.0, 1.0);
    const Evolution ev = evolve(psi, harmonic(g, 0.3), 0.001, 10000, {Scheme::automatic, 10000});
    CHECK(std::abs(norm(ev.frames.back()) - 1.0) <= 1e-9);
  }
}

TEST_CASE("scheme must match the boundary") {
  const Grid g{{-8.0, 8.0, 64, Boundary::absorbing}};
  const WaveFunction psi = gaussian_packet(g, {}, 1.0, {}, 1.0, 1.0);
  CHECK_THROWS_AS(evolve(psi, ScalarField(g), 0.01, 1, {Scheme::split_step, 1}), InvalidArgument);
  CHECK_THROWS_AS(evolve(psi, ScalarField(g), -0.01, 1), InvalidArgument);
}

TEST_CASE("eigenstate acquires the energy phase") {
  const Grid g{{-8.0, 8.0, 401, Boundary::absorbing}};
  const ScalarField V = harmonic(g);
  const Spectrum sp = stationary_states(g, V, 1.0, 1.0, 1);
  const WaveFunction& phi = sp.states[0];
  const double T = 2 * kPi, dt = 2 * kPi / 8000;
  const Evolution ev = evolve(phi, V, dt, 8000, {Scheme::crank_nicolson, 8000});
  const cplx ov = overlap(phi, ev.frames.back());
  CHECK(std::abs(std::abs(ov) - 1.0) <= 1e-8);
  const double expected = -sp.energies[0] * T;
  const double err = std::remainder(std::arg(ov) - expected, 2 * kPi);
  CHECK(std::abs(err) <= 1e-4);
}

TEST_CASE("free packet spreading") {
  const Grid g{{-30.0, 30.0, 1024, Boundary::periodic}};
  const double s0 = 1.0, hbar = 1.0, m = 1.0;
  const WaveFunction psi = gaussian_packet(g, {}, s0, {}, hbar, m);
  const Evolution ev = evolve(psi, ScalarField(g), 0.01, 400, {Scheme::automatic, 100});
  for (std::size_t f = 0; f < ev.frames.size(); ++f) {
    const double t = ev.times[f];
    const double expected = s0 * s0 + std::pow(hbar * t / (2 * m * s0), 2);
    CHECK(position_variance(ev.frames[f], 0) == Approx(expected).epsilon(5e-3));
  }
}

TEST_CASE("harmonic and box spectra") {
  const Grid g{{-10.0, 10.0, 1001, Boundary::absorbing}};
  const Spectrum sp = stationary_states(g, harmonic(g), 1.0, 1.0, 4);
  for (std::size_t n = 0; n < 4; ++n) CHECK(sp.energies[n] == Approx(n + 0.5).epsilon(5e-3));
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) CHECK(std::abs(overlap(sp.states[i], sp.states[j]) - (i == j ? 1.0 : 0.0)) <= 1e-8);

  const Grid box{{0.0, 1.0, 401, Boundary::absorbing}};
  const Spectrum bs = stationary_states(box, ScalarField(box), 1.0, 1.0, 2);
  CHECK(bs.energies[1] / bs.energies[0] == Approx(4.0).epsilon(1e-2));
  CHECK_THROWS_AS(stationary_states(box, ScalarField(box), 1.0, 1.0, 11), InvalidArgument);
}

TEST_CASE("imaginary-time relaxation on a 2-D well") {
  const Grid g{{-6.0, 6.0, 48, Boundary::absorbing}, {-6.0, 6.0, 48, Boundary::absorbing}};
  const Spectrum sp = stationary_states(g, harmonic(g), 1.0, 1.0, 3, EigenMethod::imaginary_time);
  CHECK(sp.energies[0] == Approx(1.0).epsilon(2e-2));
  CHECK(sp.energies[1] == Approx(2.0).epsilon(2e-2));
  CHECK(sp.energies[2] == Approx(2.0).epsilon(2e-2));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(overlap(sp.states[i], sp.states[j]) - (i == j ? 1.0 : 0.0)) <= 1e-8);
}

TEST_CASE("gauge potential examples") {
  const Grid g{{-2.0, 2.0, 41, Boundary::absorbing}, {0.0, 1.0, 11, Boundary::reflecting}};
  const double eps = 0.6, e = 1.5, c = 0.8;
  const GaugeData flat = vector_potential(ScalarField(g, 2.0), eps, e);
  CHECK(max_abs(flat.potential.component(0)) == 0.0);
  const GaugeData lin = vector_potential(ScalarField::from_function(g, [&](const Point3& q) { return c * q[0]; }), eps, e);
  for (double v : lin.potential.component(0).values()) CHECK(v == Approx(eps * c / e).epsilon(1e-12));
  CHECK(max_abs(lin.potential.component(1)) == 0.0);
  const GaugeData curvy = vector_potential(
      ScalarField::from_function(g, [](const Point3& q) { return std::sin(q[0]) * std::cos(3 * q[1]); }), eps, e);
  CHECK(max_abs(curl_magnitude(curvy.potential)) <= 1e-10);
  CHECK_THROWS_AS(vector_potential(ScalarField(g), eps, 0.0), InvalidArgument);
}

TEST_CASE("gauge factorization") {
  const Grid g{{0.0, 1.0, 64, Boundary::periodic}};
  const double eps = 0.7, hbar = 1.2;
  const ScalarField p = normalized(g, [](const Point3& q) { return 1.0 + 0.3 * std::sin(2 * kPi * q[0]); });
  const auto O0 = ScalarField::from_function(g, [](const Point3& q) { return std::cos(2 * kPi * q[0]); });
  const auto O1 = ScalarField::from_function(g, [](const Point3& q) { return 0.4 * std::sin(4 * kPi * q[0]); });
  const WaveFunction full = assemble(p, O0 + O1, eps, hbar, 1.0);
  const WaveFunction tilde = gauge_assemble(p, O1, eps, hbar, 1.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    CHECK(std::abs(full.psi[i] - tilde.psi[i] * std::polar(1.0, O0[i] * eps / hbar)) <= 1e-14);
  }
}

TEST_CASE("gauged evolution") {
  const Grid g{{-8.0, 8.0, 256, Boundary::absorbing}};
  const double eps = 0.5, hbar = 1.0;
  const ScalarField V = harmonic(g);
  const WaveFunction tilde = gaussian_packet(g, {0.5, 0, 0}, 0.9, {0.3, 0, 0}, hbar, 1.0);

  SUBCASE("vanishing potential reduces to plain evolution") {
    const GaugeData zero = vector_potential(ScalarField(g), eps, 1.0);
    const Evolution a = evolve_gauged(tilde, V, zero, 0.005, 200, {Scheme::crank_nicolson, 50});
    const Evolution b = evolve(tilde, V, 0.005, 200, {Scheme::crank_nicolson, 50});
    for (std::size_t f = 0; f < a.frames.size(); ++f) CHECK(l2_distance(a.frames[f], b.frames[f]) <= 1e-12);
  }
  SUBCASE("pure gauge is equivalent to a phase change") {
    const auto O0 = ScalarField::from_function(g, [](const Point3& q) { return 1.3 * std::sin(q[0]) + 0.2 * q[0]; });
    const GaugeData gauge = vector_potential(O0, eps, 1.0);
    WaveFunction psi = tilde;
    for (std::size_t i = 0; i < g.size(); ++i) psi.psi[i] *= std::polar(1.0, O0[i] * eps / hbar);
    const Evolution a = evolve_gauged(tilde, V, gauge, 0.005, 400, {Scheme::crank_nicolson, 50});
    const Evolution b = evolve(psi, V, 0.005, 400, {Scheme::crank_nicolson, 50});
    for (std::size_t f = 0; f < a.frames.size(); ++f) {
      WaveFunction back = b.frames[f];
      for (std::size_t i = 0; i < g.size(); ++i) back.psi[i] *= std::polar(1.0, -O0[i] * eps / hbar);
      CHECK(l2_distance(a.frames[f], back) <= 1e-6);
    }
  }
  SUBCASE("norm over many steps") {
    const GaugeData gauge = vector_potential(
        ScalarField::from_function(g, [](const Point3& q) { return std::cos(q[0]); }), eps, 1.0);
    const Evolution a = evolve_gauged(tilde, V, gauge, 0.001, 10000, {Scheme::crank_nicolson, 10000});
    CHECK(std::abs(norm(a.frames.back()) - 1.0) <= 1e-9);
  }
}

TEST_CASE("energy conservation and Ehrenfest") {
  const Grid g{{-8.0, 8.0, 512, Boundary::absorbing}};
  const ScalarField V = harmonic(g);
  const WaveFunction psi = gaussian_packet(g, {1.0, 0, 0}, 0.9, {0.4, 0, 0}, 1.0, 1.0);
  const Evolution ev = evolve(psi, V, 0.001, 10000, {Scheme::crank_nicolson, 1000});
  const double e0 = energy(ev.frames.front(), V);
  CHECK(std::abs(energy(ev.frames.back(), V) - e0) <= 1e-8 * std::abs(e0));

  const double dt = 0.001;
  const Evolution fine = evolve(psi, V, dt, 2000, {Scheme::crank_nicolson, 1});
  double worst = 0.0;
  for (std::size_t f = 1; f + 1 < fine.frames.size(); f += 250) {
    const double dq = (position_mean(fine.frames[f + 1], 0) - position_mean(fine.frames[f - 1], 0)) / (2 * dt);
    const double pm = momentum_mean(fine.frames[f], 0);
    worst = std::max(worst, std::abs(dq - pm) / std::max(std::abs(pm), 0.1));
  }
  CHECK(worst <= 1e-3);
}

TEST_CASE("decomposed evolution agrees with the hydrodynamic solver") {
  std::vector<double> dist;
  for (std::size_t n : {256, 512}) {
    const Grid g{{-10.0, 10.0, n, Boundary::periodic}};
    const ScalarField V(g);
    const WaveFunction psi = gaussian_packet(g, {}, 1.0, {0.5, 0, 0}, 1.0, 1.0);
    const Evolution ev = evolve(psi, V, 0.01, 100, {Scheme::automatic, 25});
    MadelungState st = to_madelung(psi);
    double worst = 0.0;
    for (std::size_t f = 1; f < ev.frames.size(); ++f) {
      const double span = ev.times[f] - ev.times[f - 1];
      const auto sub = static_cast<std::size_t>(std::ceil(span / recommended_dt(st)));
      for (std::size_t s = 0; s < sub; ++s) st = madelung_step(st, V, span / static_cast<double>(sub));
      worst = std::max(worst, l2_distance(decompose(ev.frames[f], 1.0).density, st.density()));
    }
    dist.push_back(worst);
  }
  CHECK(dist[0] <= 1e-3);
  CHECK(dist[1] < dist[0]);
}
