#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "emq/errors.hpp"
#include "emq/microdynamics.hpp"
#include "emq/stats.hpp"

using namespace emq;
using doctest::Approx;

namespace {

double gauss_cdf(double x, double sigma) { return 0.5 * std::erfc(-x / (sigma * std::sqrt(2.0))); }

double variance_of(const ScalarField& p) {
  const Grid& g = p.grid();
  double m1 = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double q = g.position(i)[0];
    m1 += g.weight(i) * p[i] * q;
    m2 += g.weight(i) * p[i] * q * q;
  }
  return m2 - m1 * m1;
}

}  // namespace

TEST_CASE("noiseless step drifts up the gradient") {
  const Grid domain{{-5.0, 5.0, 101, Boundary::reflecting}};
  ParticleEnsemble ens = ParticleEnsemble::at_point(domain, 3, {1.0, 0, 0}, 1);
  const auto next = langevin_step(ens, FreeEnergyModel::inverted_quadratic(1.0), {1.0, 0.0, 1.0}, 0.01);
  for (std::size_t i = 0; i < next.size(); ++i) CHECK(next.position(i)[0] == 1.01);
}

TEST_CASE("one diffusive step has variance 2 D dt") {
  const Grid domain{{-5.0, 5.0, 101, Boundary::periodic}};
  ParticleEnsemble ens = ParticleEnsemble::at_point(domain, 100000, {0.0, 0, 0}, 42);
  langevin_run(ens, FreeEnergyModel::constant(), {1.0, 0.5, 1.0}, 0.01, 1);
  const auto q = ens.coordinates(0);
  const double var = stats::variance(q);
  // standard error of a Gaussian sample variance: sigma^2 sqrt(2 / (n - 1))
  const double se = 0.01 * std::sqrt(2.0 / static_cast<double>(q.size() - 1));
  CHECK(std::abs(var - 0.01) < 3.0 * se);
}

TEST_CASE("oversized steps are rejected") {
  const Grid domain{{-1.0, 1.0, 21, Boundary::reflecting}};
  ParticleEnsemble ens = ParticleEnsemble::at_point(domain, 2, {0.5, 0, 0}, 1);
  CHECK_THROWS_AS(langevin_step(ens, FreeEnergyModel::quadratic_well(100.0), {1.0, 0.0, 1.0}, 0.1), NumericalError);
  CHECK_THROWS_AS(langevin_step(ens, FreeEnergyModel::constant(), {1.0, 0.0, 1.0}, 0.0), InvalidArgument);
}

TEST_CASE("long-run ensemble matches exp(gamma F / D)") {
  const Grid domain{{-4.0, 4.0, 161, Boundary::reflecting}};
  ParticleEnsemble ens = ParticleEnsemble::at_point(domain, 100000, {0.0, 0, 0}, 2024);
  const DriftDiffusionParams params{1.0, 0.25, 1.0};
  langevin_run(ens, FreeEnergyModel::quadratic_well(1.0), params, 0.01, 800);
  // exp(-2 q^2) is a Gaussian with sigma = 1/2
  const auto q = ens.coordinates(0);
  CHECK(stats::ks_distance(q, [](double x) { return gauss_cdf(x, 0.5); }) < stats::ks_critical(q.size(), 0.01));

  const ScalarField fp = stationary_density(domain, FreeEnergyModel::quadratic_well(1.0), params);
  CHECK(l1_distance(estimate_density(ens, domain, 0.05), fp) <= 0.02);
}

TEST_CASE("positions stay inside the domain") {
  for (Boundary b : {Boundary::periodic, Boundary::reflecting, Boundary::absorbing}) {
    const Grid domain{{-1.0, 1.0, 21, b}, {0.0, 2.0, 21, b}};
    ParticleEnsemble ens = ParticleEnsemble::uniform(domain, 2000, 9);
    langevin_run(ens, FreeEnergyModel::plane_phase({3.0, -2.0, 0.0}, 0.0), {1.0, 0.3, 1.0}, 0.01, 200);
    for (std::size_t i = 0; i < ens.size(); ++i) {
      if (!ens.alive[i]) continue;
      const auto x = ens.position(i);
      CHECK(x[0] >= -1.0);
      CHECK(x[0] <= 1.0);
      CHECK(x[1] >= 0.0);
      CHECK(x[1] <= 2.0);
    }
    if (b == Boundary::absorbing) CHECK(ens.alive_count() < ens.size());
  }
}

TEST_CASE("identical seeds give identical trajectories") {
  const Grid domain{{-3.0, 3.0, 61, Boundary::periodic}};
  auto run = [&](std::uint64_t seed) {
    ParticleEnsemble ens = ParticleEnsemble::uniform(domain, 500, seed);
    langevin_run(ens, FreeEnergyModel::double_well(1.0, 1.0), {1.0, 0.2, 1.0}, 0.01, 100);
    std::ostringstream os;
    write_trajectories(os, ens);
    return os.str();
  };
  CHECK(run(5) == run(5));
  CHECK(run(5) != run(6));
}

TEST_CASE("free-energy gradients agree with finite differences at order 2") {
  const std::vector<FreeEnergyModel> presets{FreeEnergyModel::quadratic_well(1.3, {0.2, -0.1, 0}),
                                             FreeEnergyModel::inverted_quadratic(0.7),
                                             FreeEnergyModel::double_well(2.0, 1.1),
                                             FreeEnergyModel::plane_phase({0.4, 1.2, 0}, 0.3)};
  const Point3 q{0.37, -0.81, 0.0};
  for (const auto& F : presets) {
    double prev = 0.0;
    for (double h : {1e-2, 5e-3}) {
      double err = 0.0;
      for (std::size_t k = 0; k < 2; ++k) {
        Point3 a = q, b = q;
        a[k] += h;
        b[k] -= h;
        err = std::max(err, std::abs((F.value(0.2, a) - F.value(0.2, b)) / (2 * h) - F.gradient(0.2, q)[k]));
      }
      if (prev > 1e-12) CHECK(prev / std::max(err, 1e-300) >= 3.5);
      prev = err;
    }
  }
}

TEST_CASE("heat kernel: variance grows as sigma0^2 + 2 D t") {
  const Grid g{{-10.0, 10.0, 401, Boundary::reflecting}};
  auto p0 = ScalarField::from_function(g, [](const Point3& q) { return std::exp(-q[0] * q[0] / 2.0); });
  normalize_density(p0);
  const DriftDiffusionParams params{1.0, 0.5, 1.0};
  FokkerPlanckOptions opt;
  opt.record_every = 100;
  const auto res = evolve_fokker_planck(p0, FreeEnergyModel::constant(), params, 0.005, 400, opt);
  for (std::size_t f = 0; f < res.frames.size(); ++f) {
    CHECK(variance_of(res.frames[f]) == Approx(1.0 + 2.0 * 0.5 * res.times[f]).epsilon(0.005));
  }
}

TEST_CASE("probability is conserved at every step") {
  const Grid g{{-3.0, 3.0, 121, Boundary::reflecting}, {0.0, 6.0, 60, Boundary::periodic}};
  auto p0 = ScalarField::from_function(g, [](const Point3& q) { return 1.0 + 0.9 * std::sin(3 * q[0] + q[1]); });
  normalize_density(p0);
  for (TimeScheme scheme : {TimeScheme::explicit_euler, TimeScheme::implicit_euler}) {
    FokkerPlanckOptions opt{scheme, 1};
    const auto res = evolve_fokker_planck(p0, FreeEnergyModel::double_well(0.5, 1.0), {1.0, 0.1, 1.0}, 0.0002, 50, opt);
    CHECK(res.max_mass_drift < 1e-10);
    for (const auto& f : res.frames) CHECK(std::abs(integrate(f) - 1.0) < 1e-10);
  }
}

TEST_CASE("explicit scheme enforces its stability bound") {
  const Grid g{{-1.0, 1.0, 101, Boundary::reflecting}};
  const ScalarField p0(g, 0.5);
  FokkerPlanckOptions opt{TimeScheme::explicit_euler, 1};
  CHECK_THROWS_AS(evolve_fokker_planck(p0, FreeEnergyModel::constant(), {1.0, 1.0, 1.0}, 0.01, 1, opt), NumericalError);
}

TEST_CASE("density relaxes to the stationary field") {
  const Grid g{{-4.0, 4.0, 201, Boundary::reflecting}};
  const DriftDiffusionParams params{1.0, 0.25, 1.0};
  const auto F = FreeEnergyModel::quadratic_well(1.0);
  auto p0 = ScalarField::from_function(g, [](const Point3& q) { return std::exp(-(q[0] - 1.5) * (q[0] - 1.5)); });
  normalize_density(p0);
  // relaxation time 1 / gamma k = 1; run ten of them
  FokkerPlanckOptions opt;
  opt.record_every = 2000;
  const auto res = evolve_fokker_planck(p0, F, params, 0.005, 2000, opt);
  CHECK(l1_distance(res.frames.back(), stationary_density(g, F, params)) <= 1e-3);
}

TEST_CASE("stationary current vanishes") {
  const Grid g{{-3.0, 3.0, 151, Boundary::reflecting}, {-2.0, 2.0, 41, Boundary::periodic}};
  const DriftDiffusionParams params{0.8, 0.3, 1.0};
  const auto F = FreeEnergyModel::double_well(1.0, 1.2);
  const ScalarField p = stationary_density(g, F, params);
  CHECK(face_currents(p, F.sample(g, 0.0), params).max_norm() <= 1e-6 * max_abs(p));
}

TEST_CASE("density estimates") {
  const Grid g{{-2.0, 2.0, 41, Boundary::periodic}};
  const ParticleEnsemble point = ParticleEnsemble::at_point(g, 1000, g.position(20), 3);
  const ScalarField peak = estimate_density(point, g, g.spacing(0));
  CHECK(integrate(peak) == Approx(1.0).epsilon(1e-12));
  std::size_t nonzero = 0;
  for (double v : peak.values()) nonzero += v > 1e-12 ? 1 : 0;
  CHECK(nonzero == 1);

  const std::size_t n = 200000;
  const ParticleEnsemble flat = ParticleEnsemble::uniform(g, n, 4);
  const ScalarField u = estimate_density(flat, g, g.spacing(0));
  const double level = 1.0 / 4.0, per_bin = static_cast<double>(n) / static_cast<double>(g.size());
  for (double v : u.values()) CHECK(std::abs(v - level) / level <= 4.0 / std::sqrt(per_bin));

  CHECK_THROWS_AS(estimate_density(flat, g, 0.5 * g.spacing(0)), InvalidArgument);
}

TEST_CASE("weak convergence of a second moment") {
  // <q^2>(t) for an Ornstein-Uhlenbeck process started at q = 1
  const DriftDiffusionParams params{1.0, 0.25, 1.0};
  const Grid domain{{-20.0, 20.0, 401, Boundary::reflecting}};
  const double exact = std::exp(-1.0) + 0.25 * (1.0 - std::exp(-1.0));
  for (double dt : {0.02, 0.01}) {
    for (std::size_t n : {10000u, 40000u}) {
      ParticleEnsemble ens = ParticleEnsemble::at_point(domain, n, {1.0, 0, 0}, 77);
      langevin_run(ens, FreeEnergyModel::quadratic_well(1.0), params, dt, static_cast<std::size_t>(0.5 / dt + 0.5));
      std::vector<double> phi;
      for (double q : ens.coordinates(0)) phi.push_back(q * q);
      const double se = std::sqrt(stats::variance(phi) / static_cast<double>(n));
      CHECK(std::abs(stats::mean(phi) - exact) <= dt + 4.0 * se);
    }
  }
}
