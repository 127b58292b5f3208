#include <cmath>
#include <numbers>

#include "doctest.h"
#include "emq/errors.hpp"
#include "emq/random.hpp"
#include "emq/stats.hpp"
#include "emq/thermo.hpp"

using namespace emq;
using doctest::Approx;

namespace {

// Binomial oracle for M independent two-state neurons.
NeuronCount binomial(double M, double mu, double a, double T) {
  const double f = 1.0 / (1.0 + std::exp(-(mu - a) / T));
  return {M * f, std::sqrt(M * f * (1.0 - f))};
}

std::vector<double> as_doubles(const std::vector<std::size_t>& s, std::size_t skip) {
  return {s.begin() + static_cast<std::ptrdiff_t>(skip), s.end()};
}

}  // namespace

TEST_CASE("half-filled pool") {
  const auto pool = GrandPotentialModel::independent_pool(100.0, 0.0);
  const NeuronCount c = mean_and_delta_N(pool, 0.0, 1.0);
  CHECK(c.mean == Approx(50.0).epsilon(1e-6));
  CHECK(c.delta == Approx(5.0).epsilon(1e-6));
}

TEST_CASE("neuron statistics follow the binomial oracle") {
  const auto pool = GrandPotentialModel::independent_pool(100.0, 0.3);
  for (double mu : {-1.7, 0.3, 2.4}) {
    for (double T : {0.5, 1.0, 2.0}) {
      const NeuronCount c = mean_and_delta_N(pool, mu, T);
      const NeuronCount b = binomial(100.0, mu, 0.3, T);
      CHECK(c.mean == Approx(b.mean).epsilon(1e-5));
      CHECK(c.delta == Approx(b.delta).epsilon(1e-4));
    }
  }
}

TEST_CASE("empty pool limit") {
  const auto pool = GrandPotentialModel::independent_pool(100.0, 0.0);
  const NeuronCount c = mean_and_delta_N(pool, -20.0, 1.0);
  CHECK(c.mean < 1e-6);
  // the binomial width sqrt(100 e^-20) = 4.5e-4 is the correct value here
  CHECK(c.delta == Approx(binomial(100.0, -20.0, 0.0, 1.0).delta).epsilon(1e-3));
}

TEST_CASE("empty pool width below 1e-6" * doctest::should_fail(true) *
          doctest::description("unattainable: the exact width at mu - a = -20 T is 4.5e-4")) {
  const auto pool = GrandPotentialModel::independent_pool(100.0, 0.0);
  CHECK(mean_and_delta_N(pool, -20.0, 1.0).delta < 1e-6);
}

TEST_CASE("fluctuations vanish as T -> 0 away from half filling") {
  const auto pool = GrandPotentialModel::independent_pool(100.0, 0.0);
  double prev = 1e300;
  for (double T : {0.5, 0.2, 0.1, 0.05}) {
    const double d = mean_and_delta_N(pool, 1.0, T).delta;
    CHECK(d < prev);
    prev = d;
  }
  CHECK(prev < 1e-3);
}

TEST_CASE("tabulated grand potential reproduces the pool") {
  const auto pool = GrandPotentialModel::independent_pool(50.0, 0.0);
  std::vector<double> omega;
  for (int i = 0; i <= 200; ++i) omega.push_back(pool(-5.0 + 0.05 * i, 1.0));
  const auto table = GrandPotentialModel::tabulated(-5.0, 0.05, omega, 1.0);
  const NeuronCount a = mean_and_delta_N(pool, 0.7, 1.0), b = mean_and_delta_N(table, 0.7, 1.0);
  CHECK(b.mean == Approx(a.mean).epsilon(1e-4));
  CHECK(b.delta == Approx(a.delta).epsilon(1e-2));
}

TEST_CASE("Monte Carlo pool matches the derivatives at three fillings") {
  const auto model = GrandPotentialModel::independent_pool(100.0, 0.0);
  for (double mu : {-2.0, 0.0, 2.0}) {
    const NeuronPool pool{100, 0.0, 1.0, mu, 50};
    const auto n = as_doubles(sample_pool(pool, 100000, 17), 500);
    const NeuronCount c = mean_and_delta_N(model, mu, 1.0);
    CHECK(std::abs(stats::mean(n) - c.mean) <= 3.0 * stats::blocked_mean_error(n));
    CHECK(std::abs(std::sqrt(stats::variance(n)) - c.delta) <= 3.0 * stats::blocked_std_error(n));
  }
}

TEST_CASE("saturated single neuron") {
  const NeuronPool pool{1, 0.0, 1.0, 20.0, 0};
  const auto s = sample_pool(pool, 1000, 3);
  for (std::size_t i = 10; i < s.size(); ++i) CHECK(s[i] == 1);
}

TEST_CASE("pool sampling is deterministic and validated") {
  const NeuronPool pool{30, 0.5, 0.8, 0.2, 10};
  CHECK(sample_pool(pool, 500, 9) == sample_pool(pool, 500, 9));
  for (std::size_t n : sample_pool(pool, 500, 9)) CHECK(n <= 30);
  CHECK_THROWS_AS(sample_pool({30, 0.5, 0.0, 0.2, 10}, 10, 1), InvalidArgument);
  CHECK_THROWS_AS(sample_pool({30, 0.5, 1.0, 0.2, 31}, 10, 1), InvalidArgument);
}

TEST_CASE("quantized free energy") {
  CHECK(quantized_free_energy(0.0, 1.0, 5) == 5.0);
  CHECK(quantized_free_energy(-2.0, 0.5, 4) == 0.0);
  for (long long n : {0LL, 3LL, 41LL}) {
    CHECK(quantized_free_energy(1.25, 0.75, n + 1) - quantized_free_energy(1.25, 0.75, n) == 0.75);
  }
}

TEST_CASE("Planck constant from the chemical potential") {
  CHECK(planck_from_mu(2.0 * std::numbers::pi, 1.0) == Approx(1.0).epsilon(1e-15));
  CHECK(planck_from_mu(1.3, 2.0) == Approx(2.0 * planck_from_mu(1.3, 1.0)).epsilon(1e-15));
  CHECK(planck_from_mu(1.3, 1.0, PlanckBranch::negative) == -planck_from_mu(1.3, 1.0));
  CHECK_THROWS_AS(planck_from_mu(0.0, 1.0), NoMultivaluedStructure);
  CHECK_THROWS_WITH(planck_from_mu(-1.0, 1.0), doctest::Contains("no multivalued structure"));
}

TEST_CASE("Lagrange multiplier and hbar") {
  CHECK(lambda_from_hbar(1.0, 1.0, 1.0, 2.0) == Approx(1.0).epsilon(1e-15));
  for (double hbar : {0.1, 1.0, 3.7}) {
    const double lambda = lambda_from_hbar(0.3, 1.7, 0.9, hbar);
    CHECK(std::abs(hbar_from_lambda(0.3, 1.7, 0.9, lambda) - hbar) <= 1e-14 * hbar);
    CHECK(lambda_from_hbar(0.3, 1.7, 0.9, 2.0 * hbar) == Approx(lambda / 4.0).epsilon(1e-14));
  }
  CHECK_THROWS_AS(lambda_from_hbar(1.0, 1.0, 1.0, 0.0), InvalidArgument);
}

TEST_CASE("phase invariance") {
  const Grid g{{-5.0, 5.0, 101, Boundary::reflecting}};
  auto p = ScalarField::from_function(g, [](const Point3& q) { return std::exp(-q[0] * q[0]); });
  normalize_density(p);
  const auto F = ScalarField::from_function(g, [](const Point3& q) { return 0.3 * q[0] * q[0]; });
  const double mu = 1.1, eps = 0.8;
  CHECK(phase_invariance_check(p, F, mu, eps, mu * eps / (2.0 * std::numbers::pi), 3) <= 1e-12);
  // hbar = mu eps / pi: the shift is a phase of pi, so the deviation is 2 sqrt(p) at the peak
  CHECK(phase_invariance_check(p, F, mu, eps, mu * eps / std::numbers::pi, 1) ==
        Approx(2.0 * std::sqrt(max_abs(p))).epsilon(1e-12));
  CHECK(phase_invariance_check(p, F, mu, eps, 0.37, 0) == 0.0);
}

TEST_CASE("first law residual") {
  const NeuronPool pool{60, 0.0, 1.0, 0.4, 30};
  const auto n = sample_pool(pool, 400, 8);
  std::vector<double> N(n.begin(), n.end()), F;
  for (std::size_t v : n) F.push_back(quantized_free_energy(-3.0, 0.4, static_cast<long long>(v)));
  const FirstLawReport clean = first_law_residual(F, N, 0.4);
  CHECK(clean.max_abs <= 1e-12);
  CHECK_FALSE(clean.violated);

  CounterRng rng(1, 0);
  std::vector<double> noisy = F;
  for (double& f : noisy) f += 0.05 * rng.normal();
  const FirstLawReport dirty = first_law_residual(noisy, N, 0.4);
  CHECK(dirty.violated);
  CHECK(dirty.significance > 5.0);

  const std::vector<double> flat(10, 2.0), same(10, 7.0);
  CHECK(first_law_residual(flat, same, 0.4).max_abs == 0.0);
}

TEST_CASE("added entropy") {
  CHECK(added_entropy(5.0) == 10.0);
  CHECK(added_entropy(0.0) == 0.0);
  CHECK(added_entropy(3.0 * 1.7) == Approx(3.0 * added_entropy(1.7)));
}
