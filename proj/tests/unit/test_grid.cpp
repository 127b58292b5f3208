#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "emq/errors.hpp"
#include "emq/field_io.hpp"
#include "emq/grid.hpp"
#include "emq/random.hpp"
#include "emq/stats.hpp"

using namespace emq;
using doctest::Approx;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Random trigonometric polynomial, smooth and periodic on [0, 2pi)^2.
ScalarField random_smooth(const Grid& g, std::uint64_t seed) {
  CounterRng rng(seed, 0);
  double a[3][3][2];
  for (auto& r : a)
    for (auto& c : r)
      for (double& v : c) v = rng.normal();
  return ScalarField::from_function(g, [&](const Point3& q) {
    double s = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) s += a[i][j][0] * std::cos(i * q[0] + j * q[1]) + a[i][j][1] * std::sin(i * q[0] - j * q[1]);
    return s;
  });
}

Grid torus(std::size_t nx, std::size_t ny) {
  return Grid{{0.0, kTwoPi, nx, Boundary::periodic}, {0.0, kTwoPi, ny, Boundary::periodic}};
}

}  // namespace

TEST_CASE("spacing follows the boundary convention") {
  const Grid reflecting{{-5.0, 5.0, 101, Boundary::reflecting}};
  CHECK(reflecting.spacing(0) == Approx(0.1).epsilon(1e-14));
  const Grid periodic{{0.0, kTwoPi, 64, Boundary::periodic}};
  CHECK(periodic.spacing(0) == Approx(kTwoPi / 64).epsilon(1e-14));
  // index n is identified with index 0, so the last stored node sits one step short of upper
  CHECK(periodic.coordinate(0, 63) + periodic.spacing(0) == Approx(kTwoPi));
  CHECK(*periodic.neighbor(63, 0, 1) == 0);
  CHECK_FALSE(reflecting.neighbor(100, 0, 1).has_value());
}

TEST_CASE("grid construction rejects bad axes") {
  CHECK_THROWS_AS((Grid{{-1.0, 1.0, 3, Boundary::periodic}, {-1.0, 1.0, 50, Boundary::periodic}}), InvalidArgument);
  CHECK_THROWS_AS((Grid{{1.0, 1.0, 10, Boundary::reflecting}}), InvalidArgument);
  CHECK_THROWS_AS((Grid{{2.0, 1.0, 10, Boundary::reflecting}}), InvalidArgument);
}

TEST_CASE("point count is the product of the axis counts") {
  const Grid g{{0.0, 1.0, 7, Boundary::reflecting}, {0.0, 2.0, 5, Boundary::periodic}, {0.0, 3.0, 4, Boundary::absorbing}};
  CHECK(g.size() == 7 * 5 * 4);
  for (std::size_t i = 0; i < g.size(); i += 13) CHECK(g.flatten(g.unflatten(i)) == i);
  VectorField v(g);
  CHECK(v.dims() == 3);
  CHECK(v.component(2).size() == g.size());
}

TEST_CASE("derivatives of constant and linear fields") {
  for (Boundary b : {Boundary::periodic, Boundary::reflecting, Boundary::absorbing}) {
    const Grid g{{-2.0, 3.0, 41, b}};
    const ScalarField c(g, 3.7);
    CHECK(max_abs(gradient(c).component(0)) == 0.0);
    CHECK(max_abs(laplacian(c)) == 0.0);
  }
  const Grid g{{-2.0, 3.0, 41, Boundary::absorbing}};
  const auto f = ScalarField::from_function(g, [](const Point3& q) { return q[0]; });
  const auto d = gradient(f).component(0);
  for (std::size_t i = 1; i + 1 < g.size(); ++i) CHECK(d[i] == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("laplacian of sin converges at second order") {
  std::vector<double> hs, err;
  for (std::size_t n : {64, 128, 256}) {
    const Grid g{{0.0, kTwoPi, n, Boundary::periodic}};
    const auto f = ScalarField::from_function(g, [](const Point3& q) { return std::sin(q[0]); });
    const ScalarField lap = laplacian(f);
    hs.push_back(g.spacing(0));
    err.push_back(max_abs(lap + f));
  }
  CHECK(err[0] / err[1] == Approx(4.0).epsilon(0.01));
  CHECK(err[1] / err[2] == Approx(4.0).epsilon(0.01));
  CHECK(stats::convergence_order(hs, err) >= 1.98);
}

TEST_CASE("quadrature examples") {
  const Grid unit{{0.0, 1.0, 101, Boundary::reflecting}};
  CHECK(integrate(ScalarField(unit, 1.0)) == Approx(1.0).epsilon(1e-12));
  const Grid circle{{0.0, kTwoPi, 64, Boundary::periodic}};
  CHECK(std::abs(integrate(ScalarField::from_function(circle, [](const Point3& q) { return std::sin(q[0]); }))) < 1e-12);
  const Grid line{{-8.0, 8.0, 401, Boundary::reflecting}};
  const auto gauss = ScalarField::from_function(
      line, [](const Point3& q) { return std::exp(-0.5 * q[0] * q[0]) / std::sqrt(kTwoPi); });
  CHECK(std::abs(integrate(gauss) - 1.0) < 1e-8);
}

TEST_CASE("divergence theorem on random periodic fields") {
  const Grid g = torus(48, 40);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    VectorField v(g);
    v.component(0) = random_smooth(g, seed);
    v.component(1) = random_smooth(g, seed + 100);
    CHECK(std::abs(integrate(divergence(v))) < 1e-10);
  }
}

TEST_CASE("summation by parts on random periodic fields") {
  const Grid g = torus(36, 52);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const ScalarField f = random_smooth(g, seed), h = random_smooth(g, seed + 50);
    CHECK(std::abs(integrate_product(f, laplacian(h)) - integrate_product(h, laplacian(f))) < 1e-10);
  }
}

TEST_CASE("normalize_density") {
  const Grid g{{-1.0, 1.0, 21, Boundary::reflecting}};
  ScalarField p(g, 2.0);
  normalize_density(p);
  CHECK(integrate(p) == Approx(1.0).epsilon(1e-12));
  ScalarField zero(g);
  CHECK_THROWS_AS(normalize_density(zero), NumericalError);
}

TEST_CASE("mismatched grids are rejected") {
  const Grid a{{0.0, 1.0, 10, Boundary::reflecting}};
  const Grid b{{0.0, 1.0, 11, Boundary::reflecting}};
  CHECK_THROWS_AS(ScalarField(a) + ScalarField(b), InvalidArgument);
}

TEST_CASE("field files round-trip") {
  const Grid g{{-1.0, 1.0, 9, Boundary::absorbing}, {0.0, 2.0, 6, Boundary::periodic}};
  const auto f = ScalarField::from_function(g, [](const Point3& q) { return std::exp(q[0]) * std::cos(q[1]) / 3.0; });
  std::stringstream ss;
  write_field(ss, f, 0.125);
  const ScalarRecord r = read_scalar_field(ss);
  CHECK(r.field.grid() == g);
  REQUIRE(r.time.has_value());
  CHECK(*r.time == 0.125);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(r.field[i] == f[i]);

  ComplexField z(g);
  for (std::size_t i = 0; i < g.size(); ++i) z[i] = {f[i], -2.0 * f[i]};
  std::stringstream zs;
  write_field(zs, z);
  const ComplexRecord zr = read_complex_field(zs);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(zr.field[i] == z[i]);
}
