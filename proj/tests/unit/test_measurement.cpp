#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "emq/errors.hpp"
#include "emq/measurement.hpp"
#include "emq/schrodinger.hpp"

using namespace emq;
using doctest::Approx;
using cplx = std::complex<double>;

namespace {

constexpr double kPi = std::numbers::pi;

CMatrix sigma_x() {
  CMatrix s(2, 2);
  s << 0, 1, 1, 0;
  return s;
}

double unitarity_error(const CMatrix& U) {
  return (U.adjoint() * U - CMatrix::Identity(U.rows(), U.cols())).cwiseAbs().maxCoeff();
}

MeasurementSet two_outcome(double w0) {
  CMatrix a = CMatrix::Zero(2, 2), b = CMatrix::Zero(2, 2);
  a(0, 0) = std::sqrt(w0);
  a(1, 1) = std::sqrt(1 - w0);
  b(0, 0) = std::sqrt(1 - w0);
  b(1, 1) = std::sqrt(w0);
  return {{a, b}, true};
}

}  // namespace

TEST_CASE("position states") {
  const StateVector a = position_state(1, 2);
  CHECK(a.amplitudes(0) == cplx(1.0));
  CHECK(a.amplitudes(1) == cplx(0.0));
  CHECK(a.amplitudes.norm() == 1.0);
  for (std::size_t i = 1; i <= 5; ++i)
    for (std::size_t j = 1; j <= 5; ++j)
      CHECK(position_state(i, 5).amplitudes.dot(position_state(j, 5).amplitudes) == cplx(i == j ? 1.0 : 0.0));
  CHECK_THROWS_AS(position_state(0, 3), InvalidArgument);
  CHECK_THROWS_AS(position_state(4, 3), InvalidArgument);
}

TEST_CASE("unitary examples") {
  const CMatrix H = random_hermitian(6, 3);
  CHECK((unitary(H, 0.0, 1.0) - CMatrix::Identity(6, 6)).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK((unitary(CMatrix::Zero(6, 6), 3.7, 1.0) - CMatrix::Identity(6, 6)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(unitarity_error(unitary(H, 2.3, 0.6)) <= 1e-10);

  // exp(-i t (hbar pi / 4t) sigma_x / hbar) = cos(pi/4) - i sin(pi/4) sigma_x
  const double hbar = 0.8, t = 1.7;
  const CMatrix U = unitary(CMatrix(hbar * kPi / (4 * t) * sigma_x()), t, hbar);
  CHECK(std::abs(U(0, 0) - cplx(std::cos(kPi / 4), 0)) <= 1e-14);
  CHECK(std::abs(U(1, 0) - cplx(0, -std::sin(kPi / 4))) <= 1e-14);
  CHECK(std::norm(U(0, 0)) == Approx(0.5).epsilon(1e-14));

  CMatrix bad = CMatrix::Zero(2, 2);
  bad(0, 1) = 1.0;
  CHECK_THROWS_AS(unitary(bad, 1.0, 1.0), InvalidArgument);
}

TEST_CASE("pre-evolution prepares superpositions") {
  const HamiltonianSpec none{sigma_x(), HamiltonianRole::pre, 0.0};
  const StateVector same = pre_evolve(2, none, 1.0);
  CHECK(same.amplitudes(1) == cplx(1.0));
  CHECK(same.amplitudes(0) == cplx(0.0));

  const HamiltonianSpec quarter{sigma_x(), HamiltonianRole::pre, kPi / 4};
  const StateVector s = pre_evolve(1, quarter, 1.0);
  CHECK(std::norm(s.amplitudes(0)) == Approx(0.5).epsilon(1e-14));
  CHECK(std::norm(s.amplitudes(1)) == Approx(0.5).epsilon(1e-14));

  const std::vector<double> w{0.2, 0.3, 0.5};
  const DensityMatrix rho0 = DensityMatrix::diagonal(w);
  const DensityMatrix rho = pre_evolve(rho0, {CMatrix::Zero(3, 3), HamiltonianRole::pre, 2.0}, 1.0);
  CHECK((rho.rho - rho0.rho).cwiseAbs().maxCoeff() == 0.0);
  const DensityMatrix mixed = pre_evolve(rho0, {random_hermitian(3, 9), HamiltonianRole::pre, 1.3}, 1.0);
  CHECK(std::abs(mixed.purity() - rho0.purity()) <= 1e-10);
  CHECK_NOTHROW(mixed.validate());
}

TEST_CASE("diagonal measurements") {
  const MeasurementSet P = MeasurementSet::position_projectors(2);
  StateVector eq{CVector(2)};
  eq.amplitudes << 1 / std::sqrt(2.0), 1 / std::sqrt(2.0);
  const auto p = measure_diagonal(eq, P);
  CHECK(p[0] == Approx(0.5).epsilon(1e-14));
  CHECK(p[1] == Approx(0.5).epsilon(1e-14));

  const auto one = measure_diagonal(position_state(3, 4), MeasurementSet::position_projectors(4));
  for (std::size_t m = 0; m < 4; ++m) CHECK(one[m] == (m == 2 ? 1.0 : 0.0));

  const MeasurementSet D = two_outcome(0.25);
  const StateVector e0 = position_state(1, 2);
  const auto q = measure_diagonal(e0, D), r = measure(e0, D);
  CHECK(q[0] == Approx(0.25).epsilon(1e-14));
  CHECK(q[1] == Approx(0.75).epsilon(1e-14));
  for (std::size_t m = 0; m < 2; ++m) CHECK(std::abs(q[m] - r[m]) <= 1e-14);

  MeasurementSet incomplete = D;
  incomplete.operators.pop_back();
  CHECK_THROWS_AS(measure_diagonal(e0, incomplete), InvalidArgument);
  CHECK_THROWS_AS(measure(e0, incomplete), InvalidArgument);
}

TEST_CASE("conjugated operators") {
  const MeasurementSet D = random_diagonal_set(5, 3, 11);
  const MeasurementSet same = conjugated_operators(D, {random_hermitian(5, 1), HamiltonianRole::post, 0.0}, 1.0);
  for (std::size_t m = 0; m < D.operators.size(); ++m) CHECK((same.operators[m] - D.operators[m]).cwiseAbs().maxCoeff() == 0.0);

  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const MeasurementSet O = conjugated_operators(D, {random_hermitian(5, seed), HamiltonianRole::post, 0.9}, 1.0);
    CHECK(O.completeness_error() <= 1e-12);
  }

  // quarter-period conjugation of the position projectors: sigma_x gives projectors onto (1, +-i)/sqrt 2,
  // sigma_y onto (1, -+1)/sqrt 2
  const double r = 1 / std::sqrt(2.0);
  const auto projector = [](cplx a, cplx b) {
    CVector v(2);
    v << a, b;
    return CMatrix(v * v.adjoint());
  };
  const MeasurementSet X =
      conjugated_operators(MeasurementSet::position_projectors(2), {sigma_x(), HamiltonianRole::post, kPi / 4}, 1.0);
  CHECK((X.operators[0] - projector(r, cplx(0, r))).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK((X.operators[1] - projector(r, cplx(0, -r))).cwiseAbs().maxCoeff() <= 1e-14);
  CMatrix sy(2, 2);
  sy << 0, cplx(0, -1), cplx(0, 1), 0;
  const MeasurementSet Y = conjugated_operators(MeasurementSet::position_projectors(2), {sy, HamiltonianRole::post, kPi / 4}, 1.0);
  CHECK((Y.operators[0] - projector(r, -r)).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK((Y.operators[1] - projector(r, r)).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("post-evolution measurement identity") {
  for (std::size_t M = 2; M <= 16; ++M) {
    const auto seed = static_cast<std::uint64_t>(M);
    const StateVector psi = random_state(M, seed);
    const HamiltonianSpec Hp{random_hermitian(M, seed + 100), HamiltonianRole::post, 0.7};
    const MeasurementSet D = random_diagonal_set(M, 1 + M % 4, seed + 200);
    const auto lhs = measure(psi, conjugated_operators(D, Hp, 1.3));
    const auto rhs = measure_diagonal(post_evolve(psi, Hp, 1.3), D);
    double total = 0.0;
    for (std::size_t m = 0; m < lhs.size(); ++m) {
      CHECK(std::abs(lhs[m] - rhs[m]) <= 1e-10);
      total += lhs[m];
    }
    CHECK(total == Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("general measurement examples") {
  const StateVector psi = random_state(4, 5);
  const auto p = measure(psi, {{CMatrix::Identity(4, 4)}, false});
  REQUIRE(p.size() == 1);
  CHECK(p[0] == Approx(1.0).epsilon(1e-12));

  // projectors onto the eigenbasis of H, measured on an eigenvector
  const CMatrix H = random_hermitian(4, 8);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(H);
  MeasurementSet E;
  for (Eigen::Index k = 0; k < 4; ++k) E.operators.push_back(es.eigenvectors().col(k) * es.eigenvectors().col(k).adjoint());
  const auto q = measure({es.eigenvectors().col(2)}, E);
  for (std::size_t m = 0; m < 4; ++m) CHECK(std::abs(q[m] - (m == 2 ? 1.0 : 0.0)) <= 1e-12);
}

TEST_CASE("purity is preserved by every stage") {
  const DensityMatrix pure = DensityMatrix::pure(random_state(6, 2));
  const DensityMatrix mixed = DensityMatrix::diagonal(std::vector<double>{0.1, 0.2, 0.3, 0.15, 0.15, 0.1});
  for (HamiltonianRole role : {HamiltonianRole::pre, HamiltonianRole::main, HamiltonianRole::post}) {
    const HamiltonianSpec H{random_hermitian(6, 40 + static_cast<int>(role)), role, 1.1};
    CHECK(apply(pure, H, 1.0).purity() == Approx(1.0).epsilon(1e-10));
    CHECK(std::abs(apply(mixed, H, 1.0).purity() - mixed.purity()) <= 1e-10);
  }
  CHECK(mixed.purity() < 1.0 - 1e-3);
}

TEST_CASE("sampling") {
  const std::vector<double> certain{1.0, 0.0};
  for (std::uint64_t s = 0; s < 50; ++s) CHECK(sample_outcome(certain, s) == 0);

  const std::vector<double> fair{0.5, 0.5};
  const std::size_t n = 100000;
  const auto counts = sample_counts(fair, n, 21);
  const double freq = static_cast<double>(counts[0]) / n;
  CHECK(std::abs(freq - 0.5) <= 3.0 * std::sqrt(0.25 / n));
  CHECK(sample_counts(fair, 1000, 5) == sample_counts(fair, 1000, 5));
  CHECK(sample_outcome(fair, 77) == sample_outcome(fair, 77));

  const std::vector<double> negative{1.1, -0.1};
  CHECK_THROWS_AS(sample_outcome(negative, 1), InvalidArgument);
}

TEST_CASE("grid Hamiltonian bridges to the wave solver") {
  const Grid g{{-6.0, 6.0, 121, Boundary::absorbing}};
  const auto V = ScalarField::from_function(g, [](const Point3& q) { return 0.5 * q[0] * q[0]; });
  const CMatrix H = grid_hamiltonian(g, V, 1.0, 1.0);
  CHECK(H.rows() == 119);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(H);
  const Spectrum sp = stationary_states(g, V, 1.0, 1.0, 3);
  for (Eigen::Index n = 0; n < 3; ++n) CHECK(es.eigenvalues()(n) == Approx(sp.energies[n]).epsilon(1e-10));
}

TEST_CASE("measurement report rows") {
  std::ostringstream os;
  const std::vector<double> theory{0.25, 0.75};
  const std::vector<std::size_t> counts{26, 74};
  write_measurement_report(os, theory, counts);
  CHECK(os.str().find("0.75") != std::string::npos);
  CHECK(os.str().find("100") != std::string::npos);
}
