#include "emq/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <ostream>

#include "emq/errors.hpp"
#include "emq/random.hpp"
#include "emq/schrodinger.hpp"

namespace emq {

namespace {

using cplx = std::complex<double>;

double hermitian_error(const CMatrix& H) { return (H - H.adjoint()).cwiseAbs().maxCoeff(); }

void require_hermitian(const CMatrix& H) {
  if (H.rows() != H.cols() || H.rows() == 0) throw InvalidArgument("Hamiltonian must be a non-empty square matrix");
  if (hermitian_error(H) > 1e-12 * std::max(1.0, H.cwiseAbs().maxCoeff())) {
    throw InvalidArgument("Hamiltonian is not Hermitian");
  }
}

void require_probabilities(std::span<const double> p) {
  if (p.empty()) throw InvalidArgument("probabilities must not be empty");
  double total = 0.0;
  for (double v : p) {
    if (v < -1e-12 || !std::isfinite(v)) throw InvalidArgument("probabilities must be non-negative");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-10) throw InvalidArgument("probabilities must sum to one");
}

}  // namespace

void StateVector::validate() const {
  if (amplitudes.size() == 0) throw InvalidArgument("StateVector: empty");
  if (std::abs(amplitudes.norm() - 1.0) > 1e-12) throw InvalidArgument("StateVector: not unit norm");
}

DensityMatrix DensityMatrix::diagonal(std::span<const double> probabilities) {
  require_probabilities(probabilities);
  DensityMatrix d{CMatrix::Zero(static_cast<Eigen::Index>(probabilities.size()),
                                static_cast<Eigen::Index>(probabilities.size()))};
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    d.rho(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = std::max(0.0, probabilities[i]);
  }
  return d;
}

DensityMatrix DensityMatrix::pure(const StateVector& psi) {
  psi.validate();
  return {psi.amplitudes * psi.amplitudes.adjoint()};
}

double DensityMatrix::purity() const { return (rho * rho).trace().real(); }

void DensityMatrix::validate() const {
  if (rho.rows() != rho.cols() || rho.rows() == 0) throw InvalidArgument("DensityMatrix: not square");
  if (hermitian_error(rho) > 1e-12) throw InvalidArgument("DensityMatrix: not Hermitian");
  if (std::abs(rho.trace() - cplx(1.0)) > 1e-12) throw InvalidArgument("DensityMatrix: trace is not one");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(rho, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-10) throw InvalidArgument("DensityMatrix: negative eigenvalue");
}

void HamiltonianSpec::validate() const {
  require_hermitian(H);
  if (!std::isfinite(time)) throw InvalidArgument("HamiltonianSpec: time must be finite");
}

std::size_t MeasurementSet::dim() const {
  if (operators.empty()) throw InvalidArgument("MeasurementSet: no operators");
  return static_cast<std::size_t>(operators.front().rows());
}

double MeasurementSet::completeness_error() const {
  const auto M = static_cast<Eigen::Index>(dim());
  CMatrix sum = CMatrix::Zero(M, M);
  for (const auto& O : operators) {
    if (O.rows() != M || O.cols() != M) throw InvalidArgument("MeasurementSet: operator sizes differ");
    sum += O.adjoint() * O;
  }
  return (sum - CMatrix::Identity(M, M)).cwiseAbs().maxCoeff();
}

void MeasurementSet::validate(double tolerance) const {
  if (completeness_error() > tolerance) throw InvalidArgument("MeasurementSet: operators are not complete");
  if (diagonal) {
    for (const auto& O : operators) {
      CMatrix off = O;
      off.diagonal().setZero();
      if (off.cwiseAbs().maxCoeff() != 0.0) throw InvalidArgument("MeasurementSet: operator is not diagonal");
    }
  }
}

MeasurementSet MeasurementSet::position_projectors(std::size_t M) {
  if (M < 1) throw InvalidArgument("position_projectors: M must be positive");
  MeasurementSet set{{}, true};
  for (std::size_t i = 0; i < M; ++i) {
    CMatrix P = CMatrix::Zero(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(M));
    P(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 1.0;
    set.operators.push_back(std::move(P));
  }
  return set;
}

StateVector position_state(std::size_t j, std::size_t M) {
  if (M < 1 || j < 1 || j > M) throw InvalidArgument("position_state: index out of range");
  StateVector s{CVector::Zero(static_cast<Eigen::Index>(M))};
  s.amplitudes[static_cast<Eigen::Index>(j - 1)] = 1.0;
  return s;
}

CMatrix unitary(const CMatrix& H, double t, double hbar) {
  require_hermitian(H);
  if (!(hbar > 0.0)) throw InvalidArgument("unitary: hbar must be positive");
  const Eigen::Index M = H.rows();
  if (t == 0.0 || H.cwiseAbs().maxCoeff() == 0.0) return CMatrix::Identity(M, M);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (H + H.adjoint()));
  if (es.info() != Eigen::Success) throw NumericalError("unitary: eigendecomposition failed");
  CVector phases(M);
  for (Eigen::Index k = 0; k < M; ++k) phases[k] = std::polar(1.0, -t * es.eigenvalues()[k] / hbar);
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

CMatrix unitary(const HamiltonianSpec& H, double hbar) {
  H.validate();
  return unitary(H.H, H.time, hbar);
}

StateVector pre_evolve(std::size_t j, const HamiltonianSpec& H_pre, double hbar) {
  return apply(position_state(j, static_cast<std::size_t>(H_pre.H.rows())), H_pre, hbar);
}

DensityMatrix pre_evolve(const DensityMatrix& rho0, const HamiltonianSpec& H_pre, double hbar) {
  return apply(rho0, H_pre, hbar);
}

StateVector apply(const StateVector& psi, const HamiltonianSpec& H, double hbar) {
  psi.validate();
  if (psi.amplitudes.size() != H.H.rows()) throw InvalidArgument("apply: dimension mismatch");
  return {unitary(H, hbar) * psi.amplitudes};
}

DensityMatrix apply(const DensityMatrix& rho, const HamiltonianSpec& H, double hbar) {
  rho.validate();
  if (rho.rho.rows() != H.H.rows()) throw InvalidArgument("apply: dimension mismatch");
  const CMatrix U = unitary(H, hbar);
  return {U * rho.rho * U.adjoint()};
}

StateVector post_evolve(const StateVector& psi, const HamiltonianSpec& H_post, double hbar) {
  return apply(psi, H_post, hbar);
}

std::vector<double> measure_diagonal(const StateVector& psi, const MeasurementSet& D) {
  psi.validate();
  if (!D.diagonal) throw InvalidArgument("measure_diagonal: set is not flagged diagonal");
  D.validate();
  if (D.dim() != psi.dim()) throw InvalidArgument("measure_diagonal: dimension mismatch");
  std::vector<double> p;
  for (const auto& O : D.operators) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < O.rows(); ++i) s += std::norm(O(i, i)) * std::norm(psi.amplitudes[i]);
    p.push_back(s);
  }
  return p;
}

MeasurementSet conjugated_operators(const MeasurementSet& D, const HamiltonianSpec& H_post, double hbar) {
  D.validate();
  if (static_cast<Eigen::Index>(D.dim()) != H_post.H.rows()) {
    throw InvalidArgument("conjugated_operators: dimension mismatch");
  }
  if (H_post.time == 0.0) {
    H_post.validate();
    return D;
  }
  const CMatrix U = unitary(H_post, hbar);
  MeasurementSet out{{}, false};
  for (const auto& O : D.operators) out.operators.push_back(U.adjoint() * O * U);
  return out;
}

std::vector<double> measure(const StateVector& psi, const MeasurementSet& O) {
  psi.validate();
  O.validate();
  if (O.dim() != psi.dim()) throw InvalidArgument("measure: dimension mismatch");
  std::vector<double> p;
  for (const auto& op : O.operators) p.push_back((op * psi.amplitudes).squaredNorm());
  return p;
}

namespace {
std::size_t draw(std::span<const double> p, CounterRng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t m = 0; m < p.size(); ++m) {
    if (p[m] <= 0.0) continue;
    last = m;
    acc += p[m];
    if (u < acc) return m;
  }
  return last;
}
}  // namespace

std::size_t sample_outcome(std::span<const double> probabilities, std::uint64_t seed) {
  require_probabilities(probabilities);
  CounterRng rng(seed, 0);
  return draw(probabilities, rng);
}

std::vector<std::size_t> sample_counts(std::span<const double> probabilities, std::size_t n, std::uint64_t seed) {
  require_probabilities(probabilities);
  CounterRng rng(seed, 0);
  std::vector<std::size_t> counts(probabilities.size(), 0);
  for (std::size_t s = 0; s < n; ++s) ++counts[draw(probabilities, rng)];
  return counts;
}

StateVector random_state(std::size_t M, std::uint64_t seed) {
  if (M < 1) throw InvalidArgument("random_state: M must be positive");
  CounterRng rng(seed, 1);
  CVector v(static_cast<Eigen::Index>(M));
  for (auto& a : v) a = cplx(rng.normal(), rng.normal());
  return {v / v.norm()};
}

CMatrix random_hermitian(std::size_t M, std::uint64_t seed) {
  if (M < 1) throw InvalidArgument("random_hermitian: M must be positive");
  CounterRng rng(seed, 2);
  const auto n = static_cast<Eigen::Index>(M);
  CMatrix B(n, n);
  for (Eigen::Index c = 0; c < n; ++c)
    for (Eigen::Index r = 0; r < n; ++r) B(r, c) = cplx(rng.normal(), rng.normal());
  return 0.5 * (B + B.adjoint());
}

MeasurementSet random_diagonal_set(std::size_t M, std::size_t count, std::uint64_t seed) {
  if (M < 1 || count < 1) throw InvalidArgument("random_diagonal_set: sizes must be positive");
  CounterRng rng(seed, 3);
  const auto n = static_cast<Eigen::Index>(M);
  MeasurementSet set{std::vector<CMatrix>(count, CMatrix::Zero(n, n)), true};
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<double> w(count);
    for (double& x : w) x = rng.uniform();
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (std::size_t m = 0; m < count; ++m) {
      set.operators[m](i, i) = std::polar(std::sqrt(w[m] / total), 2.0 * std::numbers::pi * rng.uniform());
    }
  }
  return set;
}

CMatrix grid_hamiltonian(const Grid& grid, const ScalarField& V, double mass, double hbar) {
  const auto H = hamiltonian_matrix(grid, V, mass, hbar);
  std::vector<Eigen::Index> active;
  for (Eigen::Index i = 0; i < H.rows(); ++i) {
    if (H.col(i).nonZeros() > 0) active.push_back(i);
  }
  if (active.size() > 512) throw InvalidArgument("grid_hamiltonian: more than 512 active nodes");
  const CMatrix dense(H);
  const auto n = static_cast<Eigen::Index>(active.size());
  CMatrix out(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) out(r, c) = dense(active[static_cast<std::size_t>(r)], active[static_cast<std::size_t>(c)]);
  return out;
}

void write_measurement_report(std::ostream& os, std::span<const double> theory, std::span<const std::size_t> counts) {
  if (theory.size() != counts.size()) throw InvalidArgument("write_measurement_report: size mismatch");
  const std::size_t n = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  os << "# m p_theory p_empirical n_draws\n";
  os.precision(12);
  for (std::size_t m = 0; m < theory.size(); ++m) {
    os << m << ' ' << theory[m] << ' ' << (n ? static_cast<double>(counts[m]) / static_cast<double>(n) : 0.0) << ' '
       << n << '\n';
  }
}

}  // namespace emq
