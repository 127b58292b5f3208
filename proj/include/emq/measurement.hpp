#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "emq/grid.hpp"

namespace emq {

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

/// Amplitudes over the finite position basis |q_1>, ..., |q_M>.
struct StateVector {
  CVector amplitudes;

  std::size_t dim() const { return static_cast<std::size_t>(amplitudes.size()); }
  /// Unit norm within 1e-12.
  void validate() const;
};

struct DensityMatrix {
  CMatrix rho;

  static DensityMatrix diagonal(std::span<const double> probabilities);
  static DensityMatrix pure(const StateVector& psi);
  double purity() const;
  /// Hermitian and unit trace within 1e-12, eigenvalues >= -1e-10.
  void validate() const;
};

enum class HamiltonianRole { pre, main, post };

struct HamiltonianSpec {
  CMatrix H;
  HamiltonianRole role = HamiltonianRole::main;
  double time = 0.0;

  void validate() const;
};

/// Operators O_m with sum O_m^dagger O_m = I.
struct MeasurementSet {
  std::vector<CMatrix> operators;
  bool diagonal = false;

  std::size_t dim() const;
  /// max |sum O^dagger O - I|.
  double completeness_error() const;
  void validate(double tolerance = 1e-10) const;

  /// Rank-one projectors onto the position basis.
  static MeasurementSet position_projectors(std::size_t M);
};

/// j-th basis vector, 1-based.
StateVector position_state(std::size_t j, std::size_t M);

/// exp(-i t H / hbar) by Hermitian eigendecomposition.
CMatrix unitary(const CMatrix& H, double t, double hbar);
CMatrix unitary(const HamiltonianSpec& H, double hbar);

StateVector pre_evolve(std::size_t j, const HamiltonianSpec& H_pre, double hbar);
DensityMatrix pre_evolve(const DensityMatrix& rho0, const HamiltonianSpec& H_pre, double hbar);
/// Applies exp(-i t H / hbar) for any role.
StateVector apply(const StateVector& psi, const HamiltonianSpec& H, double hbar);
DensityMatrix apply(const DensityMatrix& rho, const HamiltonianSpec& H, double hbar);
StateVector post_evolve(const StateVector& psi, const HamiltonianSpec& H_post, double hbar);

/// p(m) = sum_i |D_ii|^2 |psi_i|^2.
std::vector<double> measure_diagonal(const StateVector& psi, const MeasurementSet& D);

/// O_m = exp(i t H / hbar) D_m exp(-i t H / hbar).
MeasurementSet conjugated_operators(const MeasurementSet& D, const HamiltonianSpec& H_post, double hbar);

/// p(m) = <psi| O_m^dagger O_m |psi>.
std::vector<double> measure(const StateVector& psi, const MeasurementSet& O);

/// Categorical draw from stream (seed, 0).
std::size_t sample_outcome(std::span<const double> probabilities, std::uint64_t seed);
/// Outcome counts of n independent draws from stream (seed, 0).
std::vector<std::size_t> sample_counts(std::span<const double> probabilities, std::size_t n, std::uint64_t seed);

StateVector random_state(std::size_t M, std::uint64_t seed);
/// (B + B^dagger) / 2 with i.i.d. standard normal complex entries of B.
CMatrix random_hermitian(std::size_t M, std::uint64_t seed);
/// Complete set of `count` diagonal operators with random weights and phases.
MeasurementSet random_diagonal_set(std::size_t M, std::size_t count, std::uint64_t seed);

/// Finite-difference Hamiltonian -hbar^2/2m lap + V restricted to the
/// non-wall nodes of the grid (at most 512 of them).
CMatrix grid_hamiltonian(const Grid& grid, const ScalarField& V, double mass, double hbar);

/// Rows: m p_theory p_empirical n_draws.
void write_measurement_report(std::ostream& os, std::span<const double> theory, std::span<const std::size_t> counts);

}  // namespace emq
