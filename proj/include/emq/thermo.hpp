#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "emq/grid.hpp"

namespace emq {

/// Grand potential Omega(mu, T) of the hidden-neuron sector.
class GrandPotentialModel {
 public:
  using Fn = std::function<double(double mu, double T)>;

  GrandPotentialModel(std::string name, Fn omega);

  /// Omega = -T * M * log(1 + exp((mu - a) / T)): M independent two-state
  /// neurons with activation energy a.
  static GrandPotentialModel independent_pool(double pool_size, double activation);
  /// Cubic B-spline through Omega sampled on a uniform mu grid at fixed T.
  static GrandPotentialModel tabulated(double mu_min, double mu_step, std::vector<double> omega, double temperature);

  double operator()(double mu, double T) const;
  const std::string& name() const { return name_; }

 private:
  std::string name_;
  Fn omega_;
};

struct NeuronPool {
  std::size_t pool_size = 0;  // M_aux
  double activation = 0.0;    // a
  double temperature = 1.0;   // T
  double mu = 0.0;
  std::size_t active = 0;     // N

  void validate() const;
};

struct NeuronCount {
  double mean;   // <N> = -dOmega/dmu
  double delta;  // sqrt(T |d2Omega/dmu2|)
};

/// Finite-difference neuron-count statistics. `dmu` <= 0 selects the default
/// 1e-3 * max(T, |mu|); the step is accepted only if halving it changes both
/// results by less than 0.1 %.
NeuronCount mean_and_delta_N(const GrandPotentialModel& model, double mu, double T, double dmu = 0.0);

/// Metropolis birth-death sampling; one entry of the returned series per sweep
/// of M_aux single-neuron proposals. Starts from `pool.active` neurons.
std::vector<std::size_t> sample_pool(const NeuronPool& pool, std::size_t n_sweeps, std::uint64_t seed);

double quantized_free_energy(double omega, double mu, long long n_active);

enum class PlanckBranch { positive, negative };

/// hbar = +-mu * eps / (2 pi); throws NoMultivaluedStructure for mu <= 0.
double planck_from_mu(double mu, double eps, PlanckBranch branch = PlanckBranch::positive);

/// Lagrange multiplier lambda = 4 D eps^2 / (gamma hbar^2).
double lambda_from_hbar(double D, double gamma, double eps, double hbar);
/// hbar = eps * sqrt(4 D / (gamma lambda)).
double hbar_from_lambda(double D, double gamma, double eps, double lambda);

/// Maximum pointwise |Psi(p, F + mu n) - Psi(p, F)|.
double phase_invariance_check(const ScalarField& p, const ScalarField& F, double mu, double eps, double hbar,
                              long long n);

struct FirstLawReport {
  std::vector<double> residuals;  // r_t = dF_t - mu dN_t
  double max_abs = 0.0;
  double mean = 0.0;
  double rms = 0.0;
  /// mean(r^2) divided by its standard error; > 5 flags a violation.
  double significance = 0.0;
  bool violated = false;
};

FirstLawReport first_law_residual(std::span<const double> F, std::span<const double> N, double mu);

/// Order-of-magnitude added entropy 2 * Delta N.
double added_entropy(double delta_N);

void write_pool_series(std::ostream& os, std::span<const std::size_t> series);

}  // namespace emq
