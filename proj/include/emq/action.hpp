#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "emq/grid.hpp"

namespace emq {

/// Weights and coefficients of the action functional. The emergent mass is
/// m = eps / (2 gamma) and hbar = eps sqrt(4 D / (gamma lambda)).
struct ActionConfig {
  double lambda = 1.0;
  double eps = 1.0;
  double gamma = 1.0;
  double diffusion = 1.0;
  ScalarField V;
  /// When set, must satisfy lambda = 4 D eps^2 / (gamma hbar^2) to 1e-10.
  std::optional<double> hbar_supplied;

  double mass() const { return eps / (2.0 * gamma); }
  double hbar() const;
  void validate() const;

  /// Config reproducing a given (hbar, m): gamma = eps / 2m, D = lambda gamma hbar^2 / (4 eps^2).
  static ActionConfig from_quantum(double hbar, double mass, double eps, double lambda, ScalarField V);
};

/// Time series of (p, F) on a common grid with uniform spacing. When
/// `free_energy_period` > 0, F is only defined modulo that period and all
/// differences of F are taken on the nearest branch.
struct HistoryPF {
  std::vector<double> times;
  std::vector<ScalarField> p;
  std::vector<ScalarField> F;
  double free_energy_period = 0.0;

  std::size_t size() const { return times.size(); }
  const Grid& grid() const { return p.front().grid(); }
  double dt() const { return times[1] - times[0]; }
  /// Length >= 3, matching grids, uniform dt, each p normalized to 1e-6.
  void validate() const;
};

/// -integral(p log p).
double shannon_entropy(const ScalarField& p);

struct EntropyProduction {
  double diffusion;  // D integral grad p . grad log p
  double learning;   // gamma integral grad p . grad F
  double total() const { return diffusion - learning; }
};

EntropyProduction entropy_production_terms(const ScalarField& p, const ScalarField& F, double D, double gamma);

/// -4 D integral(sqrt p lap sqrt p).
double fisher_production(const ScalarField& p, double D);

/// D integral (grad p)^2 / p, the other quadrature of the same quantity.
double fisher_gradient_form(const ScalarField& p, double D);

/// Pointwise time average of -eps dF/dt over interior central differences.
ScalarField potential_from_history(const HistoryPF& hist, double eps);

/// dS_q/dt at every time of the history (central differences, one-sided at the ends).
std::vector<double> history_entropy_production(const HistoryPF& hist);

/// Real form of the action: (lambda / eps) times the time integral of
/// integral sqrt(p) (-hbar^2/2m lap + d(eps F)/dt + (grad eps F)^2 / 2m + V) sqrt(p).
double action_real(const HistoryPF& hist, const ActionConfig& cfg);

struct ComplexAction {
  double real;
  double imag;
};

/// Complex form with phi = log sqrt(p) + i eps (F + mu n) / hbar.
/// Throws if the normalization drifts by more than 1e-8 along the series.
ComplexAction action_complex(const HistoryPF& hist, const ActionConfig& cfg, double mu, long long n);

struct VariationalResiduals {
  /// Time integral of dS_q/dt (entropy conservation).
  double r_hbar = 0.0;
  /// Time integral of -(hbar/m) integral sqrt(p) lap sqrt(p); diagnostic only.
  double hbar_derivative_literal = 0.0;
  std::vector<ScalarField> r_F;
  std::vector<ScalarField> r_p;
  /// Statistics over interior times and the density mask.
  double r_F_max = 0.0;
  double r_F_mean = 0.0;
  double r_p_max = 0.0;
  double r_p_mean = 0.0;
};

VariationalResiduals variational_residuals(const HistoryPF& hist, const ActionConfig& cfg);

struct RefinementRow {
  double h;
  double dt;
  VariationalResiduals residuals;
};

/// Per-row residual statistics followed by log-log refinement slopes in h.
void write_residual_report(std::ostream& os, const std::vector<RefinementRow>& rows);

}  // namespace emq
