#include "emq/action.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "emq/errors.hpp"
#include "emq/madelung.hpp"
#include "emq/stats.hpp"

namespace emq {

namespace {

constexpr double kFloor = 1e-12;

double wrapped(double d, double period) { return period > 0.0 ? d - period * std::round(d / period) : d; }

void require_normalized(const ScalarField& p, const char* what) {
  const double mass = integrate(p);
  if (std::abs(mass - 1.0) > 1e-6) throw InvalidArgument(std::string(what) + ": density is not normalized");
}

ScalarField root_density(const ScalarField& p) {
  ScalarField r(p.grid());
  for (std::size_t i = 0; i < p.size(); ++i) r[i] = std::sqrt(std::max(p[i], kFloor));
  return r;
}

/// Central derivative along axis k with differences reduced to the nearest branch.
ScalarField branch_partial(const ScalarField& F, std::size_t k, double period) {
  if (period <= 0.0) return partial(F, k);
  const Grid& g = F.grid();
  const double h = g.spacing(k);
  ScalarField out(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto up = g.neighbor(i, k, 1);
    const auto down = g.neighbor(i, k, -1);
    if (up && down) {
      out[i] = (wrapped(F[*up] - F[i], period) - wrapped(F[*down] - F[i], period)) / (2.0 * h);
    } else if (g.boundary(k) == Boundary::absorbing) {
      const int dir = up ? 1 : -1;
      const std::size_t a = up ? *up : *down;
      const std::size_t b = *g.neighbor(a, k, dir);
      out[i] = dir * (4.0 * wrapped(F[a] - F[i], period) - wrapped(F[b] - F[i], period)) / (2.0 * h);
    }
  }
  return out;
}

/// d/dt of a series at index t: central inside, second-order one-sided at the ends.
ScalarField time_derivative(const std::vector<ScalarField>& s, std::size_t t, double dt, double period) {
  const std::size_t n = s.size();
  ScalarField out(s[t].grid());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (t > 0 && t + 1 < n) {
      out[i] = wrapped(s[t + 1][i] - s[t - 1][i], period) / (2.0 * dt);
    } else if (t == 0) {
      out[i] = (4.0 * wrapped(s[1][i] - s[0][i], period) - wrapped(s[2][i] - s[0][i], period)) / (2.0 * dt);
    } else {
      out[i] = -(4.0 * wrapped(s[n - 2][i] - s[n - 1][i], period) - wrapped(s[n - 3][i] - s[n - 1][i], period)) /
               (2.0 * dt);
    }
  }
  return out;
}

double trapezoid_in_time(const std::vector<double>& f, double dt) {
  double s = 0.0;
  for (std::size_t t = 0; t < f.size(); ++t) s += (t == 0 || t + 1 == f.size() ? 0.5 : 1.0) * f[t];
  return s * dt;
}

/// Integrand of the real action at one time, without the lambda / eps prefactor.
double real_density_integral(const ScalarField& p, const ScalarField& dFdt, const std::vector<ScalarField>& gradF,
                             const ActionConfig& cfg) {
  const double m = cfg.mass();
  const double hbar = cfg.hbar();
  const double eps = cfg.eps;
  const ScalarField root = root_density(p);
  const ScalarField lap = laplacian(root);
  const Grid& g = p.grid();
  double total = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    double grad2 = 0.0;
    for (const auto& d : gradF) grad2 += d[i] * d[i];
    const double kinetic = -hbar * hbar / (2.0 * m) * root[i] * lap[i];
    const double local = eps * dFdt[i] + eps * eps * grad2 / (2.0 * m) + cfg.V[i];
    total += g.weight(i) * (kinetic + p[i] * local);
  }
  return total;
}

std::vector<ScalarField> gradient_of(const ScalarField& F, double period) {
  std::vector<ScalarField> out;
  for (std::size_t k = 0; k < F.grid().dims(); ++k) out.push_back(branch_partial(F, k, period));
  return out;
}

void check_config_against(const HistoryPF& hist, const ActionConfig& cfg) {
  hist.validate();
  cfg.validate();
  require_same_grid(hist.grid(), cfg.V.grid(), "action");
}

}  // namespace

double ActionConfig::hbar() const {
  if (!(lambda > 0.0)) throw InvalidArgument("ActionConfig: lambda must be positive");
  return eps * std::sqrt(4.0 * diffusion / (gamma * lambda));
}

void ActionConfig::validate() const {
  if (!(lambda > 0.0) || !(eps > 0.0) || !(gamma > 0.0) || !(diffusion > 0.0)) {
    throw InvalidArgument("ActionConfig: lambda, eps, gamma, D must be positive");
  }
  if (V.size() == 0) throw InvalidArgument("ActionConfig: potential field is missing");
  if (hbar_supplied) {
    const double h = *hbar_supplied;
    const double implied = 4.0 * diffusion * eps * eps / (gamma * h * h);
    if (std::abs(implied - lambda) > 1e-10 * std::max(1.0, lambda)) {
      throw InvalidArgument("ActionConfig: lambda inconsistent with the supplied hbar");
    }
  }
}

ActionConfig ActionConfig::from_quantum(double hbar, double mass, double eps, double lambda, ScalarField V) {
  if (!(hbar > 0.0) || !(mass > 0.0) || !(eps > 0.0) || !(lambda > 0.0)) {
    throw InvalidArgument("ActionConfig::from_quantum: parameters must be positive");
  }
  ActionConfig cfg;
  cfg.lambda = lambda;
  cfg.eps = eps;
  cfg.gamma = eps / (2.0 * mass);
  cfg.diffusion = lambda * cfg.gamma * hbar * hbar / (4.0 * eps * eps);
  cfg.V = std::move(V);
  cfg.hbar_supplied = hbar;
  cfg.validate();
  return cfg;
}

void HistoryPF::validate() const {
  if (times.size() < 3) throw InvalidArgument("HistoryPF: needs at least three time points");
  if (p.size() != times.size() || F.size() != times.size()) throw InvalidArgument("HistoryPF: series length mismatch");
  const double step = times[1] - times[0];
  if (!(step > 0.0)) throw InvalidArgument("HistoryPF: times must increase");
  for (std::size_t t = 1; t < times.size(); ++t) {
    if (std::abs((times[t] - times[t - 1]) - step) > 1e-9 * std::max(1.0, std::abs(times[t]))) {
      throw InvalidArgument("HistoryPF: time spacing is not uniform");
    }
  }
  for (std::size_t t = 0; t < times.size(); ++t) {
    require_same_grid(p[0].grid(), p[t].grid(), "HistoryPF");
    require_same_grid(p[0].grid(), F[t].grid(), "HistoryPF");
    require_normalized(p[t], "HistoryPF");
  }
}

double shannon_entropy(const ScalarField& p) {
  require_normalized(p, "shannon_entropy");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < -kFloor) throw InvalidArgument("shannon_entropy: density is negative");
    if (p[i] > kFloor) s -= p.grid().weight(i) * p[i] * std::log(p[i]);
  }
  return s;
}

EntropyProduction entropy_production_terms(const ScalarField& p, const ScalarField& F, double D, double gamma) {
  require_same_grid(p.grid(), F.grid(), "entropy_production_terms");
  ScalarField logp(p.grid());
  for (std::size_t i = 0; i < p.size(); ++i) logp[i] = std::log(std::max(p[i], kFloor));
  EntropyProduction out{0.0, 0.0};
  for (std::size_t k = 0; k < p.grid().dims(); ++k) {
    const ScalarField dp = partial(p, k);
    out.diffusion += D * integrate_product(dp, partial(logp, k));
    out.learning += gamma * integrate_product(dp, partial(F, k));
  }
  return out;
}

double fisher_production(const ScalarField& p, double D) {
  const ScalarField root = root_density(p);
  return -4.0 * D * integrate_product(root, laplacian(root));
}

double fisher_gradient_form(const ScalarField& p, double D) {
  ScalarField sum(p.grid());
  for (std::size_t k = 0; k < p.grid().dims(); ++k) {
    const ScalarField dp = partial(p, k);
    for (std::size_t i = 0; i < p.size(); ++i) sum[i] += dp[i] * dp[i] / std::max(p[i], kFloor);
  }
  return D * integrate(sum);
}

ScalarField potential_from_history(const HistoryPF& hist, double eps) {
  hist.validate();
  if (!(eps > 0.0)) throw InvalidArgument("potential_from_history: epsilon must be positive");
  ScalarField V(hist.grid());
  const std::size_t interior = hist.size() - 2;
  for (std::size_t t = 1; t + 1 < hist.size(); ++t) {
    const ScalarField d = time_derivative(hist.F, t, hist.dt(), hist.free_energy_period);
    for (std::size_t i = 0; i < V.size(); ++i) V[i] -= eps * d[i] / static_cast<double>(interior);
  }
  return V;
}

std::vector<double> history_entropy_production(const HistoryPF& hist) {
  hist.validate();
  std::vector<ScalarField> entropy;
  for (const auto& p : hist.p) {
    ScalarField s(p.grid(), shannon_entropy(p));
    entropy.push_back(std::move(s));
  }
  std::vector<double> rate;
  for (std::size_t t = 0; t < hist.size(); ++t) rate.push_back(time_derivative(entropy, t, hist.dt(), 0.0)[0]);
  return rate;
}

double action_real(const HistoryPF& hist, const ActionConfig& cfg) {
  check_config_against(hist, cfg);
  std::vector<double> slices;
  for (std::size_t t = 0; t < hist.size(); ++t) {
    const ScalarField dFdt = time_derivative(hist.F, t, hist.dt(), hist.free_energy_period);
    slices.push_back(real_density_integral(hist.p[t], dFdt, gradient_of(hist.F[t], hist.free_energy_period), cfg));
  }
  return cfg.lambda / cfg.eps * trapezoid_in_time(slices, hist.dt());
}

ComplexAction action_complex(const HistoryPF& hist, const ActionConfig& cfg, double mu, long long n) {
  check_config_against(hist, cfg);
  const double m0 = integrate(hist.p.front());
  for (const auto& p : hist.p) {
    if (std::abs(integrate(p) - m0) > 1e-8) throw InvalidArgument("action_complex: normalization drifts along the series");
  }
  const double hbar = cfg.hbar();
  const double m = cfg.mass();
  const double shift = mu * static_cast<double>(n);
  const double period = hist.free_energy_period;

  std::vector<ScalarField> shifted, logroot;
  for (std::size_t t = 0; t < hist.size(); ++t) {
    ScalarField f = hist.F[t];
    for (double& v : f.values()) v += shift;
    shifted.push_back(std::move(f));
    ScalarField l(hist.grid());
    for (std::size_t i = 0; i < l.size(); ++i) l[i] = 0.5 * std::log(std::max(hist.p[t][i], kFloor));
    logroot.push_back(std::move(l));
  }

  std::vector<double> re, im;
  const Grid& g = hist.grid();
  for (std::size_t t = 0; t < hist.size(); ++t) {
    const ScalarField dl = time_derivative(logroot, t, hist.dt(), 0.0);
    const ScalarField dF = time_derivative(shifted, t, hist.dt(), period);
    const auto gl = gradient_of(logroot[t], 0.0);
    const auto gF = gradient_of(shifted[t], period);
    double r = 0.0, i_part = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      double grad2 = 0.0;
      for (std::size_t k = 0; k < g.dims(); ++k) {
        const double phase = cfg.eps * gF[k][i] / hbar;
        grad2 += gl[k][i] * gl[k][i] + phase * phase;
      }
      const double p = hist.p[t][i];
      // -i hbar dphi/dt = -i hbar dlog(sqrt p)/dt + eps dF/dt
      r += g.weight(i) * p * (hbar * hbar / (2.0 * m) * grad2 + cfg.eps * dF[i] + cfg.V[i]);
      i_part += g.weight(i) * p * (-hbar * dl[i]);
    }
    re.push_back(r);
    im.push_back(i_part);
  }
  const double pre = cfg.lambda / cfg.eps;
  return {pre * trapezoid_in_time(re, hist.dt()), pre * trapezoid_in_time(im, hist.dt())};
}

VariationalResiduals variational_residuals(const HistoryPF& hist, const ActionConfig& cfg) {
  check_config_against(hist, cfg);
  const double hbar = cfg.hbar();
  const double m = cfg.mass();
  const double eps = cfg.eps;
  const Grid& g = hist.grid();
  VariationalResiduals out;

  std::vector<double> literal;
  for (std::size_t t = 0; t < hist.size(); ++t) {
    const ScalarField& p = hist.p[t];
    const ScalarField dpdt = time_derivative(hist.p, t, hist.dt(), 0.0);
    const ScalarField dFdt = time_derivative(hist.F, t, hist.dt(), hist.free_energy_period);
    const auto gF = gradient_of(hist.F[t], hist.free_energy_period);
    const ScalarField Q = quantum_potential(p, hbar, m);
    const auto mask = density_mask(p);

    ScalarField divergence_term(g);
    for (std::size_t k = 0; k < g.dims(); ++k) {
      ScalarField flux(g);
      for (std::size_t i = 0; i < g.size(); ++i) flux[i] = eps * gF[k][i] * p[i];
      const ScalarField d = partial(flux, k);
      for (std::size_t i = 0; i < g.size(); ++i) divergence_term[i] += d[i];
    }

    ScalarField rF(g), rp(g);
    double sum_w = 0.0, sum_F = 0.0, sum_p = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!mask[i]) continue;
      double grad2 = 0.0;
      for (std::size_t k = 0; k < g.dims(); ++k) grad2 += gF[k][i] * gF[k][i];
      rF[i] = -dpdt[i] - divergence_term[i] / m;
      rp[i] = Q[i] + eps * dFdt[i] + eps * eps * grad2 / (2.0 * m) + cfg.V[i];
      const double w = g.weight(i) * p[i];
      sum_w += w;
      sum_F += w * std::abs(rF[i]);
      sum_p += w * std::abs(rp[i]);
    }
    if (t > 0 && t + 1 < hist.size()) {
      out.r_F_max = std::max(out.r_F_max, max_abs(rF));
      out.r_p_max = std::max(out.r_p_max, max_abs(rp));
      if (sum_w > 0.0) {
        out.r_F_mean += sum_F / sum_w / static_cast<double>(hist.size() - 2);
        out.r_p_mean += sum_p / sum_w / static_cast<double>(hist.size() - 2);
      }
    }
    out.r_F.push_back(std::move(rF));
    out.r_p.push_back(std::move(rp));

    const ScalarField root = root_density(p);
    literal.push_back(-(hbar / m) * integrate_product(root, laplacian(root)));
  }
  out.r_hbar = trapezoid_in_time(history_entropy_production(hist), hist.dt());
  out.hbar_derivative_literal = trapezoid_in_time(literal, hist.dt());
  return out;
}

void write_residual_report(std::ostream& os, const std::vector<RefinementRow>& rows) {
  os << "# h dt r_hbar r_F_max r_F_mean r_p_max r_p_mean\n";
  os.precision(10);
  for (const auto& r : rows) {
    const auto& v = r.residuals;
    os << r.h << ' ' << r.dt << ' ' << v.r_hbar << ' ' << v.r_F_max << ' ' << v.r_F_mean << ' ' << v.r_p_max << ' '
       << v.r_p_mean << '\n';
  }
  if (rows.size() < 2) return;
  std::vector<double> h, rhbar, rF, rp;
  for (const auto& r : rows) {
    h.push_back(r.h);
    rhbar.push_back(std::max(std::abs(r.residuals.r_hbar), 1e-300));
    rF.push_back(std::max(r.residuals.r_F_mean, 1e-300));
    rp.push_back(std::max(r.residuals.r_p_mean, 1e-300));
  }
  os << "# slope r_hbar " << stats::convergence_order(h, rhbar) << '\n';
  os << "# slope r_F " << stats::convergence_order(h, rF) << '\n';
  os << "# slope r_p " << stats::convergence_order(h, rp) << '\n';
}

}  // namespace emq
