#include "emq/thermo.hpp"

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "emq/errors.hpp"
#include "emq/random.hpp"
#include "emq/schrodinger.hpp"
#include "emq/stats.hpp"

namespace emq {

GrandPotentialModel::GrandPotentialModel(std::string name, Fn omega) : name_(std::move(name)), omega_(std::move(omega)) {}

GrandPotentialModel GrandPotentialModel::independent_pool(double M, double a) {
  if (!(M > 0.0)) throw InvalidArgument("pool size must be positive");
  return {"independent_pool", [M, a](double mu, double T) {
            if (!(T > 0.0)) throw InvalidArgument("temperature must be positive");
            const double x = (mu - a) / T;
            // log(1 + e^x) without overflow
            const double softplus = x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
            return -T * M * softplus;
          }};
}

GrandPotentialModel GrandPotentialModel::tabulated(double mu_min, double mu_step, std::vector<double> omega,
                                                   double temperature) {
  if (omega.size() < 5) throw InvalidArgument("tabulated grand potential needs at least 5 samples");
  if (!(mu_step > 0.0)) throw InvalidArgument("tabulated grand potential needs a positive mu step");
  auto spline = std::make_shared<boost::math::interpolators::cardinal_cubic_b_spline<double>>(
      omega.begin(), omega.end(), mu_min, mu_step);
  const double mu_max = mu_min + mu_step * static_cast<double>(omega.size() - 1);
  return {"tabulated", [spline, mu_min, mu_max, temperature](double mu, double T) {
            if (std::abs(T - temperature) > 1e-12 * std::max(1.0, temperature)) {
              throw InvalidArgument("tabulated grand potential queried at a different temperature");
            }
            if (mu < mu_min || mu > mu_max) throw InvalidArgument("mu outside the tabulated range");
            return (*spline)(mu);
          }};
}

double GrandPotentialModel::operator()(double mu, double T) const {
  const double v = omega_(mu, T);
  if (!std::isfinite(v)) throw NumericalError("grand potential returned a non-finite value");
  return v;
}

void NeuronPool::validate() const {
  if (!(temperature > 0.0)) throw InvalidArgument("neuron pool temperature must be positive");
  if (active > pool_size) throw InvalidArgument("active neuron count exceeds pool size");
}

namespace {
NeuronCount central_differences(const GrandPotentialModel& model, double mu, double T, double d) {
  const double up = model(mu + d, T);
  const double mid = model(mu, T);
  const double down = model(mu - d, T);
  const double first = (up - down) / (2.0 * d);
  const double second = (up - 2.0 * mid + down) / (d * d);
  return {-first, std::sqrt(T * std::abs(second))};
}

bool close(double a, double b) { return std::abs(a - b) <= 1e-3 * std::max(std::abs(a), std::abs(b)) + 1e-9; }
}  // namespace

NeuronCount mean_and_delta_N(const GrandPotentialModel& model, double mu, double T, double dmu) {
  if (!(T > 0.0)) throw InvalidArgument("temperature must be positive");
  double d = dmu > 0.0 ? dmu : 1e-3 * std::max(T, std::abs(mu));
  for (int attempt = 0; attempt < 8; ++attempt, d *= 0.5) {
    const NeuronCount coarse = central_differences(model, mu, T, d);
    const NeuronCount fine = central_differences(model, mu, T, 0.5 * d);
    if (close(coarse.mean, fine.mean) && close(coarse.delta, fine.delta)) return fine;
  }
  throw NumericalError("mean_and_delta_N: second difference unstable under step halving");
}

std::vector<std::size_t> sample_pool(const NeuronPool& pool, std::size_t n_sweeps, std::uint64_t seed) {
  pool.validate();
  if (n_sweeps < 1) throw InvalidArgument("sample_pool needs at least one sweep");
  const double x = (pool.mu - pool.activation) / pool.temperature;
  const double p_on = std::min(1.0, std::exp(x));
  const double p_off = std::min(1.0, std::exp(-x));
  std::vector<std::uint8_t> state(pool.pool_size, 0);
  for (std::size_t j = 0; j < pool.active; ++j) state[j] = 1;
  std::size_t n = pool.active;
  CounterRng rng(seed, 0);
  std::vector<std::size_t> series;
  series.reserve(n_sweeps);
  for (std::size_t s = 0; s < n_sweeps; ++s) {
    for (std::size_t move = 0; move < pool.pool_size; ++move) {
      const std::size_t j = rng.below(pool.pool_size);
      const double u = rng.uniform();
      if (state[j] == 0) {
        if (u < p_on) {
          state[j] = 1;
          ++n;
        }
      } else if (u < p_off) {
        state[j] = 0;
        --n;
      }
    }
    series.push_back(n);
  }
  return series;
}

double quantized_free_energy(double omega, double mu, long long n_active) {
  return omega + mu * static_cast<double>(n_active);
}

double planck_from_mu(double mu, double eps, PlanckBranch branch) {
  if (!(mu > 0.0)) throw NoMultivaluedStructure();
  if (!(eps > 0.0)) throw InvalidArgument("epsilon must be positive");
  const double hbar = mu * eps / (2.0 * std::numbers::pi);
  return branch == PlanckBranch::positive ? hbar : -hbar;
}

double lambda_from_hbar(double D, double gamma, double eps, double hbar) {
  if (hbar == 0.0) throw InvalidArgument("lambda_from_hbar: hbar must be non-zero");
  if (!(D > 0.0) || !(gamma > 0.0) || !(eps > 0.0)) throw InvalidArgument("lambda_from_hbar: D, gamma, eps must be positive");
  return 4.0 * D * eps * eps / (gamma * hbar * hbar);
}

double hbar_from_lambda(double D, double gamma, double eps, double lambda) {
  if (!(D > 0.0) || !(gamma > 0.0) || !(eps > 0.0) || !(lambda > 0.0)) {
    throw InvalidArgument("hbar_from_lambda: all parameters must be positive");
  }
  return eps * std::sqrt(4.0 * D / (gamma * lambda));
}

double phase_invariance_check(const ScalarField& p, const ScalarField& F, double mu, double eps, double hbar,
                              long long n) {
  const WaveFunction base = assemble(p, F, eps, hbar, 1.0);
  ScalarField shifted = F;
  for (double& f : shifted.values()) f += mu * static_cast<double>(n);
  const WaveFunction moved = assemble(p, shifted, eps, hbar, 1.0);
  double dev = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) dev = std::max(dev, std::abs(moved.psi[i] - base.psi[i]));
  return dev;
}

FirstLawReport first_law_residual(std::span<const double> F, std::span<const double> N, double mu) {
  if (F.size() != N.size() || F.size() < 2) throw InvalidArgument("first_law_residual needs matching series of length >= 2");
  FirstLawReport rep;
  double scale = 0.0;
  for (std::size_t t = 1; t < F.size(); ++t) {
    const double r = (F[t] - F[t - 1]) - mu * (N[t] - N[t - 1]);
    rep.residuals.push_back(r);
    scale = std::max({scale, std::abs(F[t]), std::abs(mu * N[t])});
  }
  double sum = 0.0, sum2 = 0.0;
  for (double r : rep.residuals) {
    rep.max_abs = std::max(rep.max_abs, std::abs(r));
    sum += r;
    sum2 += r * r;
  }
  const double n = static_cast<double>(rep.residuals.size());
  rep.mean = sum / n;
  rep.rms = std::sqrt(sum2 / n);
  if (rep.residuals.size() >= 2 && rep.rms > 0.0) {
    std::vector<double> sq;
    for (double r : rep.residuals) sq.push_back(r * r);
    const double se = std::sqrt(stats::variance(sq) / n);
    rep.significance = se > 0.0 ? stats::mean(sq) / se : std::numeric_limits<double>::infinity();
  }
  const double roundoff = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, scale);
  rep.violated = rep.significance > 5.0 && rep.rms > roundoff;
  return rep;
}

double added_entropy(double delta_N) {
  if (delta_N < 0.0) throw InvalidArgument("added_entropy: Delta N must be non-negative");
  return 2.0 * delta_N;
}

void write_pool_series(std::ostream& os, std::span<const std::size_t> series) {
  os << "# sweep N\n";
  for (std::size_t s = 0; s < series.size(); ++s) os << s << ' ' << series[s] << '\n';
}

}  // namespace emq
