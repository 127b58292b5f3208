#include "emq/microdynamics.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <memory>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "emq/errors.hpp"
#include "emq/random.hpp"

namespace emq {

void DriftDiffusionParams::validate() const {
  if (!(gamma > 0.0)) throw InvalidArgument("gamma must be positive");
  if (!(diffusion >= 0.0)) throw InvalidArgument("diffusion coefficient must be non-negative");
  if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
}

// ---------------------------------------------------------------------------
// Free-energy presets

FreeEnergyModel::FreeEnergyModel(std::string name, ValueFn value, GradientFn grad, bool time_dependent)
    : name_(std::move(name)), value_(std::move(value)), grad_(std::move(grad)), time_dependent_(time_dependent) {}

FreeEnergyModel FreeEnergyModel::constant(double c) {
  return {"constant", [c](double, const Point3&) { return c; }, [](double, const Point3&) { return Point3{}; },
          false};
}

FreeEnergyModel FreeEnergyModel::quadratic_well(double k, Point3 c) {
  return {"quadratic_well",
          [k, c](double, const Point3& q) {
            double r2 = 0.0;
            for (int i = 0; i < 3; ++i) r2 += (q[i] - c[i]) * (q[i] - c[i]);
            return -0.5 * k * r2;
          },
          [k, c](double, const Point3& q) {
            return Point3{-k * (q[0] - c[0]), -k * (q[1] - c[1]), -k * (q[2] - c[2])};
          },
          false};
}

FreeEnergyModel FreeEnergyModel::inverted_quadratic(double k, Point3 c) {
  FreeEnergyModel m = quadratic_well(k, c).negated();
  m.name_ = "inverted_quadratic";
  return m;
}

FreeEnergyModel FreeEnergyModel::double_well(double depth, double a) {
  if (!(a > 0.0)) throw InvalidArgument("double_well half separation must be positive");
  return {"double_well",
          [depth, a](double, const Point3& q) {
            const double s = (q[0] / a) * (q[0] / a) - 1.0;
            return -depth * s * s;
          },
          [depth, a](double, const Point3& q) {
            const double s = (q[0] / a) * (q[0] / a) - 1.0;
            return Point3{-depth * 4.0 * s * q[0] / (a * a), 0.0, 0.0};
          },
          false};
}

FreeEnergyModel FreeEnergyModel::plane_phase(Point3 kv, double rate) {
  return {"plane_phase",
          [kv, rate](double t, const Point3& q) { return kv[0] * q[0] + kv[1] * q[1] + kv[2] * q[2] - rate * t; },
          [kv](double, const Point3&) { return kv; }, rate != 0.0};
}

namespace {

/// Multilinear interpolation of a field at an arbitrary point.
double interpolate(const ScalarField& f, const Point3& q) {
  const Grid& g = f.grid();
  std::array<std::size_t, 3> lo{0, 0, 0}, hi{0, 0, 0};
  std::array<double, 3> frac{0.0, 0.0, 0.0};
  for (std::size_t k = 0; k < g.dims(); ++k) {
    const std::size_t n = g.points(k);
    double x = (q[k] - g.axis(k).lower) / g.spacing(k);
    if (g.boundary(k) == Boundary::periodic) {
      x = std::fmod(x, static_cast<double>(n));
      if (x < 0) x += static_cast<double>(n);
      lo[k] = std::min(static_cast<std::size_t>(x), n - 1);
      hi[k] = (lo[k] + 1) % n;
    } else {
      x = std::clamp(x, 0.0, static_cast<double>(n - 1));
      lo[k] = std::min(static_cast<std::size_t>(x), n - 2);
      hi[k] = lo[k] + 1;
    }
    frac[k] = x - static_cast<double>(lo[k]);
  }
  double sum = 0.0;
  const std::size_t corners = std::size_t{1} << g.dims();
  for (std::size_t c = 0; c < corners; ++c) {
    Index3 idx{0, 0, 0};
    double w = 1.0;
    for (std::size_t k = 0; k < g.dims(); ++k) {
      const bool up = (c >> k) & 1U;
      idx[k] = up ? hi[k] : lo[k];
      w *= up ? frac[k] : 1.0 - frac[k];
    }
    sum += w * f[g.flatten(idx)];
  }
  return sum;
}

struct TimeBracket {
  std::size_t i0, i1;
  double w1;
};

TimeBracket bracket(const std::vector<double>& times, double t) {
  if (times.size() == 1 || t <= times.front()) return {0, 0, 0.0};
  if (t >= times.back()) return {times.size() - 1, times.size() - 1, 0.0};
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const std::size_t i1 = static_cast<std::size_t>(it - times.begin());
  const std::size_t i0 = i1 - 1;
  return {i0, i1, (t - times[i0]) / (times[i1] - times[i0])};
}

}  // namespace

FreeEnergyModel FreeEnergyModel::tabulated(std::vector<double> times, std::vector<ScalarField> frames) {
  if (frames.empty() || frames.size() != times.size()) throw InvalidArgument("tabulated F needs one time per frame");
  if (!std::is_sorted(times.begin(), times.end())) throw InvalidArgument("tabulated F times must be ascending");
  for (const auto& f : frames) require_same_grid(f.grid(), frames.front().grid(), "tabulated free energy");
  struct Table {
    std::vector<double> times;
    std::vector<ScalarField> frames;
    std::vector<VectorField> grads;
  };
  auto table = std::make_shared<Table>();
  table->times = std::move(times);
  table->frames = std::move(frames);
  for (const auto& f : table->frames) table->grads.push_back(emq::gradient(f));
  const bool dynamic = table->frames.size() > 1;
  return {"tabulated",
          [table](double t, const Point3& q) {
            const auto b = bracket(table->times, t);
            return (1.0 - b.w1) * interpolate(table->frames[b.i0], q) + b.w1 * interpolate(table->frames[b.i1], q);
          },
          [table](double t, const Point3& q) {
            const auto b = bracket(table->times, t);
            Point3 g{};
            for (std::size_t k = 0; k < table->grads[b.i0].dims(); ++k) {
              g[k] = (1.0 - b.w1) * interpolate(table->grads[b.i0].component(k), q) +
                     b.w1 * interpolate(table->grads[b.i1].component(k), q);
            }
            return g;
          },
          dynamic};
}

FreeEnergyModel FreeEnergyModel::composite(FreeEnergyModel a, FreeEnergyModel b) {
  const bool dynamic = a.time_dependent() || b.time_dependent();
  std::string name = "composite(" + a.name() + "+" + b.name() + ")";
  return {std::move(name), [a, b](double t, const Point3& q) { return a.value(t, q) + b.value(t, q); },
          [a, b](double t, const Point3& q) {
            const Point3 ga = a.gradient(t, q), gb = b.gradient(t, q);
            return Point3{ga[0] + gb[0], ga[1] + gb[1], ga[2] + gb[2]};
          },
          dynamic};
}

FreeEnergyModel FreeEnergyModel::negated() const {
  auto v = value_;
  auto g = grad_;
  return {"negated(" + name_ + ")", [v](double t, const Point3& q) { return -v(t, q); },
          [g](double t, const Point3& q) {
            const Point3 x = g(t, q);
            return Point3{-x[0], -x[1], -x[2]};
          },
          time_dependent_};
}

ScalarField FreeEnergyModel::sample(const Grid& grid, double t) const {
  return ScalarField::from_function(grid, [&](const Point3& q) { return value(t, q); });
}

// ---------------------------------------------------------------------------
// Trajectory ensemble

namespace {

/// Applies the boundary rule to one coordinate; returns false if absorbed.
bool apply_boundary(const AxisSpec& a, double& x) {
  const double L = a.upper - a.lower;
  const bool inside = a.boundary == Boundary::periodic ? (x >= a.lower && x < a.upper) : (x >= a.lower && x <= a.upper);
  if (inside) return true;  // leave in-range positions bit-exact
  switch (a.boundary) {
    case Boundary::periodic: {
      double y = std::fmod(x - a.lower, L);
      if (y < 0.0) y += L;
      if (y >= L) y = 0.0;
      x = a.lower + y;
      return true;
    }
    case Boundary::reflecting: {
      double y = std::fmod(x - a.lower, 2.0 * L);
      if (y < 0.0) y += 2.0 * L;
      if (y > L) y = 2.0 * L - y;
      x = a.lower + y;
      return true;
    }
    case Boundary::absorbing:
      if (x < a.lower || x > a.upper) {
        x = std::clamp(x, a.lower, a.upper);
        return false;
      }
      return true;
  }
  return true;
}

}  // namespace

ParticleEnsemble ParticleEnsemble::at_point(const Grid& domain, std::size_t count, const Point3& q,
                                            std::uint64_t seed) {
  ParticleEnsemble ens;
  ens.domain = domain;
  ens.seed = seed;
  ens.alive.assign(count, 1);
  ens.positions.resize(count * domain.dims());
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t k = 0; k < domain.dims(); ++k) ens.positions[i * domain.dims() + k] = q[k];
  return ens;
}

ParticleEnsemble ParticleEnsemble::uniform(const Grid& domain, std::size_t count, std::uint64_t seed) {
  ParticleEnsemble ens = at_point(domain, count, {}, seed);
  for (std::size_t i = 0; i < count; ++i) {
    CounterRng rng(seed, i, std::uint64_t{1} << 40);
    for (std::size_t k = 0; k < domain.dims(); ++k) {
      const AxisSpec& a = domain.axis(k);
      ens.positions[i * domain.dims() + k] = a.lower + rng.uniform() * (a.upper - a.lower);
    }
  }
  return ens;
}

std::size_t ParticleEnsemble::alive_count() const {
  return static_cast<std::size_t>(std::count(alive.begin(), alive.end(), std::uint8_t{1}));
}

std::vector<double> ParticleEnsemble::coordinates(std::size_t k) const {
  std::vector<double> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i)
    if (alive[i]) out.push_back(positions[i * domain.dims() + k]);
  return out;
}

ParticleEnsemble langevin_step(const ParticleEnsemble& ens, const FreeEnergyModel& F,
                               const DriftDiffusionParams& params, double dt) {
  ParticleEnsemble out = ens;
  langevin_run(out, F, params, dt, 1);
  return out;
}

void langevin_run(ParticleEnsemble& ens, const FreeEnergyModel& F, const DriftDiffusionParams& params, double dt,
                  std::size_t n_steps) {
  params.validate();
  if (!(dt > 0.0)) throw InvalidArgument("langevin_step: dt must be positive");
  const std::size_t K = ens.domain.dims();
  double half_domain = ens.domain.axis(0).upper - ens.domain.axis(0).lower;
  for (std::size_t k = 1; k < K; ++k)
    half_domain = std::min(half_domain, ens.domain.axis(k).upper - ens.domain.axis(k).lower);
  half_domain *= 0.5;
  const double noise = std::sqrt(2.0 * params.diffusion * dt);

  for (std::size_t s = 0; s < n_steps; ++s) {
    const std::uint64_t counter0 = ens.steps * 2 * K;
    for (std::size_t i = 0; i < ens.size(); ++i) {
      if (!ens.alive[i]) continue;
      double* q = ens.positions.data() + i * K;
      Point3 x{};
      for (std::size_t k = 0; k < K; ++k) x[k] = q[k];
      const Point3 g = F.gradient(ens.time, x);
      double drift2 = 0.0;
      for (std::size_t k = 0; k < K; ++k) drift2 += g[k] * g[k];
      if (params.gamma * std::sqrt(drift2) * dt > half_domain) {
        throw NumericalError("langevin_step: drift displacement gamma*|grad F|*dt exceeds half the domain");
      }
      CounterRng rng(ens.seed, i, counter0);
      for (std::size_t k = 0; k < K; ++k) {
        q[k] += params.gamma * g[k] * dt + noise * rng.normal();
        if (!apply_boundary(ens.domain.axis(k), q[k])) ens.alive[i] = 0;
      }
    }
    ens.time += dt;
    ++ens.steps;
  }
}

// ---------------------------------------------------------------------------
// Fokker-Planck solver

namespace {

/// Bernoulli function x / (e^x - 1).
double bernoulli(double x) {
  if (std::abs(x) < 1e-8) return 1.0 - 0.5 * x;
  return x / std::expm1(x);
}

/// Coefficients of the particle flux j = a * p_from - b * p_to across one
/// face of width h, from node "from" toward its + neighbor "to".
struct FaceCoeffs {
  double a, b;
};

FaceCoeffs face_coeffs(double dF, double h, const DriftDiffusionParams& params) {
  if (params.diffusion == 0.0) {
    const double v = params.gamma * dF / h;
    return {std::max(v, 0.0) / h, std::max(-v, 0.0) / h};
  }
  const double delta = params.gamma * dF / params.diffusion;
  const double c = params.diffusion / (h * h);
  return {c * bernoulli(-delta), c * bernoulli(delta)};
}

bool pinned(const Grid& g, std::size_t flat) {
  const Index3 idx = g.unflatten(flat);
  for (std::size_t k = 0; k < g.dims(); ++k) {
    if (g.boundary(k) == Boundary::absorbing && (idx[k] == 0 || idx[k] + 1 == g.points(k))) return true;
  }
  return false;
}

using SpMat = Eigen::SparseMatrix<double>;

/// Generator L with dp/dt = L p.
SpMat assemble_generator(const ScalarField& Fnodes, const DriftDiffusionParams& params) {
  const Grid& g = Fnodes.grid();
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(g.size() * (1 + 4 * g.dims()));
  std::vector<double> diag(g.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Index3 idx = g.unflatten(i);
    for (std::size_t k = 0; k < g.dims(); ++k) {
      const auto j = g.neighbor(i, k, +1);
      if (!j) continue;
      const std::size_t jn = *j;
      const FaceCoeffs c = face_coeffs(Fnodes[jn] - Fnodes[i], g.spacing(k), params);
      // flux i -> j leaves i and enters j; rescale by the control-volume fraction
      const double wi = g.spacing(k) / g.axis_weight(k, idx[k]);
      const double wj = g.spacing(k) / g.axis_weight(k, g.unflatten(jn)[k]);
      const bool pi = pinned(g, i), pj = pinned(g, jn);
      if (!pi) {
        diag[i] -= wi * c.a;
        if (!pj) trips.emplace_back(i, jn, wi * c.b);
      }
      if (!pj) {
        diag[jn] -= wj * c.b;
        if (!pi) trips.emplace_back(jn, i, wj * c.a);
      }
    }
  }
  for (std::size_t i = 0; i < g.size(); ++i) trips.emplace_back(i, i, diag[i]);
  SpMat L(static_cast<Eigen::Index>(g.size()), static_cast<Eigen::Index>(g.size()));
  L.setFromTriplets(trips.begin(), trips.end());
  return L;
}

}  // namespace

FokkerPlanckResult evolve_fokker_planck(const ScalarField& p0, const FreeEnergyModel& F,
                                        const DriftDiffusionParams& params, double dt, std::size_t n_steps,
                                        const FokkerPlanckOptions& options, double t0) {
  params.validate();
  if (!(dt > 0.0)) throw InvalidArgument("evolve_fokker_planck: dt must be positive");
  const Grid& g = p0.grid();
  const double mass0 = integrate(p0);
  if (std::abs(mass0 - 1.0) > 1e-9) throw InvalidArgument("evolve_fokker_planck: p0 is not normalized");
  if (options.scheme == TimeScheme::explicit_euler) {
    for (std::size_t k = 0; k < g.dims(); ++k) {
      if (params.diffusion * dt / (g.spacing(k) * g.spacing(k)) > 0.25) {
        throw NumericalError("evolve_fokker_planck: explicit stability limit D*dt/h^2 <= 0.25 violated");
      }
    }
  }
  const std::size_t every = std::max<std::size_t>(1, options.record_every);

  Eigen::VectorXd p(static_cast<Eigen::Index>(g.size()));
  for (std::size_t i = 0; i < g.size(); ++i) p[static_cast<Eigen::Index>(i)] = pinned(g, i) ? 0.0 : p0[i];

  FokkerPlanckResult result;
  auto record = [&](double t) {
    ScalarField f(g);
    for (std::size_t i = 0; i < g.size(); ++i) f[i] = p[static_cast<Eigen::Index>(i)];
    result.times.push_back(t);
    result.frames.push_back(std::move(f));
  };
  auto mass_of = [&]() {
    double m = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) m += g.weight(i) * p[static_cast<Eigen::Index>(i)];
    return m;
  };
  record(t0);

  SpMat L;
  Eigen::SparseLU<SpMat> lu;
  bool have_factor = false;
  double t = t0;
  for (std::size_t s = 0; s < n_steps; ++s) {
    const double t_eval = options.scheme == TimeScheme::implicit_euler ? t + dt : t;
    if (s == 0 || F.time_dependent()) {
      L = assemble_generator(F.sample(g, t_eval), params);
      have_factor = false;
    }
    const double mass_before = mass_of();
    if (options.scheme == TimeScheme::explicit_euler) {
      if (s == 0 || F.time_dependent()) {
        double max_rate = 0.0;
        for (Eigen::Index i = 0; i < L.rows(); ++i) max_rate = std::max(max_rate, -L.coeff(i, i));
        if (max_rate * dt > 1.0) throw NumericalError("evolve_fokker_planck: explicit step exceeds drift stability");
      }
      p += dt * (L * p);
    } else {
      if (!have_factor) {
        SpMat A(L.rows(), L.cols());
        A.setIdentity();
        A -= dt * L;
        lu.compute(A);
        if (lu.info() != Eigen::Success) throw NumericalError("evolve_fokker_planck: factorization failed");
        have_factor = true;
      }
      p = lu.solve(p);
    }
    bool clipped = false;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      if (p[i] < 0.0) {
        if (p[i] < -1e-12) {
          ++result.negative_clips;
          clipped = true;
        }
        p[i] = 0.0;
      }
    }
    if (clipped) p *= mass_before / mass_of();
    t += dt;
    result.max_mass_drift = std::max(result.max_mass_drift, std::abs(mass_of() - mass0));
    if ((s + 1) % every == 0 || s + 1 == n_steps) record(t);
  }
  return result;
}

VectorField face_currents(const ScalarField& p, const ScalarField& F, const DriftDiffusionParams& params) {
  require_same_grid(p.grid(), F.grid(), "face_currents");
  const Grid& g = p.grid();
  VectorField J(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (std::size_t k = 0; k < g.dims(); ++k) {
      const auto j = g.neighbor(i, k, +1);
      if (!j) continue;
      const FaceCoeffs c = face_coeffs(F[*j] - F[i], g.spacing(k), params);
      // particle flux is h*(a p_i - b p_j); J carries the opposite sign
      J.component(k)[i] = -g.spacing(k) * (c.a * p[i] - c.b * p[*j]);
    }
  }
  return J;
}

ScalarField stationary_density(const Grid& grid, const FreeEnergyModel& F, const DriftDiffusionParams& params,
                               double t) {
  params.validate();
  if (!(params.diffusion > 0.0)) throw InvalidArgument("stationary_density requires D > 0");
  ScalarField p = F.sample(grid, t);
  const double top = *std::max_element(p.values().begin(), p.values().end());
  for (double& x : p.values()) x = std::exp(params.gamma * (x - top) / params.diffusion);
  normalize_density(p);
  return p;
}

ScalarField estimate_density(const ParticleEnsemble& ens, const Grid& grid, double bandwidth) {
  if (ens.alive_count() == 0) throw InvalidArgument("estimate_density: empty ensemble");
  if (ens.domain.dims() != grid.dims()) throw InvalidArgument("estimate_density: dimension mismatch");
  double hmax = 0.0;
  for (std::size_t k = 0; k < grid.dims(); ++k) hmax = std::max(hmax, grid.spacing(k));
  if (bandwidth < hmax * (1.0 - 1e-12)) throw InvalidArgument("estimate_density: bandwidth must be >= grid spacing");

  ScalarField counts(grid);
  const std::size_t K = grid.dims();
  for (std::size_t i = 0; i < ens.size(); ++i) {
    if (!ens.alive[i]) continue;
    std::array<std::size_t, 3> lo{}, hi{};
    std::array<double, 3> frac{};
    for (std::size_t k = 0; k < K; ++k) {
      const std::size_t n = grid.points(k);
      double x = (ens.positions[i * K + k] - grid.axis(k).lower) / grid.spacing(k);
      if (grid.boundary(k) == Boundary::periodic) {
        x = std::fmod(x, static_cast<double>(n));
        if (x < 0) x += static_cast<double>(n);
        lo[k] = std::min(static_cast<std::size_t>(x), n - 1);
        hi[k] = (lo[k] + 1) % n;
      } else {
        x = std::clamp(x, 0.0, static_cast<double>(n - 1));
        lo[k] = std::min(static_cast<std::size_t>(x), n - 2);
        hi[k] = lo[k] + 1;
      }
      frac[k] = x - static_cast<double>(lo[k]);
    }
    for (std::size_t c = 0; c < (std::size_t{1} << K); ++c) {
      Index3 idx{0, 0, 0};
      double w = 1.0;
      for (std::size_t k = 0; k < K; ++k) {
        const bool up = (c >> k) & 1U;
        idx[k] = up ? hi[k] : lo[k];
        w *= up ? frac[k] : 1.0 - frac[k];
      }
      if (w > 0.0) counts[grid.flatten(idx)] += w;
    }
  }

  if (bandwidth > hmax * (1.0 + 1e-12)) {
    // separable Gaussian smoothing of the binned mass
    for (std::size_t k = 0; k < K; ++k) {
      const double h = grid.spacing(k);
      const long n = static_cast<long>(grid.points(k));
      const long half = static_cast<long>(std::ceil(4.0 * bandwidth / h));
      std::vector<double> kernel(static_cast<std::size_t>(2 * half + 1));
      double ksum = 0.0;
      for (long j = -half; j <= half; ++j) {
        const double x = static_cast<double>(j) * h / bandwidth;
        kernel[static_cast<std::size_t>(j + half)] = std::exp(-0.5 * x * x);
        ksum += kernel[static_cast<std::size_t>(j + half)];
      }
      for (double& v : kernel) v /= ksum;
      ScalarField next(grid);
      const std::size_t s = grid.stride(k);
      for (std::size_t flat = 0; flat < grid.size(); ++flat) {
        const long i = static_cast<long>((flat / s) % static_cast<std::size_t>(n));
        const std::size_t base = flat - static_cast<std::size_t>(i) * s;
        for (long j = -half; j <= half; ++j) {
          long t = i + j;
          if (grid.boundary(k) == Boundary::periodic) {
            t = ((t % n) + n) % n;
          } else if (grid.boundary(k) == Boundary::reflecting) {
            while (t < 0 || t >= n) t = t < 0 ? -t : 2 * (n - 1) - t;
          } else if (t < 0 || t >= n) {
            continue;
          }
          next[base + static_cast<std::size_t>(t) * s] += kernel[static_cast<std::size_t>(j + half)] * counts[flat];
        }
      }
      counts = std::move(next);
    }
  }

  // convert binned mass to density per control volume
  for (std::size_t i = 0; i < grid.size(); ++i) counts[i] /= grid.weight(i);
  normalize_density(counts);
  return counts;
}

void write_trajectories(std::ostream& os, const ParticleEnsemble& ens) {
  os << "# time id";
  for (std::size_t k = 0; k < ens.domain.dims(); ++k) os << " q" << k;
  os << '\n' << std::setprecision(17);
  for (std::size_t i = 0; i < ens.size(); ++i) {
    if (!ens.alive[i]) continue;
    os << ens.time << ' ' << i;
    for (double x : ens.position(i)) os << ' ' << x;
    os << '\n';
  }
}

}  // namespace emq
