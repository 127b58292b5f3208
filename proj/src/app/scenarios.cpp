#include "emq/app/scenarios.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "emq/app/manifest.hpp"
#include "emq/app/verify.hpp"
#include "emq/errors.hpp"
#include "emq/field_io.hpp"
#include "emq/measurement.hpp"
#include "emq/stats.hpp"
#include "emq/thermo.hpp"

namespace emq::app {

Subcommand subcommand_from_string(const std::string& name) {
  if (name == "simulate") return Subcommand::simulate;
  if (name == "solve") return Subcommand::solve;
  if (name == "thermo") return Subcommand::thermo;
  if (name == "measure") return Subcommand::measure;
  if (name == "compare") return Subcommand::compare;
  if (name == "verify") return Subcommand::verify;
  throw ConfigError("<subcommand>", 0, "unknown subcommand '" + name + "'");
}

FreeEnergyModel make_free_energy(const PresetSpec& preset, std::size_t dims) {
  if (preset.name == "constant") return FreeEnergyModel::constant(preset.scalar("value", 0.0));
  if (preset.name == "quadratic_well") {
    return FreeEnergyModel::quadratic_well(preset.scalar("stiffness", 1.0), preset.point("center", dims));
  }
  if (preset.name == "inverted_quadratic") {
    return FreeEnergyModel::inverted_quadratic(preset.scalar("stiffness", 1.0), preset.point("center", dims));
  }
  if (preset.name == "double_well") {
    return FreeEnergyModel::double_well(preset.scalar("depth", 1.0), preset.scalar("half_separation", 1.0));
  }
  throw ConfigError("free_energy.preset", 0, "unknown preset '" + preset.name + "'");
}

ScalarField make_potential(const PresetSpec& preset, const Grid& grid, double mass) {
  const std::size_t K = grid.dims();
  if (preset.name == "zero") return ScalarField(grid);
  if (preset.name == "harmonic") {
    const double w = preset.scalar("omega", 1.0);
    const Point3 c = preset.point("center", K);
    return ScalarField::from_function(grid, [&](const Point3& q) {
      double r2 = 0.0;
      for (std::size_t k = 0; k < K; ++k) r2 += (q[k] - c[k]) * (q[k] - c[k]);
      return 0.5 * mass * w * w * r2;
    });
  }
  if (preset.name == "linear") {
    const Point3 slope = preset.point("slope", K);
    return ScalarField::from_function(grid, [&](const Point3& q) {
      double v = 0.0;
      for (std::size_t k = 0; k < K; ++k) v += slope[k] * q[k];
      return v;
    });
  }
  throw ConfigError("potential.preset", 0, "unknown preset '" + preset.name + "'");
}

WaveFunction make_initial_wave(const PresetSpec& preset, const Grid& grid, const ScalarField& V, double mass,
                               double hbar) {
  const std::size_t K = grid.dims();
  if (preset.name == "gaussian") {
    return gaussian_packet(grid, preset.point("center", K), preset.scalar("width", 1.0), preset.point("momentum", K),
                           hbar, mass);
  }
  if (preset.name == "ground_state") return stationary_states(grid, V, mass, hbar, 1).states.front();
  if (preset.name == "vortex") {
    const MadelungState v = vortex_state(grid, preset.point("center", K), static_cast<int>(preset.scalar("winding", 1)),
                                         preset.scalar("core", 0.5), preset.scalar("envelope", 2.0), mass, hbar);
    WaveFunction wf{ComplexField(grid), hbar, mass};
    for (std::size_t i = 0; i < grid.size(); ++i) {
      wf.psi[i] = std::polar(std::sqrt(v.density()[i]), v.action()[i] / hbar);
    }
    return wf;
  }
  throw ConfigError("initial.preset", 0, "preset '" + preset.name + "' does not define a wavefunction");
}

namespace {

/// Collects artifacts written into the output directory.
class Outputs {
 public:
  explicit Outputs(std::filesystem::path dir) : dir_(std::move(dir)) { std::filesystem::create_directories(dir_); }

  std::ofstream open(const std::string& name) {
    names_.push_back(name);
    std::ofstream out(dir_ / name);
    if (!out) throw std::runtime_error("cannot write " + (dir_ / name).string());
    out << std::setprecision(17);
    return out;
  }

  const std::vector<std::string>& names() const { return names_; }
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::string> names_;
};

/// key = value lines, always echoing the resolved parameter set first.
class Report {
 public:
  Report() { os_ << std::setprecision(17); }
  template <class T>
  Report& add(const std::string& key, const T& value) {
    os_ << key << " = " << value << '\n';
    return *this;
  }
  std::string str() const { return os_.str(); }

 private:
  std::ostringstream os_;
};

std::string grid_text(const std::vector<AxisSpec>& axes) {
  std::ostringstream os;
  os << std::setprecision(17);
  for (std::size_t k = 0; k < axes.size(); ++k) {
    if (k) os << "; ";
    os << '[' << axes[k].lower << ", " << axes[k].upper << "] n=" << axes[k].points << ' ' << to_string(axes[k].boundary);
  }
  return os.str();
}

void echo_parameters(Report& r, const Scenario& s, std::optional<std::uint64_t> seed) {
  r.add("kind", to_string(s.kind));
  if (seed) r.add("seed", *seed);
  if (!s.grid.empty()) r.add("grid", grid_text(s.grid));
  if (s.gamma > 0.0) {
    r.add("gamma", s.gamma).add("diffusion", s.diffusion).add("epsilon", s.epsilon).add("mass", s.mass());
  }
  if (s.hbar) {
    const double hbar = s.resolved_hbar();
    r.add("hbar", hbar);
    if (s.hbar->mode == HbarMode::from_mu) r.add("mu", s.hbar->value);
    if (s.gamma > 0.0 && s.diffusion > 0.0) {
      r.add("lambda", lambda_from_hbar(s.diffusion, s.gamma, s.epsilon, hbar));
    } else if (s.gamma > 0.0) {
      r.add("lambda", std::string("undetermined (no diffusion configured)"));
    }
  }
  if (s.time) r.add("dt", s.time->dt).add("steps", s.time->steps).add("record_every", s.time->record_every);
}

std::size_t record_stride(const TimeSpec& t) {
  return t.record_every > 0 ? t.record_every : std::max<std::size_t>(t.steps, 1);
}

void require_kind(const Scenario& s, Subcommand command, std::initializer_list<ScenarioKind> allowed,
                  const char* name) {
  for (ScenarioKind k : allowed) {
    if (s.kind == k) return;
  }
  (void)command;
  throw ConfigError("kind", 0, "kind " + to_string(s.kind) + " cannot be run with '" + name + "'");
}

Grid scenario_grid(const Scenario& s) { return Grid(std::span<const AxisSpec>(s.grid)); }

DriftDiffusionParams drift_params(const Scenario& s) {
  DriftDiffusionParams p{s.gamma, s.diffusion, s.epsilon};
  p.validate();
  return p;
}

void run_langevin(const Scenario& s, std::uint64_t seed, Outputs& out, Report& r) {
  const Grid g = scenario_grid(s);
  const FreeEnergyModel F = make_free_energy(*s.free_energy, g.dims());
  const auto params = drift_params(s);
  ParticleEnsemble ens = s.initial->name == "point"
                             ? ParticleEnsemble::at_point(g, s.trajectories, s.initial->point("at", g.dims()), seed)
                             : ParticleEnsemble::uniform(g, s.trajectories, seed);
  const std::size_t stride = record_stride(*s.time);
  auto traj = out.open("trajectories.txt");
  write_trajectories(traj, ens);
  for (std::size_t done = 0; done < s.time->steps;) {
    const std::size_t chunk = std::min(stride, s.time->steps - done);
    langevin_run(ens, F, params, s.time->dt, chunk);
    done += chunk;
    write_trajectories(traj, ens);
  }
  double hmax = 0.0;
  for (std::size_t k = 0; k < g.dims(); ++k) hmax = std::max(hmax, g.spacing(k));
  const ScalarField density = estimate_density(ens, g, std::max(s.bandwidth, hmax));
  auto dens = out.open("density.field");
  write_field(dens, density, ens.time);
  r.add("alive", ens.alive_count()).add("time", ens.time);
  if (g.dims() == 1 && s.diffusion > 0.0) {
    const ScalarField target = stationary_density(g, F, params, ens.time);
    std::vector<double> cdf(g.size(), 0.0);
    for (std::size_t i = 1; i < g.size(); ++i) {
      cdf[i] = cdf[i - 1] + 0.5 * (target[i] + target[i - 1]) * g.spacing(0);
    }
    const double lo = g.axis(0).lower, h = g.spacing(0);
    auto cdf_at = [&](double q) {
      const double x = (q - lo) / h;
      if (x <= 0.0) return 0.0;
      if (x >= static_cast<double>(g.size() - 1)) return 1.0;
      const auto i = static_cast<std::size_t>(x);
      return (cdf[i] + (x - static_cast<double>(i)) * (cdf[i + 1] - cdf[i])) / cdf.back();
    };
    const auto q = ens.coordinates(0);
    r.add("ks_distance_to_stationary", stats::ks_distance(q, cdf_at))
        .add("ks_critical_1pct", stats::ks_critical(q.size(), 0.01));
  }
}

void run_fokker_planck(const Scenario& s, Outputs& out, Report& r) {
  const Grid g = scenario_grid(s);
  const FreeEnergyModel F = make_free_energy(*s.free_energy, g.dims());
  const auto params = drift_params(s);
  ScalarField p0(g, 1.0);
  if (s.initial->name == "gaussian") {
    const Point3 c = s.initial->point("center", g.dims());
    const double w = s.initial->scalar("width", 1.0);
    p0 = ScalarField::from_function(g, [&](const Point3& q) {
      double r2 = 0.0;
      for (std::size_t k = 0; k < g.dims(); ++k) r2 += (q[k] - c[k]) * (q[k] - c[k]);
      return std::exp(-r2 / (2.0 * w * w));
    });
  }
  normalize_density(p0);
  FokkerPlanckOptions opt;
  opt.record_every = record_stride(*s.time);
  if (s.scheme == "explicit") opt.scheme = TimeScheme::explicit_euler;
  const auto res = evolve_fokker_planck(p0, F, params, s.time->dt, s.time->steps, opt);
  auto frames = out.open("density_frames.field");
  for (std::size_t f = 0; f < res.frames.size(); ++f) write_field(frames, res.frames[f], res.times[f]);
  auto final_out = out.open("density_final.field");
  write_field(final_out, res.frames.back(), res.times.back());
  r.add("final_time", res.times.back()).add("max_mass_drift", res.max_mass_drift).add("negative_clips", res.negative_clips);
  if (params.diffusion > 0.0 && !F.time_dependent()) {
    const ScalarField target = stationary_density(g, F, params);
    auto st = out.open("stationary.field");
    write_field(st, target);
    r.add("l1_to_stationary", l1_distance(res.frames.back(), target));
  }
}

void write_wave_observables(std::ostream& os, const Evolution& ev, const ScalarField& V) {
  const std::size_t K = ev.frames.front().grid().dims();
  os << "# t norm energy";
  for (std::size_t k = 0; k < K; ++k) os << " q" << k << "_mean q" << k << "_var p" << k << "_mean";
  os << '\n';
  for (std::size_t f = 0; f < ev.frames.size(); ++f) {
    os << ev.times[f] << ' ' << norm(ev.frames[f]) << ' ' << energy(ev.frames[f], V);
    for (std::size_t k = 0; k < K; ++k) {
      os << ' ' << position_mean(ev.frames[f], k) << ' ' << position_variance(ev.frames[f], k) << ' '
         << momentum_mean(ev.frames[f], k);
    }
    os << '\n';
  }
}

Scheme scheme_of(const Scenario& s) {
  if (s.scheme == "crank-nicolson") return Scheme::crank_nicolson;
  if (s.scheme == "split-step") return Scheme::split_step;
  if (s.scheme != "auto") throw ConfigError("scheme", 0, "scheme '" + s.scheme + "' does not apply to wave evolution");
  return Scheme::automatic;
}

void run_schrodinger(const Scenario& s, Outputs& out, Report& r) {
  const Grid g = scenario_grid(s);
  const double m = s.mass(), hbar = s.resolved_hbar();
  const ScalarField V = make_potential(*s.potential, g, m);
  const WaveFunction psi0 = make_initial_wave(*s.initial, g, V, m, hbar);
  const Evolution ev = evolve(psi0, V, s.time->dt, s.time->steps, {scheme_of(s), record_stride(*s.time)});
  auto frames = out.open("psi_frames.field");
  for (std::size_t f = 0; f < ev.frames.size(); ++f) write_field(frames, ev.frames[f].psi, ev.times[f]);
  auto obs = out.open("observables.txt");
  write_wave_observables(obs, ev, V);
  const double e0 = energy(ev.frames.front(), V), e1 = energy(ev.frames.back(), V);
  r.add("norm_drift", std::abs(norm(ev.frames.back()) - norm(ev.frames.front())))
      .add("energy_initial", e0)
      .add("energy_relative_drift", std::abs(e1 - e0) / std::max(std::abs(e0), 1e-300));
  if (g.dims() == 2) r.add("total_winding_final", decompose(ev.frames.back(), s.epsilon).total_winding);
}

void run_solve(const Scenario& s, Outputs& out, Report& r) {
  const Grid g = scenario_grid(s);
  const double m = s.mass(), hbar = s.resolved_hbar();
  const ScalarField V = make_potential(*s.potential, g, m);
  EigenMethod method = EigenMethod::automatic;
  if (s.solve->method == "tridiagonal") method = EigenMethod::tridiagonal;
  if (s.solve->method == "imaginary-time") method = EigenMethod::imaginary_time;
  const Spectrum sp = stationary_states(g, V, m, hbar, s.solve->states, method);
  auto spec = out.open("spectrum.txt");
  write_spectrum(spec, sp);
  for (std::size_t n = 0; n < sp.states.size(); ++n) {
    auto f = out.open("state_" + std::to_string(n) + ".field");
    write_field(f, sp.states[n].psi);
  }
  for (std::size_t n = 0; n < sp.energies.size(); ++n) r.add("E_" + std::to_string(n), sp.energies[n]);
  r.add("relaxation_iterations", sp.iterations);
}

MadelungState madelung_initial(const Scenario& s, const Grid& g, const ScalarField& V) {
  const double m = s.mass(), hbar = s.resolved_hbar();
  if (s.initial->name == "vortex") {
    return vortex_state(g, s.initial->point("center", g.dims()), static_cast<int>(s.initial->scalar("winding", 1)),
                        s.initial->scalar("core", 0.5), s.initial->scalar("envelope", 2.0), m, hbar);
  }
  return to_madelung(make_initial_wave(*s.initial, g, V, m, hbar));
}

/// Advances by `dt` in equal substeps no longer than the recommended step.
MadelungState madelung_advance(MadelungState st, const ScalarField& V, double dt) {
  const auto sub = static_cast<std::size_t>(std::ceil(dt / recommended_dt(st) - 1e-12));
  const double h = dt / static_cast<double>(std::max<std::size_t>(sub, 1));
  for (std::size_t i = 0; i < std::max<std::size_t>(sub, 1); ++i) st = madelung_step(st, V, h);
  return st;
}

void run_madelung(const Scenario& s, Outputs& out, Report& r) {
  const Grid g = scenario_grid(s);
  const ScalarField V = make_potential(*s.potential, g, s.mass());
  MadelungState st = madelung_initial(s, g, V);
  const std::size_t stride = record_stride(*s.time);
  auto frames = out.open("density_frames.field");
  auto obs = out.open("observables.txt");
  obs << "# t mass";
  std::optional<LatticeLoop> loop;
  if (g.dims() == 2) {
    loop = rectangle_loop(g, g.points(0) / 4, g.points(1) / 4, 3 * g.points(0) / 4, 3 * g.points(1) / 4);
    obs << " circulation circulation_quanta";
  }
  obs << '\n';
  const double quantum = 2.0 * std::numbers::pi * st.hbar() / st.mass();
  auto record = [&] {
    write_field(frames, st.density(), st.time);
    obs << st.time << ' ' << integrate(st.density());
    if (loop) {
      const double c = circulation(st, *loop);
      obs << ' ' << c << ' ' << c / quantum;
    }
    obs << '\n';
  };
  record();
  const double mass0 = integrate(st.density());
  for (std::size_t done = 0; done < s.time->steps;) {
    const std::size_t chunk = std::min(stride, s.time->steps - done);
    for (std::size_t i = 0; i < chunk; ++i) st = madelung_advance(st, V, s.time->dt);
    done += chunk;
    record();
  }
  auto action_out = out.open("action_final.field");
  write_field(action_out, st.action(), st.time);
  r.add("mass_drift", std::abs(integrate(st.density()) - mass0)).add("final_time", st.time);
}

int run_compare(const Scenario& s, Outputs& out, Report& r) {
  const Grid g = scenario_grid(s);
  const double m = s.mass(), hbar = s.resolved_hbar();
  const ScalarField V = make_potential(*s.potential, g, m);
  const WaveFunction psi0 = make_initial_wave(*s.initial, g, V, m, hbar);
  const std::size_t stride = record_stride(*s.time);
  const Evolution ev = evolve(psi0, V, s.time->dt, s.time->steps, {scheme_of(s), stride});
  MadelungState st = to_madelung(psi0);
  auto series = out.open("l2_series.txt");
  series << "# t l2_distance\n";
  double last = 0.0, worst = 0.0;
  for (std::size_t f = 0; f < ev.frames.size(); ++f) {
    if (f > 0) st = madelung_advance(st, V, ev.times[f] - ev.times[f - 1]);
    ScalarField p(g);
    for (std::size_t i = 0; i < g.size(); ++i) p[i] = std::norm(ev.frames[f].psi[i]);
    last = l2_distance(p, st.density());
    worst = std::max(worst, last);
    series << ev.times[f] << ' ' << last << '\n';
  }
  r.add("l2_final", last).add("l2_max", worst).add("l2_tolerance", 1e-3);
  const bool ok = last <= 1e-3;
  r.add("equivalence", ok ? "pass" : "fail");
  return ok ? kOk : kInvariant;
}

void run_thermo(const Scenario& s, std::uint64_t seed, Outputs& out, Report& r) {
  const PoolSpec& ps = *s.pool;
  NeuronPool pool{ps.size, ps.activation, ps.temperature, ps.mu, ps.size / 2};
  const auto series = sample_pool(pool, ps.sweeps + ps.burn_in, seed);
  auto f = out.open("pool_series.txt");
  write_pool_series(f, series);
  std::vector<double> n(series.begin() + static_cast<std::ptrdiff_t>(ps.burn_in), series.end());
  const auto model = GrandPotentialModel::independent_pool(static_cast<double>(ps.size), ps.activation);
  const NeuronCount theory = mean_and_delta_N(model, ps.mu, ps.temperature);
  const double mean = stats::mean(n), sd = std::sqrt(stats::variance(n));
  const double se_mean = stats::blocked_mean_error(n), se_sd = stats::blocked_std_error(n);
  r.add("pool_size", ps.size).add("activation", ps.activation).add("temperature", ps.temperature).add("mu", ps.mu);
  r.add("sweeps", ps.sweeps).add("burn_in", ps.burn_in);
  r.add("mean_N_theory", theory.mean).add("mean_N_mc", mean).add("mean_N_stderr", se_mean);
  r.add("delta_N_theory", theory.delta).add("delta_N_mc", sd).add("delta_N_stderr", se_sd);
  r.add("added_entropy", added_entropy(theory.delta));
  if (ps.mu > 0.0) r.add("hbar_from_mu", planck_from_mu(ps.mu, s.epsilon));
}

int run_measure(const Scenario& s, std::uint64_t seed, Outputs& out, Report& r) {
  const MeasurementSpec& ms = *s.measurement;
  const double hbar = s.resolved_hbar();
  CMatrix H_main;
  if (ms.grid_hamiltonian) {
    const Grid g = scenario_grid(s);
    H_main = grid_hamiltonian(g, make_potential(*s.potential, g, s.mass()), s.mass(), hbar);
  } else {
    H_main = random_hermitian(ms.dimension, seed + 1);
  }
  const auto M = static_cast<std::size_t>(H_main.rows());
  const HamiltonianSpec pre{random_hermitian(M, seed), HamiltonianRole::pre, ms.pre_time};
  const HamiltonianSpec main{H_main, HamiltonianRole::main, ms.main_time};
  const HamiltonianSpec post{random_hermitian(M, seed + 2), HamiltonianRole::post, ms.post_time};
  const MeasurementSet D = random_diagonal_set(M, ms.operators, seed + 3);

  const StateVector psi0 = pre_evolve(1, pre, hbar);
  const StateVector psiT = apply(psi0, main, hbar);
  const auto direct = measure_diagonal(post_evolve(psiT, post, hbar), D);
  const MeasurementSet O = conjugated_operators(D, post, hbar);
  const auto conj = measure(psiT, O);
  double gap = 0.0;
  for (std::size_t m = 0; m < direct.size(); ++m) gap = std::max(gap, std::abs(direct[m] - conj[m]));
  const auto counts = sample_counts(direct, ms.draws, seed);
  auto f = out.open("measurement_report.txt");
  write_measurement_report(f, direct, counts);
  const CMatrix U = unitary(post, hbar);
  const double unitarity = (U.adjoint() * U - CMatrix::Identity(U.rows(), U.cols())).cwiseAbs().maxCoeff();
  r.add("dimension", M).add("operators", ms.operators).add("draws", ms.draws);
  r.add("pre_time", ms.pre_time).add("main_time", ms.main_time).add("post_time", ms.post_time);
  r.add("identity_max_gap", gap).add("completeness_error", O.completeness_error()).add("unitarity_error", unitarity);
  const bool ok = gap <= 1e-10 && O.completeness_error() <= 1e-10 && unitarity <= 1e-10;
  r.add("identity", ok ? "pass" : "fail");
  return ok ? kOk : kInvariant;
}

int run_verify(const Scenario& s, const RunOptions& options, Outputs& out, Report& r) {
  VerifyOptions vo;
  vo.tier = options.tier ? *options.tier : s.tier;
  const auto results = verify_suite(vo);
  auto f = out.open("verify_report.txt");
  write_verify_report(f, results, vo);
  std::size_t failed = 0;
  for (const auto& res : results) failed += res.passed ? 0 : 1;
  r.add("tier", vo.tier).add("checks", results.size()).add("failed", failed);
  return failed == 0 ? kOk : kInvariant;
}

}  // namespace

RunResult run_scenario(const Scenario& scenario, Subcommand command, const RunOptions& options) {
  Scenario s = scenario;
  if (options.seed_override) s.seed = options.seed_override;
  Outputs out(options.out_dir);
  Report report;
  echo_parameters(report, s, s.seed);
  const std::uint64_t seed = s.seed.value_or(0);
  int code = kOk;
  switch (command) {
    case Subcommand::simulate:
      require_kind(s, command, {ScenarioKind::langevin, ScenarioKind::fokker_planck, ScenarioKind::madelung,
                                ScenarioKind::schrodinger},
                   "simulate");
      if (s.kind == ScenarioKind::langevin) run_langevin(s, seed, out, report);
      if (s.kind == ScenarioKind::fokker_planck) run_fokker_planck(s, out, report);
      if (s.kind == ScenarioKind::madelung) run_madelung(s, out, report);
      if (s.kind == ScenarioKind::schrodinger) {
        if (!s.initial || !s.time) throw ConfigError("initial", 0, "simulate needs an initial state and time block");
        run_schrodinger(s, out, report);
      }
      break;
    case Subcommand::solve:
      require_kind(s, command, {ScenarioKind::schrodinger}, "solve");
      if (!s.solve) throw ConfigError("solve", 0, "required field is missing (stationary-state request)");
      run_solve(s, out, report);
      break;
    case Subcommand::thermo:
      require_kind(s, command, {ScenarioKind::thermo_pool}, "thermo");
      run_thermo(s, seed, out, report);
      break;
    case Subcommand::measure:
      require_kind(s, command, {ScenarioKind::measurement}, "measure");
      code = run_measure(s, seed, out, report);
      break;
    case Subcommand::compare:
      require_kind(s, command, {ScenarioKind::compare}, "compare");
      code = run_compare(s, out, report);
      break;
    case Subcommand::verify:
      require_kind(s, command, {ScenarioKind::verify}, "verify");
      code = run_verify(s, options, out, report);
      break;
  }
  {
    auto rep = out.open("report.txt");
    rep << report.str();
  }
  write_manifest(out.dir(), out.names());
  RunResult result{code, out.names(), report.str()};
  return result;
}

}  // namespace emq::app
