#include "emq/schrodinger.hpp"

#include <fftw3.h>

#include <Eigen/Dense>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "emq/errors.hpp"
#include "emq/random.hpp"

namespace emq {

namespace {

using cplx = std::complex<double>;
using SpMat = Eigen::SparseMatrix<cplx>;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_angle(double a) { return a - kTwoPi * std::round(a / kTwoPi); }

void check_physics(double hbar, double mass) {
  if (!(hbar > 0.0)) throw InvalidArgument("hbar must be positive");
  if (!(mass > 0.0)) throw InvalidArgument("mass must be positive");
}

/// Node lies on the outermost layer of a non-periodic axis.
bool on_wall(const Grid& g, std::size_t flat) {
  const Index3 idx = g.unflatten(flat);
  for (std::size_t k = 0; k < g.dims(); ++k) {
    if (g.boundary(k) == Boundary::periodic) continue;
    if (idx[k] == 0 || idx[k] + 1 == g.points(k)) return true;
  }
  return false;
}

void check_finite(const ComplexField& psi) {
  for (const cplx& v : psi.values()) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw NumericalError("wavefunction became non-finite");
  }
}

/// Strang splitting with FFTW on a fully periodic grid.
class SplitStep {
 public:
  SplitStep(const Grid& g, const ScalarField& V, double mass, double hbar, double dt)
      : grid_(g), buffer_(g.size()), half_potential_(g.size()), kinetic_(g.size()) {
    int n[Grid::kMaxDims];
    const int K = static_cast<int>(g.dims());
    for (int k = 0; k < K; ++k) n[k] = static_cast<int>(g.points(static_cast<std::size_t>(K - 1 - k)));
    auto* data = reinterpret_cast<fftw_complex*>(buffer_.data());
    forward_ = fftw_plan_dft(K, n, data, data, FFTW_FORWARD, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft(K, n, data, data, FFTW_BACKWARD, FFTW_ESTIMATE);
    if (!forward_ || !backward_) throw NumericalError("FFTW plan creation failed");
    for (std::size_t i = 0; i < g.size(); ++i) {
      half_potential_[i] = std::exp(cplx(0.0, -0.5 * dt * V[i] / hbar));
      const Index3 idx = g.unflatten(i);
      double k2 = 0.0;
      for (std::size_t k = 0; k < g.dims(); ++k) {
        const std::size_t nk = g.points(k);
        const double j = idx[k] < (nk + 1) / 2 ? static_cast<double>(idx[k])
                                                 : static_cast<double>(idx[k]) - static_cast<double>(nk);
        const double wave = kTwoPi * j / g.extent(k);
        k2 += wave * wave;
      }
      kinetic_[i] = std::exp(cplx(0.0, -hbar * dt * k2 / (2.0 * mass))) / static_cast<double>(g.size());
    }
  }
  SplitStep(const SplitStep&) = delete;
  SplitStep& operator=(const SplitStep&) = delete;
  ~SplitStep() {
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }

  void step(ComplexField& psi) {
    for (std::size_t i = 0; i < buffer_.size(); ++i) buffer_[i] = half_potential_[i] * psi[i];
    fftw_execute(forward_);
    for (std::size_t i = 0; i < buffer_.size(); ++i) buffer_[i] *= kinetic_[i];
    fftw_execute(backward_);
    for (std::size_t i = 0; i < buffer_.size(); ++i) psi[i] = half_potential_[i] * buffer_[i];
  }

 private:
  Grid grid_;
  std::vector<cplx> buffer_;
  std::vector<cplx> half_potential_;
  std::vector<cplx> kinetic_;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

class CrankNicolson {
 public:
  CrankNicolson(const Grid& g, const ScalarField& V, double mass, double hbar, double dt, const GaugeData* gauge) {
    const SpMat H = hamiltonian_matrix(g, V, mass, hbar, gauge);
    const cplx half(0.0, 0.5 * dt / hbar);
    SpMat I(g.size(), g.size());
    I.setIdentity();
    lhs_ = I + half * H;
    rhs_ = I - half * H;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (on_wall(g, i)) rhs_.coeffRef(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 0.0;
    }
    lhs_.makeCompressed();
    rhs_.makeCompressed();
    solver_.compute(lhs_);
    if (solver_.info() != Eigen::Success) throw NumericalError("Crank-Nicolson factorization failed");
  }

  void step(ComplexField& psi) {
    Eigen::Map<Eigen::VectorXcd> v(psi.values().data(), static_cast<Eigen::Index>(psi.size()));
    const Eigen::VectorXcd b = rhs_ * v;
    v = solver_.solve(b);
    if (solver_.info() != Eigen::Success) throw NumericalError("Crank-Nicolson solve failed");
  }

 private:
  SpMat lhs_;
  SpMat rhs_;
  Eigen::SparseLU<SpMat> solver_;
};

template <class Stepper>
Evolution run(const WaveFunction& wf, Stepper& stepper, double dt, std::size_t n_steps, std::size_t every, double t0) {
  Evolution out;
  WaveFunction cur = wf;
  out.times.push_back(t0);
  out.frames.push_back(cur);
  for (std::size_t s = 1; s <= n_steps; ++s) {
    stepper.step(cur.psi);
    if (s % every == 0 || s == n_steps) {
      check_finite(cur.psi);
      out.times.push_back(t0 + static_cast<double>(s) * dt);
      out.frames.push_back(cur);
    }
  }
  return out;
}

void check_evolve_args(const WaveFunction& wf, const ScalarField& V, double dt, const EvolveOptions& options) {
  require_same_grid(wf.grid(), V.grid(), "evolve");
  check_physics(wf.hbar, wf.mass);
  if (!(dt > 0.0)) throw InvalidArgument("evolve: dt must be positive");
  if (options.record_every < 1) throw InvalidArgument("evolve: record_every must be at least 1");
  for (double v : V.values()) {
    if (!std::isfinite(v)) throw InvalidArgument("evolve: potential is not finite");
  }
}

WaveFunction with_walls_cleared(const WaveFunction& wf) {
  WaveFunction out = wf;
  for (std::size_t i = 0; i < out.psi.size(); ++i) {
    if (on_wall(out.grid(), i)) out.psi[i] = 0.0;
  }
  return out;
}

}  // namespace

WaveFunction assemble(const ScalarField& p, const ScalarField& F, double eps, double hbar, double mass) {
  require_same_grid(p.grid(), F.grid(), "assemble");
  check_physics(hbar, mass);
  if (!(eps > 0.0)) throw InvalidArgument("assemble: epsilon must be positive");
  WaveFunction wf{ComplexField(p.grid()), hbar, mass};
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < 0.0 || !std::isfinite(p[i])) throw InvalidArgument("assemble: density must be non-negative");
    wf.psi[i] = std::polar(std::sqrt(p[i]), eps * F[i] / hbar);
  }
  return wf;
}

WaveFunction gaussian_packet(const Grid& grid, Point3 center, double width, Point3 momentum, double hbar,
                             double mass) {
  check_physics(hbar, mass);
  if (!(width > 0.0)) throw InvalidArgument("gaussian_packet: width must be positive");
  WaveFunction wf{ComplexField(grid), hbar, mass};
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Point3 q = grid.position(i);
    double r2 = 0.0, phase = 0.0;
    for (std::size_t k = 0; k < grid.dims(); ++k) {
      r2 += (q[k] - center[k]) * (q[k] - center[k]);
      phase += momentum[k] * q[k] / hbar;
    }
    wf.psi[i] = std::polar(std::exp(-r2 / (4.0 * width * width)), phase);
  }
  const double n = norm(wf);
  if (!(n > 0.0)) throw InvalidArgument("gaussian_packet: packet vanishes on the grid");
  for (auto& v : wf.psi.values()) v /= std::sqrt(n);
  return wf;
}

Decomposition decompose(const WaveFunction& wf, double eps) {
  check_physics(wf.hbar, wf.mass);
  if (!(eps > 0.0)) throw InvalidArgument("decompose: epsilon must be positive");
  const Grid& g = wf.grid();
  Decomposition d;
  d.density = ScalarField(g);
  for (std::size_t i = 0; i < g.size(); ++i) d.density[i] = std::norm(wf.psi[i]);
  d.mask = density_mask(d.density);

  d.phase = ScalarField(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Index3 idx = g.unflatten(i);
    std::optional<std::size_t> ref;
    for (std::size_t k = 0; k < g.dims() && !ref; ++k) {
      if (idx[k] > 0) ref = i - g.stride(k);
    }
    const double raw = std::arg(wf.psi[i]);
    if (!ref) {
      d.phase[i] = raw;
    } else if (!d.mask[i]) {
      d.phase[i] = d.phase[*ref];
    } else {
      d.phase[i] = d.phase[*ref] + wrap_angle(raw - d.phase[*ref]);
    }
  }
  d.free_energy = (wf.hbar / eps) * d.phase;
  d.free_energy_period = kTwoPi * wf.hbar / eps;

  d.velocity = VectorField(g);
  for (std::size_t k = 0; k < g.dims(); ++k) {
    const double h = g.spacing(k);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!d.mask[i]) continue;
      const auto up = g.neighbor(i, k, 1);
      const auto down = g.neighbor(i, k, -1);
      auto diff = [&](std::size_t j) { return std::arg(wf.psi[j] * std::conj(wf.psi[i])); };
      double grad = 0.0;
      if (up && down) {
        grad = (diff(*up) - diff(*down)) / (2.0 * h);
      } else if (g.boundary(k) == Boundary::absorbing) {
        grad = up ? diff(*up) / h : -diff(*down) / h;
      }
      d.velocity.component(k)[i] = wf.hbar / wf.mass * grad;
    }
  }

  if (g.dims() == 2) {
    d.plaquette_winding.assign(g.size(), 0);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const auto b = g.neighbor(i, 0, 1);
      if (!b) continue;
      const auto c = g.neighbor(*b, 1, 1);
      const auto e = g.neighbor(i, 1, 1);
      if (!c || !e) continue;
      const std::size_t corners[5] = {i, *b, *c, *e, i};
      bool valid = true;
      double total = 0.0;
      for (int s = 0; s < 4; ++s) {
        if (!d.mask[corners[s]]) valid = false;
        total += std::arg(wf.psi[corners[s + 1]] * std::conj(wf.psi[corners[s]]));
      }
      if (!valid) continue;
      d.plaquette_winding[i] = static_cast<int>(std::lround(total / kTwoPi));
      d.total_winding += d.plaquette_winding[i];
    }
  }
  return d;
}

MadelungState to_madelung(const WaveFunction& wf) {
  ScalarField p(wf.grid()), S(wf.grid());
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::norm(wf.psi[i]);
    S[i] = wf.hbar * std::arg(wf.psi[i]);
  }
  return MadelungState::from_action(std::move(p), std::move(S), wf.mass, wf.hbar, kTwoPi * wf.hbar);
}

double norm(const WaveFunction& wf) {
  double s = 0.0;
  for (std::size_t i = 0; i < wf.psi.size(); ++i) s += wf.grid().weight(i) * std::norm(wf.psi[i]);
  return s;
}

std::complex<double> overlap(const WaveFunction& a, const WaveFunction& b) {
  require_same_grid(a.grid(), b.grid(), "overlap");
  cplx s = 0.0;
  for (std::size_t i = 0; i < a.psi.size(); ++i) s += a.grid().weight(i) * std::conj(a.psi[i]) * b.psi[i];
  return s;
}

double energy(const WaveFunction& wf, const ScalarField& V) {
  require_same_grid(wf.grid(), V.grid(), "energy");
  const SpMat H = hamiltonian_matrix(wf.grid(), V, wf.mass, wf.hbar);
  Eigen::Map<const Eigen::VectorXcd> v(wf.psi.values().data(), static_cast<Eigen::Index>(wf.psi.size()));
  const Eigen::VectorXcd Hv = H * v;
  cplx s = 0.0;
  for (std::size_t i = 0; i < wf.psi.size(); ++i) {
    s += wf.grid().weight(i) * std::conj(wf.psi[i]) * Hv[static_cast<Eigen::Index>(i)];
  }
  return s.real() / norm(wf);
}

double position_mean(const WaveFunction& wf, std::size_t k) {
  if (k >= wf.grid().dims()) throw InvalidArgument("position_mean: axis out of range");
  double s = 0.0;
  for (std::size_t i = 0; i < wf.psi.size(); ++i) {
    s += wf.grid().weight(i) * std::norm(wf.psi[i]) * wf.grid().position(i)[k];
  }
  return s / norm(wf);
}

double position_variance(const WaveFunction& wf, std::size_t k) {
  const double mean = position_mean(wf, k);
  double s = 0.0;
  for (std::size_t i = 0; i < wf.psi.size(); ++i) {
    const double dq = wf.grid().position(i)[k] - mean;
    s += wf.grid().weight(i) * std::norm(wf.psi[i]) * dq * dq;
  }
  return s / norm(wf);
}

double momentum_mean(const WaveFunction& wf, std::size_t k) {
  if (k >= wf.grid().dims()) throw InvalidArgument("momentum_mean: axis out of range");
  const ComplexField d = partial(wf.psi, k);
  cplx s = 0.0;
  for (std::size_t i = 0; i < wf.psi.size(); ++i) s += wf.grid().weight(i) * std::conj(wf.psi[i]) * d[i];
  return (cplx(0.0, -wf.hbar) * s).real() / norm(wf);
}

SpMat hamiltonian_matrix(const Grid& g, const ScalarField& V, double mass, double hbar, const GaugeData* gauge) {
  require_same_grid(g, V.grid(), "hamiltonian_matrix");
  check_physics(hbar, mass);
  if (gauge) require_same_grid(g, gauge->omega0.grid(), "hamiltonian_matrix");
  std::vector<Eigen::Triplet<cplx>> triplets;
  triplets.reserve(g.size() * (1 + 2 * g.dims()));
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (on_wall(g, i)) continue;
    double diag = V[i];
    for (std::size_t k = 0; k < g.dims(); ++k) {
      const double hop = hbar * hbar / (2.0 * mass * g.spacing(k) * g.spacing(k));
      diag += 2.0 * hop;
      for (int dir : {1, -1}) {
        const auto j = g.neighbor(i, k, dir);
        if (!j || on_wall(g, *j)) continue;
        cplx link = 1.0;
        if (gauge) link = std::polar(1.0, gauge->eps * (gauge->omega0[*j] - gauge->omega0[i]) / hbar);
        triplets.emplace_back(static_cast<int>(i), static_cast<int>(*j), -hop * link);
      }
    }
    triplets.emplace_back(static_cast<int>(i), static_cast<int>(i), diag);
  }
  SpMat H(static_cast<Eigen::Index>(g.size()), static_cast<Eigen::Index>(g.size()));
  H.setFromTriplets(triplets.begin(), triplets.end());
  return H;
}

Evolution evolve(const WaveFunction& wf, const ScalarField& V, double dt, std::size_t n_steps,
                 const EvolveOptions& options, double t0) {
  check_evolve_args(wf, V, dt, options);
  const Grid& g = wf.grid();
  Scheme scheme = options.scheme;
  if (scheme == Scheme::automatic) scheme = g.fully_periodic() ? Scheme::split_step : Scheme::crank_nicolson;
  if (scheme == Scheme::split_step) {
    if (!g.fully_periodic()) throw InvalidArgument("evolve: split-step Fourier needs a fully periodic grid");
    SplitStep stepper(g, V, wf.mass, wf.hbar, dt);
    return run(wf, stepper, dt, n_steps, options.record_every, t0);
  }
  CrankNicolson stepper(g, V, wf.mass, wf.hbar, dt, nullptr);
  return run(with_walls_cleared(wf), stepper, dt, n_steps, options.record_every, t0);
}

GaugeData vector_potential(const ScalarField& omega0, double eps, double charge) {
  if (!(eps > 0.0)) throw InvalidArgument("vector_potential: epsilon must be positive");
  if (charge == 0.0 || !std::isfinite(charge)) throw InvalidArgument("vector_potential: charge must be non-zero");
  GaugeData gd{omega0, charge, eps, gradient(omega0)};
  for (std::size_t k = 0; k < gd.potential.dims(); ++k) {
    for (double& a : gd.potential.component(k).values()) a *= eps / charge;
  }
  return gd;
}

WaveFunction gauge_assemble(const ScalarField& p, const ScalarField& omega1, double eps, double hbar, double mass) {
  return assemble(p, omega1, eps, hbar, mass);
}

Evolution evolve_gauged(const WaveFunction& wf, const ScalarField& V, const GaugeData& gauge, double dt,
                        std::size_t n_steps, const EvolveOptions& options, double t0) {
  check_evolve_args(wf, V, dt, options);
  require_same_grid(wf.grid(), gauge.omega0.grid(), "evolve_gauged");
  const bool pure_zero = gauge.potential.max_norm() == 0.0;
  Scheme scheme = options.scheme;
  if (scheme == Scheme::automatic) {
    scheme = pure_zero && wf.grid().fully_periodic() ? Scheme::split_step : Scheme::crank_nicolson;
  }
  if (scheme == Scheme::split_step) {
    if (!pure_zero) throw InvalidArgument("evolve_gauged: split-step is only available for a vanishing potential");
    return evolve(wf, V, dt, n_steps, {Scheme::split_step, options.record_every}, t0);
  }
  CrankNicolson stepper(wf.grid(), V, wf.mass, wf.hbar, dt, &gauge);
  return run(with_walls_cleared(wf), stepper, dt, n_steps, options.record_every, t0);
}

namespace {

void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
  Eigen::Index at = 0;
  v.cwiseAbs().maxCoeff(&at);
  if (v[at] < 0.0) v = -v;
}

Spectrum tridiagonal_spectrum(const Grid& g, const ScalarField& V, double mass, double hbar, std::size_t count) {
  if (g.dims() != 1 || g.boundary(0) == Boundary::periodic) {
    throw InvalidArgument("stationary_states: the tridiagonal route needs a 1-D hard-wall grid");
  }
  const Eigen::Index n = static_cast<Eigen::Index>(g.points(0)) - 2;
  if (static_cast<Eigen::Index>(count) > n) throw InvalidArgument("stationary_states: count exceeds interior points");
  const double h = g.spacing(0);
  const double hop = hbar * hbar / (2.0 * mass * h * h);
  Eigen::VectorXd diag(n), sub(n - 1);
  for (Eigen::Index i = 0; i < n; ++i) diag[i] = V[static_cast<std::size_t>(i + 1)] + 2.0 * hop;
  sub.setConstant(-hop);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (es.info() != Eigen::Success) throw NumericalError("stationary_states: tridiagonal eigensolver failed");
  Spectrum out;
  for (std::size_t s = 0; s < count; ++s) {
    Eigen::VectorXd v = es.eigenvectors().col(static_cast<Eigen::Index>(s)) / std::sqrt(h);
    fix_sign(v);
    WaveFunction wf{ComplexField(g), hbar, mass};
    for (Eigen::Index i = 0; i < n; ++i) wf.psi[static_cast<std::size_t>(i + 1)] = v[i];
    out.energies.push_back(es.eigenvalues()[static_cast<Eigen::Index>(s)]);
    out.states.push_back(std::move(wf));
  }
  return out;
}

Spectrum relaxation_spectrum(const Grid& g, const ScalarField& V, double mass, double hbar, std::size_t count,
                             std::size_t max_iterations) {
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!on_wall(g, i)) active.push_back(i);
  }
  const Eigen::Index n = static_cast<Eigen::Index>(active.size());
  const Eigen::Index block = std::min<Eigen::Index>(static_cast<Eigen::Index>(count) + 2, n);
  if (static_cast<Eigen::Index>(count) > n) throw InvalidArgument("stationary_states: count exceeds active points");

  std::vector<Eigen::Index> slot(g.size(), -1);
  for (Eigen::Index a = 0; a < n; ++a) slot[active[static_cast<std::size_t>(a)]] = a;
  double hmin = g.spacing(0), vmin = V[active[0]];
  for (std::size_t k = 1; k < g.dims(); ++k) hmin = std::min(hmin, g.spacing(k));
  for (std::size_t i : active) vmin = std::min(vmin, V[i]);

  // Backward-Euler imaginary-time step exp(-tau (H - Vmin)) ~ (1 + tau (H - Vmin))^-1.
  const double tau = 1e4 * mass * hmin * hmin / (hbar * hbar);
  std::vector<Eigen::Triplet<double>> hT, aT;
  for (Eigen::Index a = 0; a < n; ++a) {
    const std::size_t i = active[static_cast<std::size_t>(a)];
    double diag = V[i];
    for (std::size_t k = 0; k < g.dims(); ++k) {
      const double hop = hbar * hbar / (2.0 * mass * g.spacing(k) * g.spacing(k));
      diag += 2.0 * hop;
      for (int dir : {1, -1}) {
        const auto j = g.neighbor(i, k, dir);
        if (!j || slot[*j] < 0) continue;
        hT.emplace_back(a, slot[*j], -hop);
        aT.emplace_back(a, slot[*j], -tau * hop);
      }
    }
    hT.emplace_back(a, a, diag);
    aT.emplace_back(a, a, 1.0 + tau * (diag - vmin));
  }
  Eigen::SparseMatrix<double> H(n, n), A(n, n);
  H.setFromTriplets(hT.begin(), hT.end());
  A.setFromTriplets(aT.begin(), aT.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> solver;
  solver.compute(A);
  if (solver.info() != Eigen::Success) throw NumericalError("stationary_states: relaxation factorization failed");

  Eigen::MatrixXd X(n, block);
  CounterRng rng(0x5eed, 7);
  for (Eigen::Index c = 0; c < block; ++c)
    for (Eigen::Index r = 0; r < n; ++r) X(r, c) = rng.normal();

  auto gram_schmidt = [&](Eigen::MatrixXd& M) {
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index c = 0; c < M.cols(); ++c) {
        for (Eigen::Index p = 0; p < c; ++p) M.col(c) -= M.col(p).dot(M.col(c)) * M.col(p);
        const double len = M.col(c).norm();
        if (!(len > 0.0)) throw NumericalError("stationary_states: relaxation subspace collapsed");
        M.col(c) /= len;
      }
    }
  };

  Spectrum out;
  Eigen::VectorXd ritz;
  gram_schmidt(X);
  for (std::size_t it = 1; it <= max_iterations; ++it) {
    X = solver.solve(X);
    gram_schmidt(X);
    const Eigen::MatrixXd HX = H * X;
    const Eigen::MatrixXd small = X.transpose() * HX;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (small + small.transpose()));
    X = X * es.eigenvectors();
    ritz = es.eigenvalues();
    const Eigen::MatrixXd R = H * X - X * ritz.asDiagonal();
    bool converged = true;
    for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(count); ++c) {
      if (R.col(c).norm() > 1e-9 * std::max(1.0, std::abs(ritz[c]))) converged = false;
    }
    if (converged) {
      out.iterations = it;
      break;
    }
  }
  if (out.iterations == 0) throw NumericalError("stationary_states: imaginary-time relaxation did not converge");

  const double w = g.weight(active[0]);
  for (std::size_t s = 0; s < count; ++s) {
    Eigen::VectorXd v = X.col(static_cast<Eigen::Index>(s)) / std::sqrt(w);
    fix_sign(v);
    WaveFunction wf{ComplexField(g), hbar, mass};
    for (Eigen::Index a = 0; a < n; ++a) wf.psi[active[static_cast<std::size_t>(a)]] = v[a];
    out.energies.push_back(ritz[static_cast<Eigen::Index>(s)]);
    out.states.push_back(std::move(wf));
  }
  return out;
}

}  // namespace

Spectrum stationary_states(const Grid& grid, const ScalarField& V, double mass, double hbar, std::size_t count,
                           EigenMethod method, std::size_t max_iterations) {
  require_same_grid(grid, V.grid(), "stationary_states");
  check_physics(hbar, mass);
  if (count < 1 || count > 10) throw InvalidArgument("stationary_states: count must be between 1 and 10");
  if (method == EigenMethod::automatic) {
    method = grid.dims() == 1 && grid.boundary(0) != Boundary::periodic ? EigenMethod::tridiagonal
                                                                         : EigenMethod::imaginary_time;
  }
  if (method == EigenMethod::tridiagonal) return tridiagonal_spectrum(grid, V, mass, hbar, count);
  return relaxation_spectrum(grid, V, mass, hbar, count, max_iterations);
}

void write_spectrum(std::ostream& os, const Spectrum& spectrum) {
  os << "# n E_n\n";
  os.precision(17);
  for (std::size_t s = 0; s < spectrum.energies.size(); ++s) os << s << ' ' << spectrum.energies[s] << '\n';
}

}  // namespace emq
