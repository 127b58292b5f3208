#include "emq/madelung.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "emq/errors.hpp"

namespace emq {

namespace {

constexpr double kDensityFloor = 1e-12;
// Below this fraction of max p the phase is not evolved and no flux crosses:
// the quantum potential of a nearly empty tail is dominated by the density
// floor and would otherwise drive the whole solution unstable.
constexpr double kFrozenTail = 1e-10;

double branch_difference(const Grid& g, std::span<const double> S, double period, const std::array<double, 3>& seam,
                         std::size_t flat, std::size_t nb, std::size_t k, int dir) {
  double d = S[nb] - S[flat];
  if (g.boundary(k) == Boundary::periodic) {
    const std::size_t i = g.unflatten(flat)[k];
    if (dir > 0 && i + 1 == g.points(k)) d += seam[k];
    if (dir < 0 && i == 0) d -= seam[k];
  }
  if (period > 0.0) d -= period * std::round(d / period);
  return d;
}

double min_spacing(const Grid& g) {
  double h = g.spacing(0);
  for (std::size_t k = 1; k < g.dims(); ++k) h = std::min(h, g.spacing(k));
  return h;
}

struct Rates {
  std::vector<double> dp;
  std::vector<double> dS;
  double max_face_speed = 0.0;
};

Rates phase_form_rates(const MadelungState& proto, std::span<const double> p, std::span<const double> S,
                       const ScalarField& V) {
  const Grid& g = proto.grid();
  const double m = proto.mass();
  ScalarField root(g);
  for (std::size_t i = 0; i < g.size(); ++i) root[i] = std::sqrt(std::max(p[i], kDensityFloor));
  const ScalarField lap = laplacian(root);
  double pmax = 0.0;
  for (double v : p) pmax = std::max(pmax, v);
  const double active = 1e-8 * pmax;
  const double frozen = kFrozenTail * pmax;

  Rates r{std::vector<double>(g.size(), 0.0), std::vector<double>(g.size(), 0.0), 0.0};
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Index3 idx = g.unflatten(i);
    double kinetic = 0.0;
    double div = 0.0;
    for (std::size_t k = 0; k < g.dims(); ++k) {
      const double h = g.spacing(k);
      double flux[2] = {0.0, 0.0};
      double u2[2] = {0.0, 0.0};
      bool has[2] = {false, false};
      for (int side = 0; side < 2; ++side) {
        const int dir = side == 0 ? 1 : -1;
        const auto nb = g.neighbor(i, k, dir);
        if (!nb) continue;
        // face velocity oriented along +k
        const double u =
            dir * branch_difference(g, S, proto.action_period(), proto.seam_jump(), i, *nb, k, dir) / (m * h);
        const double pbar = 0.5 * (p[i] + p[*nb]);
        const bool open = p[i] >= frozen && p[*nb] >= frozen;
        if (open) flux[side] = pbar * u;
        u2[side] = u * u;
        has[side] = true;
        if (open && pbar >= active) r.max_face_speed = std::max(r.max_face_speed, std::abs(u));
      }
      if (!has[0]) u2[0] = u2[1];
      if (!has[1]) u2[1] = u2[0];
      kinetic += 0.25 * m * (u2[0] + u2[1]);
      div += (flux[0] - flux[1]) / g.axis_weight(k, idx[k]);
    }
    r.dp[i] = -div;
    if (p[i] < frozen) continue;
    const double Q = -proto.hbar() * proto.hbar() / (2.0 * m) * lap[i] / root[i];
    r.dS[i] = -kinetic - V[i] - Q;
  }
  return r;
}

}  // namespace

MadelungState MadelungState::from_action(ScalarField density, ScalarField action, double mass, double hbar,
                                         double action_period, std::array<double, 3> seam_jump) {
  require_same_grid(density.grid(), action.grid(), "MadelungState");
  if (!(mass > 0.0)) throw InvalidArgument("MadelungState: mass must be positive");
  if (!(hbar > 0.0)) throw InvalidArgument("MadelungState: hbar must be positive");
  if (action_period < 0.0) throw InvalidArgument("MadelungState: action period must be non-negative");
  MadelungState s;
  s.density_ = std::move(density);
  s.action_ = std::move(action);
  s.mass_ = mass;
  s.hbar_ = hbar;
  s.action_period_ = action_period;
  s.seam_jump_ = seam_jump;
  return s;
}

MadelungState MadelungState::from_velocity(ScalarField density, VectorField velocity, double mass, double hbar) {
  require_same_grid(density.grid(), velocity.grid(), "MadelungState");
  if (!(mass > 0.0)) throw InvalidArgument("MadelungState: mass must be positive");
  if (!(hbar > 0.0)) throw InvalidArgument("MadelungState: hbar must be positive");
  MadelungState s;
  s.density_ = std::move(density);
  s.velocity_ = std::move(velocity);
  s.mass_ = mass;
  s.hbar_ = hbar;
  return s;
}

const ScalarField& MadelungState::action() const {
  if (!action_) throw InvalidArgument("MadelungState: state has no action field");
  return *action_;
}

ScalarField& MadelungState::action() {
  if (!action_) throw InvalidArgument("MadelungState: state has no action field");
  return *action_;
}

double MadelungState::action_difference(std::size_t flat, std::size_t neighbor, std::size_t k, int dir) const {
  return branch_difference(grid(), action().values(), action_period_, seam_jump_, flat, neighbor, k, dir);
}

VectorField MadelungState::velocity() const {
  if (velocity_) return *velocity_;
  const Grid& g = grid();
  VectorField u(g);
  for (std::size_t k = 0; k < g.dims(); ++k) {
    const double h = g.spacing(k);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const auto up = g.neighbor(i, k, 1);
      const auto down = g.neighbor(i, k, -1);
      double v = 0.0;
      if (up && down) {
        v = (action_difference(i, *up, k, 1) - action_difference(i, *down, k, -1)) / (2.0 * h);
      } else if (g.boundary(k) == Boundary::absorbing) {
        v = up ? action_difference(i, *up, k, 1) / h : -action_difference(i, *down, k, -1) / h;
      }
      u.component(k)[i] = v / mass_;
    }
  }
  return u;
}

std::vector<std::uint8_t> density_mask(const ScalarField& p, double relative) {
  double pmax = 0.0;
  for (double v : p.values()) pmax = std::max(pmax, v);
  std::vector<std::uint8_t> mask(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) mask[i] = pmax > 0.0 && p[i] >= relative * pmax;
  return mask;
}

ScalarField quantum_potential(const ScalarField& p, double hbar, double mass) {
  ScalarField root(p.grid());
  for (std::size_t i = 0; i < p.size(); ++i) root[i] = std::sqrt(std::max(p[i], kDensityFloor));
  const ScalarField lap = laplacian(root);
  const auto mask = density_mask(p);
  ScalarField Q(p.grid());
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (mask[i]) Q[i] = -hbar * hbar / (2.0 * mass) * lap[i] / root[i];
  }
  return Q;
}

double recommended_dt(const MadelungState& state) {
  const Grid& g = state.grid();
  const double h = min_spacing(g);
  double umax = 0.0;
  if (state.has_action()) {
    // same faces as the CFL check inside the step
    umax = phase_form_rates(state, state.density().values(), state.action().values(), ScalarField(g)).max_face_speed;
  } else {
    const auto mask = density_mask(state.density());
    const VectorField u = state.velocity();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (mask[i]) umax = std::max(umax, u.norm_at(i));
    }
  }
  const double dispersive = state.mass() * h * h / (state.hbar() * static_cast<double>(g.dims()));
  const double advective = umax > 0.0 ? h / umax : dispersive;
  return 0.4 * std::min(advective, dispersive);
}

MadelungState madelung_step(const MadelungState& state, const ScalarField& V, double dt) {
  if (!state.has_action()) throw InvalidArgument("madelung_step: the phase form needs an action field");
  require_same_grid(state.grid(), V.grid(), "madelung_step");
  if (!(dt > 0.0)) throw InvalidArgument("madelung_step: dt must be positive");
  const Grid& g = state.grid();
  const std::size_t n = g.size();
  const double h = min_spacing(g);
  if (dt * state.hbar() * static_cast<double>(g.dims()) / (state.mass() * h * h) > 0.55) {
    throw NumericalError("madelung_step: dt exceeds the dispersive stability limit");
  }

  const auto p0 = state.density().values();
  const auto S0 = state.action().values();
  std::vector<double> p(n), S(n);
  std::vector<double> acc_p(n, 0.0), acc_S(n, 0.0);
  const double stage_dt[4] = {0.0, 0.5 * dt, 0.5 * dt, dt};
  const double stage_w[4] = {1.0, 2.0, 2.0, 1.0};
  Rates prev;
  for (int s = 0; s < 4; ++s) {
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = p0[i] + (s == 0 ? 0.0 : stage_dt[s] * prev.dp[i]);
      S[i] = S0[i] + (s == 0 ? 0.0 : stage_dt[s] * prev.dS[i]);
    }
    prev = phase_form_rates(state, p, S, V);
    if (s == 0 && prev.max_face_speed * dt / h > 0.5) {
      throw NumericalError("madelung_step: CFL condition max|u| dt / h <= 0.5 violated");
    }
    for (std::size_t i = 0; i < n; ++i) {
      acc_p[i] += stage_w[s] * prev.dp[i];
      acc_S[i] += stage_w[s] * prev.dS[i];
    }
  }

  ScalarField pn(g), Sn(g);
  double pmax = 0.0, pmin = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    pn[i] = p0[i] + dt / 6.0 * acc_p[i];
    Sn[i] = S0[i] + dt / 6.0 * acc_S[i];
    if (!std::isfinite(pn[i]) || !std::isfinite(Sn[i])) throw NumericalError("madelung_step: non-finite state");
    pmax = std::max(pmax, pn[i]);
    pmin = std::min(pmin, pn[i]);
  }
  if (pmin < -1e-6 * pmax) throw NumericalError("madelung_step: density went negative beyond the floor");
  if (state.action_period() > 0.0) {
    const double P = state.action_period();
    for (double& v : Sn.values()) v -= P * std::round(v / P);
  }
  MadelungState out =
      MadelungState::from_action(std::move(pn), std::move(Sn), state.mass(), state.hbar(), state.action_period(),
                                 state.seam_jump());
  out.time = state.time + dt;
  return out;
}

LatticeLoop rectangle_loop(const Grid& grid, std::size_t i0, std::size_t j0, std::size_t i1, std::size_t j1) {
  if (grid.dims() < 2) throw InvalidArgument("rectangle_loop needs at least two axes");
  if (!(i0 < i1 && j0 < j1 && i1 < grid.points(0) && j1 < grid.points(1))) {
    throw InvalidArgument("rectangle_loop: corners must satisfy i0 < i1, j0 < j1 inside the grid");
  }
  LatticeLoop loop;
  auto at = [&](std::size_t i, std::size_t j) { return grid.flatten({i, j, 0}); };
  for (std::size_t i = i0; i < i1; ++i) loop.push_back(at(i, j0));
  for (std::size_t j = j0; j < j1; ++j) loop.push_back(at(i1, j));
  for (std::size_t i = i1; i > i0; --i) loop.push_back(at(i, j1));
  for (std::size_t j = j1; j > j0; --j) loop.push_back(at(i0, j));
  loop.push_back(at(i0, j0));
  return loop;
}

double circulation(const MadelungState& state, const LatticeLoop& loop) {
  const Grid& g = state.grid();
  if (loop.size() < 3 || loop.front() != loop.back()) throw InvalidArgument("circulation: path is not closed");
  std::optional<VectorField> u;
  if (!state.has_action()) u = state.velocity();
  double total = 0.0;
  for (std::size_t s = 0; s + 1 < loop.size(); ++s) {
    const std::size_t a = loop[s], b = loop[s + 1];
    if (a >= g.size() || b >= g.size()) throw InvalidArgument("circulation: index outside the grid");
    bool found = false;
    for (std::size_t k = 0; k < g.dims() && !found; ++k) {
      for (int dir : {1, -1}) {
        if (g.neighbor(a, k, dir) != b) continue;
        if (u) {
          total += 0.5 * (u->component(k)[a] + u->component(k)[b]) * dir * g.spacing(k);
        } else {
          total += state.action_difference(a, b, k, dir) / state.mass();
        }
        found = true;
        break;
      }
    }
    if (!found) throw InvalidArgument("circulation: consecutive loop nodes are not grid neighbors");
  }
  return total;
}

double velocity_form_residual(const MadelungState& prev, const MadelungState& mid, const MadelungState& next,
                              const ScalarField& V, double dt) {
  const Grid& g = mid.grid();
  require_same_grid(g, prev.grid(), "velocity_form_residual");
  require_same_grid(g, next.grid(), "velocity_form_residual");
  const VectorField u0 = prev.velocity();
  const VectorField u1 = mid.velocity();
  const VectorField u2 = next.velocity();
  const ScalarField Q = quantum_potential(mid.density(), mid.hbar(), mid.mass());
  const ScalarField force = V + Q;
  const auto mask = density_mask(mid.density());

  std::vector<ScalarField> du;  // du[k * K + j] = d_j u_k
  for (std::size_t k = 0; k < g.dims(); ++k)
    for (std::size_t j = 0; j < g.dims(); ++j) du.push_back(partial(u1.component(k), j));
  std::vector<ScalarField> dforce;
  for (std::size_t k = 0; k < g.dims(); ++k) dforce.push_back(partial(force, k));

  double worst = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    bool inside = mask[i];
    for (std::size_t k = 0; k < g.dims() && inside; ++k)
      for (int dir : {1, -1}) {
        const auto nb = g.neighbor(i, k, dir);
        if (!nb || !mask[*nb]) inside = false;
      }
    if (!inside) continue;
    double r2 = 0.0;
    for (std::size_t k = 0; k < g.dims(); ++k) {
      double r = (u2.component(k)[i] - u0.component(k)[i]) / (2.0 * dt) + dforce[k][i] / mid.mass();
      for (std::size_t j = 0; j < g.dims(); ++j) r += u1.component(j)[i] * du[k * g.dims() + j][i];
      r2 += r * r;
    }
    worst = std::max(worst, std::sqrt(r2));
  }
  return worst;
}

MadelungState vortex_state(const Grid& grid, Point3 center, int winding, double core, double envelope, double mass,
                           double hbar) {
  if (grid.dims() < 2) throw InvalidArgument("vortex_state needs at least two axes");
  if (!(core > 0.0) || !(envelope > 0.0)) throw InvalidArgument("vortex_state: core and envelope must be positive");
  ScalarField p = ScalarField::from_function(grid, [&](const Point3& q) {
    const double r2 = (q[0] - center[0]) * (q[0] - center[0]) + (q[1] - center[1]) * (q[1] - center[1]);
    return r2 / (r2 + core * core) * std::exp(-r2 / (2.0 * envelope * envelope));
  });
  normalize_density(p);
  ScalarField S = ScalarField::from_function(grid, [&](const Point3& q) {
    return hbar * winding * std::atan2(q[1] - center[1], q[0] - center[0]);
  });
  return MadelungState::from_action(std::move(p), std::move(S), mass, hbar, 2.0 * std::numbers::pi * hbar);
}

MadelungState rigid_rotation_state(const Grid& grid, Point3 center, double omega, double envelope, double mass,
                                   double hbar) {
  if (grid.dims() < 2) throw InvalidArgument("rigid_rotation_state needs at least two axes");
  if (!(envelope > 0.0)) throw InvalidArgument("rigid_rotation_state: envelope must be positive");
  ScalarField p = ScalarField::from_function(grid, [&](const Point3& q) {
    const double r2 = (q[0] - center[0]) * (q[0] - center[0]) + (q[1] - center[1]) * (q[1] - center[1]);
    return std::exp(-r2 / (2.0 * envelope * envelope));
  });
  normalize_density(p);
  VectorField u(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Point3 q = grid.position(i);
    u.component(0)[i] = -omega * (q[1] - center[1]);
    u.component(1)[i] = omega * (q[0] - center[0]);
  }
  return MadelungState::from_velocity(std::move(p), std::move(u), mass, hbar);
}

}  // namespace emq
