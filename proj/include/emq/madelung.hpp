#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "emq/grid.hpp"

namespace emq {

/// Hydrodynamic state: density p with either a phase action S = eps F
/// (velocity u = grad S / m) or an explicitly given velocity field.
///
/// A state built from a wavefunction carries `action_period` = 2 pi hbar:
/// S is then only defined modulo that period and every difference of S is
/// taken on the nearest branch. Single-valued flows on periodic axes may
/// still carry a constant jump of S across the seam (`seam_jump`).
class MadelungState {
 public:
  static MadelungState from_action(ScalarField density, ScalarField action, double mass, double hbar,
                                   double action_period = 0.0, std::array<double, 3> seam_jump = {});
  static MadelungState from_velocity(ScalarField density, VectorField velocity, double mass, double hbar);

  const Grid& grid() const { return density_.grid(); }
  const ScalarField& density() const { return density_; }
  ScalarField& density() { return density_; }
  bool has_action() const { return action_.has_value(); }
  const ScalarField& action() const;
  ScalarField& action();
  double action_period() const { return action_period_; }
  const std::array<double, 3>& seam_jump() const { return seam_jump_; }
  double mass() const { return mass_; }
  double hbar() const { return hbar_; }
  double time = 0.0;

  /// S(neighbor) - S(flat) for the + (dir = 1) or - (dir = -1) neighbor along
  /// axis k, honoring seam jumps and the branch period.
  double action_difference(std::size_t flat, std::size_t neighbor, std::size_t k, int dir) const;

  /// Node velocities: central differences of S / m, or the stored field.
  VectorField velocity() const;

 private:
  MadelungState() = default;
  ScalarField density_;
  std::optional<ScalarField> action_;
  std::optional<VectorField> velocity_;
  double action_period_ = 0.0;
  std::array<double, 3> seam_jump_{};
  double mass_ = 1.0;
  double hbar_ = 1.0;
};

/// Mask for quantities singular in 1/sqrt(p): true where p >= 1e-8 max p.
std::vector<std::uint8_t> density_mask(const ScalarField& p, double relative = 1e-8);

/// Q = -(hbar^2 / 2m) lap(sqrt p) / sqrt p, zero where p < 1e-8 max p.
ScalarField quantum_potential(const ScalarField& p, double hbar, double mass);

/// 0.4 * min(h / max|u|, m h^2 / (K hbar)), K the number of axes. For the
/// phase form max|u| runs over the faces that carry flux, as in the step's CFL check.
double recommended_dt(const MadelungState& state);

/// One RK4 step of the phase form: dS/dt = -(grad S)^2 / 2m - V - Q and the
/// conservative continuity equation with face velocities dS / (m h).
MadelungState madelung_step(const MadelungState& state, const ScalarField& V, double dt);

/// Loop given as a sequence of flat indices, consecutive entries grid
/// neighbors, last entry equal to the first.
using LatticeLoop = std::vector<std::size_t>;

/// Counter-clockwise rectangle in axes (0, 1) with corners (i0, j0), (i1, j1).
LatticeLoop rectangle_loop(const Grid& grid, std::size_t i0, std::size_t j0, std::size_t i1, std::size_t j1);

/// Discrete line integral of u around a closed lattice path.
double circulation(const MadelungState& state, const LatticeLoop& loop);

/// Pointwise residual of du/dt + (u . grad) u + grad(V + Q) / m at the middle
/// state, from three consecutive states dt apart; masked maximum of |residual|.
double velocity_form_residual(const MadelungState& prev, const MadelungState& mid, const MadelungState& next,
                              const ScalarField& V, double dt);

/// Vortex of the given winding around `center` on a 2-D grid: S = hbar * winding * angle
/// (period 2 pi hbar), density r^2 / (r^2 + core^2) times a Gaussian envelope of width `envelope`.
/// On a periodic grid the angle jumps across the seam, so keep the envelope well inside the box
/// or use walls.
MadelungState vortex_state(const Grid& grid, Point3 center, int winding, double core, double envelope, double mass,
                           double hbar);

/// Rigid rotation u = omega (-y, x) about `center`, uniform-envelope Gaussian density.
MadelungState rigid_rotation_state(const Grid& grid, Point3 center, double omega, double envelope, double mass,
                                   double hbar);

}  // namespace emq
