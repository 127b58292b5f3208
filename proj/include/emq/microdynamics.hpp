#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "emq/grid.hpp"

namespace emq {

/// Constant drift/diffusion coefficients of the trainable variables plus the
/// network time step. The emergent mass is epsilon / (2 gamma).
struct DriftDiffusionParams {
  double gamma = 1.0;
  double diffusion = 0.0;
  double epsilon = 1.0;

  double mass() const { return epsilon / (2.0 * gamma); }
  void validate() const;
};

/// Free energy F(t, q) of the hidden sector with an analytic gradient.
class FreeEnergyModel {
 public:
  using ValueFn = std::function<double(double, const Point3&)>;
  using GradientFn = std::function<Point3(double, const Point3&)>;

  FreeEnergyModel(std::string name, ValueFn value, GradientFn grad, bool time_dependent);

  static FreeEnergyModel constant(double c = 0.0);
  /// F = -(k/2)|q - c|^2; a maximum of F, so drift pulls toward c.
  static FreeEnergyModel quadratic_well(double stiffness, Point3 center = {});
  /// F = +(k/2)|q - c|^2.
  static FreeEnergyModel inverted_quadratic(double stiffness, Point3 center = {});
  /// F = -depth * ((q0 / a)^2 - 1)^2, maxima at q0 = +-a.
  static FreeEnergyModel double_well(double depth, double half_separation);
  /// F = k . q - rate * t.
  static FreeEnergyModel plane_phase(Point3 wavevector, double rate);
  /// Frames of F on a grid, linear in time and multilinear in space; the
  /// gradient is the interpolated discrete gradient of each frame.
  static FreeEnergyModel tabulated(std::vector<double> times, std::vector<ScalarField> frames);
  /// Omega0(q) + Omega1(t, q).
  static FreeEnergyModel composite(FreeEnergyModel stationary_part, FreeEnergyModel time_part);

  double value(double t, const Point3& q) const { return value_(t, q); }
  Point3 gradient(double t, const Point3& q) const { return grad_(t, q); }
  const std::string& name() const { return name_; }
  bool time_dependent() const { return time_dependent_; }

  ScalarField sample(const Grid& grid, double t) const;
  /// Same model with F -> -F (flips the drift direction).
  FreeEnergyModel negated() const;

 private:
  std::string name_;
  ValueFn value_;
  GradientFn grad_;
  bool time_dependent_ = false;
};

/// Independent trajectories of q on a bounded domain. Trajectory i draws its
/// noise from stream (seed, i); the counter is derived from the step index,
/// so the state after n steps does not depend on evaluation order.
struct ParticleEnsemble {
  Grid domain;
  std::vector<double> positions;  // trajectory-major, domain.dims() per trajectory
  std::vector<std::uint8_t> alive;
  double time = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t steps = 0;

  static ParticleEnsemble at_point(const Grid& domain, std::size_t count, const Point3& q, std::uint64_t seed);
  /// Uniformly distributed start positions, drawn from stream (seed, i) at counter offset 2^40.
  static ParticleEnsemble uniform(const Grid& domain, std::size_t count, std::uint64_t seed);

  std::size_t size() const { return alive.size(); }
  std::size_t alive_count() const;
  std::span<const double> position(std::size_t i) const {
    return std::span<const double>(positions).subspan(i * domain.dims(), domain.dims());
  }
  /// Coordinate k of every live trajectory.
  std::vector<double> coordinates(std::size_t k) const;
};

/// One Euler-Maruyama step q <- q + gamma grad F dt + sqrt(2 D dt) eta, then
/// the boundary rule (periodic wrap, reflecting fold, absorbing removal).
ParticleEnsemble langevin_step(const ParticleEnsemble& ens, const FreeEnergyModel& F,
                               const DriftDiffusionParams& params, double dt);

void langevin_run(ParticleEnsemble& ens, const FreeEnergyModel& F, const DriftDiffusionParams& params, double dt,
                  std::size_t n_steps);

enum class TimeScheme { explicit_euler, implicit_euler };

struct FokkerPlanckOptions {
  TimeScheme scheme = TimeScheme::implicit_euler;
  std::size_t record_every = 1;
};

struct FokkerPlanckResult {
  std::vector<double> times;
  std::vector<ScalarField> frames;
  std::size_t negative_clips = 0;
  /// max over steps of |mass - initial mass|
  double max_mass_drift = 0.0;
};

/// Finite-volume solver for dp/dt = sum_k d_k (D d_k p - gamma (d_k F) p).
/// Face fluxes use the exponential-fitting (Scharfetter-Gummel) form, whose
/// zero-flux state is exactly p ~ exp(gamma F / D) at the nodes.
FokkerPlanckResult evolve_fokker_planck(const ScalarField& p0, const FreeEnergyModel& F,
                                        const DriftDiffusionParams& params, double dt, std::size_t n_steps,
                                        const FokkerPlanckOptions& options = {}, double t0 = 0.0);

/// Current J_k = D d_k p - gamma (d_k F) p on the face between each node and
/// its + neighbor along axis k (zero where no such face exists).
VectorField face_currents(const ScalarField& p, const ScalarField& F, const DriftDiffusionParams& params);

/// Normalized exp(gamma F / D) on the grid.
ScalarField stationary_density(const Grid& grid, const FreeEnergyModel& F, const DriftDiffusionParams& params,
                               double t = 0.0);

/// Cloud-in-cell binning of live trajectories onto the grid nodes; for
/// bandwidth > h the binned counts are additionally smoothed with a Gaussian
/// kernel of that width. Quadrature-normalized.
ScalarField estimate_density(const ParticleEnsemble& ens, const Grid& grid, double bandwidth);

/// Rows: time, trajectory id, q components.
void write_trajectories(std::ostream& os, const ParticleEnsemble& ens);

}  // namespace emq
