#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include <Eigen/Sparse>

#include "emq/grid.hpp"
#include "emq/madelung.hpp"

namespace emq {

struct WaveFunction {
  ComplexField psi;
  double hbar = 1.0;
  double mass = 1.0;

  const Grid& grid() const { return psi.grid(); }
};

/// sqrt(p) * exp(i eps F / hbar).
WaveFunction assemble(const ScalarField& p, const ScalarField& F, double eps, double hbar, double mass);

/// Normalized Gaussian packet exp(-|q - c|^2 / (4 width^2) + i momentum . q / hbar);
/// `width` is the standard deviation of |psi|^2 along each axis.
WaveFunction gaussian_packet(const Grid& grid, Point3 center, double width, Point3 momentum, double hbar, double mass);

struct Decomposition {
  ScalarField density;
  /// (hbar / m) times the nearest-branch phase gradient.
  VectorField velocity;
  /// Phase unwrapped along axis-ordered sweeps.
  ScalarField phase;
  /// hbar * phase / eps; defined modulo free_energy_period = 2 pi hbar / eps.
  ScalarField free_energy;
  double free_energy_period = 0.0;
  /// 2-D only: winding number of the plaquette whose lower-left corner is the node.
  std::vector<int> plaquette_winding;
  int total_winding = 0;
  /// true where p >= 1e-8 max p (phase meaningful).
  std::vector<std::uint8_t> mask;
};

Decomposition decompose(const WaveFunction& wf, double eps);

/// Hydrodynamic view of a wavefunction: S = hbar arg(psi), period 2 pi hbar.
MadelungState to_madelung(const WaveFunction& wf);

double norm(const WaveFunction& wf);
std::complex<double> overlap(const WaveFunction& a, const WaveFunction& b);
/// <psi|H|psi> with the finite-difference Hamiltonian used by Crank-Nicolson.
double energy(const WaveFunction& wf, const ScalarField& V);
double position_mean(const WaveFunction& wf, std::size_t k);
double position_variance(const WaveFunction& wf, std::size_t k);
/// <-i hbar d_k>, central differences.
double momentum_mean(const WaveFunction& wf, std::size_t k);

enum class Scheme { automatic, crank_nicolson, split_step };

struct EvolveOptions {
  Scheme scheme = Scheme::automatic;
  std::size_t record_every = 1;
};

struct Evolution {
  std::vector<double> times;
  std::vector<WaveFunction> frames;
};

/// i hbar dpsi/dt = (-hbar^2/2m lap + V) psi. Automatic scheme: split-step
/// Fourier on fully periodic grids, Crank-Nicolson otherwise. Non-periodic
/// axes are hard walls (psi = 0 on the outermost nodes).
Evolution evolve(const WaveFunction& wf, const ScalarField& V, double dt, std::size_t n_steps,
                 const EvolveOptions& options = {}, double t0 = 0.0);

/// Pure-gauge vector potential A = (eps / e) grad Omega0.
struct GaugeData {
  ScalarField omega0;
  double charge = 1.0;
  double eps = 1.0;
  VectorField potential;
};

GaugeData vector_potential(const ScalarField& omega0, double eps, double charge);

/// sqrt(p) * exp(i eps Omega1 / hbar).
WaveFunction gauge_assemble(const ScalarField& p, const ScalarField& omega1, double eps, double hbar, double mass);

/// Evolution with the covariant kinetic operator (d + i e A / hbar)^2, using
/// lattice link phases exp(i eps (Omega0_j - Omega0_i) / hbar).
Evolution evolve_gauged(const WaveFunction& wf, const ScalarField& V, const GaugeData& gauge, double dt,
                        std::size_t n_steps, const EvolveOptions& options = {}, double t0 = 0.0);

/// Finite-difference Hamiltonian on all grid nodes; rows of wall nodes are
/// zero. Optional gauge links.
Eigen::SparseMatrix<std::complex<double>> hamiltonian_matrix(const Grid& grid, const ScalarField& V, double mass,
                                                             double hbar, const GaugeData* gauge = nullptr);

struct Spectrum {
  std::vector<double> energies;
  std::vector<WaveFunction> states;
  std::size_t iterations = 0;
};

enum class EigenMethod { automatic, tridiagonal, imaginary_time };

/// Lowest `count` (<= 10) eigenpairs of the finite-difference Hamiltonian.
/// Automatic: direct tridiagonal solve for 1-D hard-wall grids, imaginary-time
/// subspace relaxation with Gram-Schmidt deflation otherwise.
Spectrum stationary_states(const Grid& grid, const ScalarField& V, double mass, double hbar, std::size_t count,
                           EigenMethod method = EigenMethod::automatic, std::size_t max_iterations = 20000);

/// Rows: n E_n.
void write_spectrum(std::ostream& os, const Spectrum& spectrum);

}  // namespace emq
