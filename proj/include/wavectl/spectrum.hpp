#pragma once

#include <vector>

#include "wavectl/numerics.hpp"
#include "wavectl/potentials.hpp"

namespace wavectl {

/// Normalized, real-positive ground state of a static potential on a grid.
struct StationaryState {
  Grid1D grid;
  ComplexField psi0;
  double energy = 0.0;
  double sigma0 = 0.0;
  double mean_x = 0.0;
  double norm_check = 0.0;
  double residual = 0.0;  // ||H psi - E psi||
  int iterations = 0;
  Units units;
};

struct GroundStateOptions {
  int max_steps = 400000;
  double leakage_bound = 1e-8;
  // Single-vector LOBPCG refinement on the spectral Hamiltonian after the
  // imaginary-time stage has converged.
  bool polish = true;
  double polish_tol = 1e-11;
  int polish_max_iter = 500;
};

/// Imaginary-time Strang propagation until successive energies differ by
/// less than `tol`, followed by an optional LOBPCG polish.
StationaryState ground_state(const Potential& pot, const Grid1D& grid, double dtau, double tol, Units units = {},
                             const GroundStateOptions& options = {});

/// Spectral Hamiltonian applied to `psi`.
ComplexField apply_hamiltonian(const Grid1D& grid, const RealField& potential, const ComplexField& psi, Units units);

struct EigenPair {
  double energy;
  RealField vector;  // unit L2 norm on the grid, positive first lobe
};

/// Lowest `k` eigenpairs of the three-point finite-difference Hamiltonian
/// with Dirichlet ends, energies ascending.
std::vector<EigenPair> eigensolve_fd(const Potential& pot, const Grid1D& grid, int k, Units units = {});

/// Adimensional profile of the seed state in xi = (x - <x>) / sigma0.
struct ShapeFunction {
  Grid1D xi_grid;
  RealField amplitude;  // A(xi) = sqrt(sigma0) psi0(sigma0 xi + <x>), so rho = A^2
  RealField R;          // ln A - ln max A, linearly extrapolated outside the window
  RealField G;          // 2 R', held constant outside the window
  RealField rho;        // N exp(2R) inside the window, A^2 outside
  Mask trusted;
  double K2 = 0.0;
  double sigma0 = 0.0;
  double E0 = 0.0;
  double N_const = 0.0;
  double mean_x = 0.0;  // <x> of the seed state
  double xi_lo = 0.0;   // trusted window [xi_lo, xi_hi]
  double xi_hi = 0.0;
  Units units;
  SpectralInterpolant interpolant;  // band-limited A(xi) and derivatives

  /// d-th derivative of A at arbitrary xi.
  double A(double xi, int d = 0) const { return interpolant.value(xi, d).real(); }
  bool in_window(double xi) const { return xi >= xi_lo && xi <= xi_hi; }
};

struct ShapeOptions {
  double window = 6.0;
  double density_floor = 1e-14;
};

ShapeFunction extract_shape(const StationaryState& state, const ShapeOptions& options = {});

/// Max |psi| over the outer 5% of nodes on each side.
double boundary_leakage(const ComplexField& psi);

}  // namespace wavectl
