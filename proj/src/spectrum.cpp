#include "wavectl/spectrum.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <cmath>
#include <cstdio>
#include <limits>

namespace wavectl {

double boundary_leakage(const ComplexField& psi) {
  const Index n = psi.size();
  const Index edge = std::max<Index>(1, n / 20);
  return std::max(psi.head(edge).abs().maxCoeff(), psi.tail(edge).abs().maxCoeff());
}

ComplexField apply_hamiltonian(const Grid1D& grid, const RealField& potential, const ComplexField& psi, Units units) {
  const RealField kinetic = (units.hbar * units.hbar / (2.0 * units.mass)) * grid.wavenumbers().square();
  ComplexField spectrum = forward_transform(psi);
  spectrum *= kinetic.cast<std::complex<double>>();
  return inverse_transform(spectrum) + potential * psi;
}

namespace {

double rayleigh_quotient(const Grid1D& grid, const RealField& potential, const ComplexField& psi, Units units) {
  return inner_product(grid, psi, apply_hamiltonian(grid, potential, psi, units)).real() /
         inner_product(grid, psi, psi).real();
}

void normalize(const Grid1D& grid, ComplexField& psi) { psi /= l2_norm(grid, psi); }

// Orthonormalizes the columns against each other (two Gram-Schmidt passes)
// and drops those that become numerically dependent.
std::vector<ComplexField> orthonormal_basis(const Grid1D& grid, std::vector<ComplexField> vectors) {
  std::vector<ComplexField> basis;
  for (auto& v : vectors) {
    const double original = l2_norm(grid, v);
    if (!(original > 0)) continue;
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& q : basis) v -= inner_product(grid, q, v) * q;
    }
    const double norm = l2_norm(grid, v);
    if (norm > 1e-10 * original) basis.push_back(v / norm);
  }
  return basis;
}

// Locally optimal block preconditioned CG with a single vector, using the
// inverse of the shifted kinetic operator as preconditioner.
int lobpcg_refine(const Grid1D& grid, const RealField& potential, ComplexField& psi, double& energy, Units units,
                  double tol, int max_iter, double& residual_norm) {
  const RealField kinetic = (units.hbar * units.hbar / (2.0 * units.mass)) * grid.wavenumbers().square();
  ComplexField direction;
  bool have_direction = false;
  normalize(grid, psi);
  for (int iter = 0; iter < max_iter; ++iter) {
    const ComplexField h_psi = apply_hamiltonian(grid, potential, psi, units);
    energy = inner_product(grid, psi, h_psi).real();
    const ComplexField residual = h_psi - energy * psi;
    residual_norm = l2_norm(grid, residual);
    if (residual_norm < tol) return iter;

    const double shift = std::max(1.0, std::abs(energy - potential.minCoeff()));
    ComplexField spectrum = forward_transform(residual);
    spectrum /= (kinetic + shift).cast<std::complex<double>>();
    const ComplexField preconditioned = inverse_transform(spectrum);

    std::vector<ComplexField> candidates{psi, preconditioned};
    if (have_direction) candidates.push_back(direction);
    const auto basis = orthonormal_basis(grid, candidates);
    const auto dim = static_cast<Index>(basis.size());

    Eigen::MatrixXcd projected(dim, dim);
    std::vector<ComplexField> h_basis;
    for (const auto& b : basis) h_basis.push_back(apply_hamiltonian(grid, potential, b, units));
    for (Index i = 0; i < dim; ++i) {
      for (Index j = 0; j < dim; ++j) projected(i, j) = inner_product(grid, basis[i], h_basis[j]);
    }
    projected = (0.5 * (projected + projected.adjoint())).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> small(projected);
    const Eigen::VectorXcd c = small.eigenvectors().col(0);

    ComplexField next = c[0] * basis[0];
    ComplexField step = ComplexField::Zero(psi.size());
    for (Index i = 1; i < dim; ++i) step += c[i] * basis[i];
    next += step;
    direction = step;
    have_direction = l2_norm(grid, step) > 0;
    psi = next;
    normalize(grid, psi);
  }
  return max_iter;
}

}  // namespace

StationaryState ground_state(const Potential& pot, const Grid1D& grid, double dtau, double tol, Units units,
                             const GroundStateOptions& options) {
  if (!(dtau > 0)) fail(ErrorCode::invalid_argument, "dtau must be positive");
  if (!(tol > 0)) fail(ErrorCode::invalid_argument, "tol must be positive");
  const RealField potential = pot.value(grid.nodes());
  if (!potential.allFinite()) fail(ErrorCode::non_finite, "potential is not finite on the grid");
  const double v_min = potential.minCoeff();
  const RealField lifted = potential - v_min;

  ComplexField psi = (-lifted.min(700.0)).exp().cast<std::complex<double>>();
  normalize(grid, psi);

  const ComplexField half_kick = (-0.5 * dtau / units.hbar * lifted).exp().cast<std::complex<double>>();
  const ComplexField kinetic =
      (-(units.hbar * dtau / (2.0 * units.mass)) * grid.wavenumbers().square()).exp().cast<std::complex<double>>();

  double energy = rayleigh_quotient(grid, potential, psi, units);
  int steps = 0;
  bool converged = false;
  while (steps < options.max_steps) {
    ++steps;
    ComplexField spectrum = forward_transform(ComplexField(half_kick * psi));
    spectrum *= kinetic;
    psi = half_kick * inverse_transform(spectrum);
    normalize(grid, psi);
    const double next = rayleigh_quotient(grid, potential, psi, units);
    if (!std::isfinite(next)) fail(ErrorCode::non_finite, "imaginary-time energy became non-finite");
    const double change = std::abs(next - energy);
    energy = next;
    if (change < tol) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    fail(ErrorCode::no_convergence,
         "imaginary-time propagation did not converge in " + std::to_string(options.max_steps) + " steps");
  }

  double residual = l2_norm(grid, ComplexField(apply_hamiltonian(grid, potential, psi, units) - energy * psi));
  if (options.polish) {
    const int used = lobpcg_refine(grid, potential, psi, energy, units, options.polish_tol, options.polish_max_iter,
                                   residual);
    // Rounding in H psi grows with the largest potential or kinetic value on the grid.
    const double k_max = grid.wavenumbers().abs().maxCoeff();
    const double scale = std::max(lifted.maxCoeff(), units.hbar * units.hbar * k_max * k_max / (2.0 * units.mass));
    const double floor = 1e2 * std::numeric_limits<double>::epsilon() * scale;
    if (used >= options.polish_max_iter && residual > std::max(1e3 * options.polish_tol, floor)) {
      char msg[96];
      std::snprintf(msg, sizeof msg, "ground-state refinement stalled at residual %.3e", residual);
      fail(ErrorCode::no_convergence, msg);
    }
  }

  // Global phase: make the peak real and positive, then drop rounding noise.
  Index peak = 0;
  psi.abs().maxCoeff(&peak);
  psi *= std::conj(psi[peak]) / std::abs(psi[peak]);
  const RealField real_part = psi.real();
  const double peak_value = real_part[peak];
  if ((real_part < -1e-6 * peak_value).any()) {
    fail(ErrorCode::node_detected, "converged state changes sign; not a ground state");
  }
  psi = real_part.max(0.0).cast<std::complex<double>>();
  normalize(grid, psi);

  const double leakage = boundary_leakage(psi);
  if (leakage > options.leakage_bound) {
    fail(ErrorCode::boundary_leakage,
         "ground state reaches the grid edge (max |psi| there " + std::to_string(leakage) + ")");
  }

  StationaryState state;
  state.grid = grid;
  state.psi0 = psi;
  state.units = units;
  state.iterations = steps;
  state.residual = residual;
  const RealField rho = psi.abs2();
  state.norm_check = quadrature(grid, rho);
  state.energy = inner_product(grid, psi, apply_hamiltonian(grid, potential, psi, units)).real();
  state.mean_x = quadrature(grid, grid.nodes() * rho);
  state.sigma0 = std::sqrt(quadrature(grid, (grid.nodes() - state.mean_x).square() * rho));
  return state;
}

std::vector<EigenPair> eigensolve_fd(const Potential& pot, const Grid1D& grid, int k, Units units) {
  const Index n = grid.size();
  if (k < 1 || k > n) fail(ErrorCode::invalid_argument, "eigensolve_fd needs 1 <= k <= n");
  const double hop = units.hbar * units.hbar / (2.0 * units.mass * grid.dx() * grid.dx());
  const Eigen::VectorXd diag = (pot.value(grid.nodes()) + 2.0 * hop).matrix();
  const Eigen::VectorXd off = Eigen::VectorXd::Constant(n - 1, -hop);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> values_only;
  values_only.computeFromTridiagonal(diag, off, Eigen::EigenvaluesOnly);
  if (values_only.info() != Eigen::Success) fail(ErrorCode::no_convergence, "tridiagonal eigenvalue solve failed");

  std::vector<EigenPair> pairs;
  for (int which = 0; which < k; ++which) {
    const double lambda = values_only.eigenvalues()[which];
    const double shift = lambda + 1e-10 * (std::abs(lambda) + 1.0);

    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(static_cast<std::size_t>(3 * n));
    for (Index i = 0; i < n; ++i) {
      entries.emplace_back(i, i, diag[i] - shift);
      if (i + 1 < n) {
        entries.emplace_back(i, i + 1, off[i]);
        entries.emplace_back(i + 1, i, off[i]);
      }
    }
    Eigen::SparseMatrix<double> shifted(n, n);
    shifted.setFromTriplets(entries.begin(), entries.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(shifted);
    if (lu.info() != Eigen::Success) fail(ErrorCode::no_convergence, "inverse iteration factorization failed");

    Eigen::VectorXd v = Eigen::VectorXd::Ones(n);
    for (int iter = 0; iter < 4; ++iter) {
      v = lu.solve(v);
      v /= v.norm();
    }
    RealField vec = v.array() / std::sqrt(grid.dx());
    const double big = vec.abs().maxCoeff();
    for (Index i = 0; i < n; ++i) {
      if (std::abs(vec[i]) > 1e-3 * big) {
        if (vec[i] < 0) vec = -vec;
        break;
      }
    }
    pairs.push_back({lambda, vec});
  }
  return pairs;
}

ShapeFunction extract_shape(const StationaryState& state, const ShapeOptions& options) {
  const Grid1D& grid = state.grid;
  const Index n = grid.size();
  const double sigma0 = state.sigma0;
  if (!(sigma0 > 0)) fail(ErrorCode::invalid_argument, "stationary state has non-positive dispersion");

  ShapeFunction shape;
  shape.xi_grid = Grid1D(n, (grid.x_min() - state.mean_x) / sigma0, (grid.x_max() - state.mean_x) / sigma0);
  shape.sigma0 = sigma0;
  shape.E0 = state.energy;
  shape.mean_x = state.mean_x;
  shape.units = state.units;

  const RealField& xi = shape.xi_grid.nodes();
  const RealField amplitude = std::sqrt(sigma0) * state.psi0.real();
  const RealField rho = amplitude.square();
  shape.amplitude = amplitude;
  shape.rho = rho;

  for (Index j = 0; j < n; ++j) {
    if (std::abs(xi[j]) <= 1.0 && rho[j] < 1e-300) {
      fail(ErrorCode::density_underflow, "shape density underflows inside |xi| <= 1");
    }
  }

  Index peak = 0;
  amplitude.maxCoeff(&peak);
  auto trusted_node = [&](Index j) { return std::abs(xi[j]) <= options.window && rho[j] >= options.density_floor; };
  if (!trusted_node(peak)) fail(ErrorCode::density_underflow, "shape peak lies outside the trusted window");
  Index lo = peak, hi = peak;
  while (lo > 0 && trusted_node(lo - 1)) --lo;
  while (hi < n - 1 && trusted_node(hi + 1)) ++hi;
  if (hi - lo + 1 < 16) fail(ErrorCode::density_underflow, "trusted shape window has fewer than 16 nodes");
  shape.trusted = Mask::Constant(n, false);
  shape.trusted.segment(lo, hi - lo + 1).setConstant(true);
  shape.xi_lo = xi[lo];
  shape.xi_hi = xi[hi];

  const RealField slope = spectral_derivative(shape.xi_grid, amplitude, 1);
  const double a_max = amplitude[peak];
  shape.R.resize(n);
  shape.G.resize(n);
  for (Index j = lo; j <= hi; ++j) {
    shape.R[j] = std::log(amplitude[j] / a_max);
    shape.G[j] = 2.0 * slope[j] / amplitude[j];
  }
  const double dxi = shape.xi_grid.dx();
  const double left_slope = (shape.R[lo + 1] - shape.R[lo]) / dxi;
  const double right_slope = (shape.R[hi] - shape.R[hi - 1]) / dxi;
  for (Index j = 0; j < lo; ++j) {
    shape.R[j] = shape.R[lo] + left_slope * (xi[j] - xi[lo]);
    shape.G[j] = shape.G[lo];
  }
  for (Index j = hi + 1; j < n; ++j) {
    shape.R[j] = shape.R[hi] + right_slope * (xi[j] - xi[hi]);
    shape.G[j] = shape.G[hi];
  }

  shape.N_const = 1.0 / quadrature(shape.xi_grid, (amplitude / a_max).square());
  shape.K2 = 4.0 * quadrature(shape.xi_grid, slope.square());
  shape.interpolant = SpectralInterpolant(shape.xi_grid, amplitude);
  return shape;
}

}  // namespace wavectl
