#include "wavectl/quantum_states.hpp"

#include <cmath>
#include <numbers>

namespace wavectl {

namespace {

constexpr std::complex<double> kI(0.0, 1.0);

// A packet produced by an operator must not reach the grid edge unless the
// input already did.
void check_fits(const ComplexField& in, const ComplexField& out, const char* what) {
  const double peak = out.abs().maxCoeff();
  const double leak_out = boundary_leakage(out);
  if (leak_out > 1e-6 * peak && leak_out > 10.0 * boundary_leakage(in)) {
    fail(ErrorCode::packet_off_grid, std::string(what) + " pushes the packet onto the grid edge");
  }
}

void check_packet_extent(const Grid1D& grid, double center, double width) {
  if (center - 6.0 * width < grid.x_min() || center + 6.0 * width > grid.x_max()) {
    fail(ErrorCode::packet_off_grid, "packet at " + std::to_string(center) + " with width " + std::to_string(width) +
                                         " does not fit the grid");
  }
}

ComplexField shape_packet(const ShapeFunction& shape, const OperatorParams& p, const Grid1D& grid, Units units) {
  if (!(p.sigma > 0)) fail(ErrorCode::collapse, "packet width must be positive");
  check_packet_extent(grid, p.x_cl, p.sigma);
  const Index n = grid.size();
  const double scale = 1.0 / std::sqrt(p.sigma);
  const double m = units.mass, hbar = units.hbar;
  ComplexField psi(n);
  for (Index j = 0; j < n; ++j) {
    const double x = grid.nodes()[j];
    const double d = x - p.x_cl;
    const double phase = (m * p.v_cl * x + m * p.sigma_dot * d * d / (2.0 * p.sigma) + p.phase0) / hbar;
    psi[j] = scale * shape.A(d / p.sigma) * std::polar(1.0, phase);
  }
  return psi;
}

}  // namespace

HydrodynamicFields hydrodynamic_decompose(const Grid1D& grid, const ComplexField& psi, Units units,
                                          const DecomposeOptions& options) {
  if (psi.size() != grid.size()) fail(ErrorCode::invalid_size, "state length does not match grid");
  const Index n = grid.size();
  HydrodynamicFields out;
  out.rho = psi.abs2();

  Index peak = 0;
  const double rho_max = out.rho.maxCoeff(&peak);
  Index lo = peak, hi = peak;
  while (lo > 0 && out.rho[lo - 1] > options.density_floor) --lo;
  while (hi < n - 1 && out.rho[hi + 1] > options.density_floor) ++hi;
  for (Index j = 0; j < n; ++j) {
    if ((j < lo || j > hi) && out.rho[j] > 1e-6 * rho_max) {
      fail(ErrorCode::node_detected, "density vanishes between separated lobes; decomposition refused");
    }
  }
  out.trust_mask = Mask::Constant(n, false);
  out.trust_mask.segment(lo, hi - lo + 1).setConstant(true);

  // Phase unwrap outward from the maximum.
  RealField phase(n);
  phase[peak] = std::arg(psi[peak]);
  const auto sweep = [&](Index from, Index to) {
    double jump = std::arg(psi[to] * std::conj(psi[from]));
    if (out.trust_mask[to] && out.trust_mask[from] && std::abs(jump) > 0.5 * std::numbers::pi) {
      fail(ErrorCode::node_detected, "phase jump of " + std::to_string(jump) + " rad inside the trusted window");
    }
    phase[to] = phase[from] + jump;
  };
  for (Index j = peak + 1; j < n; ++j) sweep(j - 1, j);
  for (Index j = peak - 1; j >= 0; --j) sweep(j + 1, j);
  out.S = units.hbar * phase;

  const ComplexField slope = spectral_derivative(grid, psi, 1);
  const ComplexField flux = psi.conjugate() * slope;
  out.u.resize(n);
  out.v.resize(n);
  for (Index j = lo; j <= hi; ++j) {
    out.u[j] = units.hbar / units.mass * flux[j].real() / out.rho[j];
    out.v[j] = units.hbar / units.mass * flux[j].imag() / out.rho[j];
  }
  for (Index j = 0; j < lo; ++j) {
    out.u[j] = out.u[lo];
    out.v[j] = out.v[lo];
  }
  for (Index j = hi + 1; j < n; ++j) {
    out.u[j] = out.u[hi];
    out.v[j] = out.v[hi];
  }
  return out;
}

ObservableRecord observables(const Grid1D& grid, const ComplexField& psi, Units units, double t,
                             const RealField* potential, const Potential* force) {
  if (psi.size() != grid.size()) fail(ErrorCode::invalid_size, "state length does not match grid");
  const double hbar = units.hbar, m = units.mass;
  const RealField& x = grid.nodes();
  const RealField rho = psi.abs2();

  ObservableRecord r;
  r.t = t;
  r.norm = quadrature(grid, rho);
  const double inv_norm = 1.0 / r.norm;
  const auto mean = [&](const auto& field) { return quadrature(grid, field) * inv_norm; };

  r.mean_x = mean(x * rho);
  r.delta_x = std::sqrt(std::max(0.0, mean((x - r.mean_x).square() * rho)));

  const ComplexField spectrum = forward_transform(psi);
  const RealField power = spectrum.abs2();
  const double total = power.sum();
  const RealField& k = grid.wavenumbers();
  const double mean_k = (k * power).sum() / total;
  const double mean_k2 = (k.square() * power).sum() / total;
  r.mean_p = hbar * mean_k;
  r.delta_p = hbar * std::sqrt(std::max(0.0, mean_k2 - mean_k * mean_k));

  const ComplexField flux = psi.conjugate() * spectral_derivative(grid, psi, 1);
  const RealField re = flux.real(), im = flux.imag();
  RealField u2(rho.size()), v2(rho.size());
  for (Index j = 0; j < rho.size(); ++j) {
    const bool live = rho[j] > 1e-300;
    u2[j] = live ? re[j] * re[j] / rho[j] : 0.0;
    v2[j] = live ? im[j] * im[j] / rho[j] : 0.0;
  }
  const double c = hbar / m;
  const double mean_u = c * mean(re), mean_v = c * mean(im);
  r.delta_u = std::sqrt(std::max(0.0, c * c * mean(u2) - mean_u * mean_u));
  r.delta_v = std::sqrt(std::max(0.0, c * c * mean(v2) - mean_v * mean_v));
  r.anticomm = 2.0 * m * (c * mean(x * im) - r.mean_x * mean_v);

  r.energy = hbar * hbar * mean_k2 / (2.0 * m);
  if (potential) r.energy += mean(*potential * rho);
  if (force) r.ehrenfest_gap = mean(force->gradient(x) * rho) - force->gradient(r.mean_x);
  r.boundary_leakage = boundary_leakage(psi);
  return r;
}

OperatorParams make_operator_params(double x_cl, double v_cl, double phase0, double sigma, double sigma_dot,
                                    double sigma0) {
  if (!(sigma > 0) || !(sigma0 > 0)) fail(ErrorCode::collapse, "operator widths must be positive");
  return {x_cl, v_cl, phase0, sigma, sigma_dot, sigma0, -0.5 * std::log(sigma / sigma0)};
}

OperatorParams family_params(const ShapeFunction& shape, const ClassicalTrajectory& trajectory,
                             const EnvelopeTrajectory* envelope, double t) {
  const TrajectorySample c = trajectory.at(t);
  double sigma = shape.sigma0, sigma_dot = 0.0;
  if (envelope) {
    const EnvelopeSample e = envelope->at(t);
    sigma = e.sigma;
    sigma_dot = e.sigma_dot;
  }
  return make_operator_params(c.x, c.v, -shape.E0 * t + c.action, sigma, sigma_dot, shape.sigma0);
}

ComplexField build_coherent_state(const ShapeFunction& shape, const ClassicalTrajectory& trajectory, double t,
                                  const Grid1D& grid) {
  return shape_packet(shape, family_params(shape, trajectory, nullptr, t), grid, shape.units);
}

ComplexField build_squeezed_state(const ShapeFunction& shape, const ClassicalTrajectory& trajectory,
                                  const EnvelopeTrajectory& envelope, double t, const Grid1D& grid) {
  return shape_packet(shape, family_params(shape, trajectory, &envelope, t), grid, shape.units);
}

ComplexField displace(const Grid1D& grid, const ComplexField& psi, const OperatorParams& p, Units units) {
  if (psi.size() != grid.size()) fail(ErrorCode::invalid_size, "state length does not match grid");
  ComplexField out = psi;
  if (p.x_cl != 0.0) {
    ComplexField spectrum = forward_transform(psi);
    const Index n = grid.size();
    for (Index j = 0; j < n; ++j) {
      const double arg = grid.wavenumbers()[j] * p.x_cl;
      spectrum[j] *= j == n / 2 ? std::complex<double>(std::cos(arg), 0.0) : std::polar(1.0, -arg);
    }
    out = inverse_transform(spectrum);
  }
  if (p.v_cl != 0.0 || p.phase0 != 0.0) {
    const RealField phase = (units.mass * p.v_cl * grid.nodes() + p.phase0) / units.hbar;
    out *= (kI * phase.cast<std::complex<double>>()).exp();
  }
  check_fits(psi, out, "displacement");
  return out;
}

ComplexField dynamical_scale(const Grid1D& grid, const ComplexField& psi, const OperatorParams& p, Units units) {
  if (psi.size() != grid.size()) fail(ErrorCode::invalid_size, "state length does not match grid");
  ComplexField out = psi;
  if (p.f != 0.0) {
    const SpectralInterpolant interp(grid, psi);
    const double q = std::exp(2.0 * p.f);
    out = std::exp(p.f) * interp.evaluate(RealField(q * grid.nodes()));
  }
  if (p.sigma_dot != 0.0) {
    const double curvature = units.mass * p.sigma_dot / (2.0 * units.hbar * p.sigma);
    out *= (kI * (curvature * grid.nodes().square()).cast<std::complex<double>>()).exp();
  }
  check_fits(psi, out, "dynamical scaling");
  return out;
}

ComplexField build_via_operators(const StationaryState& seed, const ShapeFunction& shape,
                                 const ClassicalTrajectory& trajectory, const EnvelopeTrajectory* envelope, double t,
                                 const Grid1D& grid) {
  if (!(seed.grid == grid)) fail(ErrorCode::invalid_argument, "seed state lives on a different grid");
  const OperatorParams p = family_params(shape, trajectory, envelope, t);
  check_packet_extent(grid, p.x_cl, p.sigma);
  OperatorParams recenter;
  recenter.x_cl = -seed.mean_x;
  const ComplexField centered = displace(grid, seed.psi0, recenter, seed.units);
  return displace(grid, dynamical_scale(grid, centered, p, seed.units), p, seed.units);
}

}  // namespace wavectl
