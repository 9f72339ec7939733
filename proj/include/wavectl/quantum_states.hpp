#pragma once

#include <optional>

#include "wavectl/classical_control.hpp"
#include "wavectl/numerics.hpp"
#include "wavectl/potentials.hpp"
#include "wavectl/spectrum.hpp"

namespace wavectl {

/// Madelung fields of a nodeless state.
struct HydrodynamicFields {
  RealField rho;
  RealField S;  // hbar * phase, unwrapped outward from the density maximum
  RealField u;  // osmotic velocity (hbar / 2m) (ln rho)'
  RealField v;  // current velocity S' / m
  Mask trust_mask;
};

struct DecomposeOptions {
  double density_floor = 1e-12;
};

HydrodynamicFields hydrodynamic_decompose(const Grid1D& grid, const ComplexField& psi, Units units = {},
                                          const DecomposeOptions& options = {});

struct ObservableRecord {
  double t = 0;
  double mean_x = 0;
  double mean_p = 0;
  double delta_x = 0;
  double delta_p = 0;
  double delta_u = 0;
  double delta_v = 0;
  double anticomm = 0;  // <{x - <x>, p - <p>}>
  double norm = 0;
  double energy = 0;
  double ehrenfest_gap = 0;
  double boundary_leakage = 0;
};

/// Moments of `psi`. `potential` enters the energy; `force` (when given)
/// yields the Ehrenfest gap <V'> - V'(<x>).
ObservableRecord observables(const Grid1D& grid, const ComplexField& psi, Units units, double t,
                             const RealField* potential = nullptr, const Potential* force = nullptr);

/// Parameters of the displacement and dynamical-scaling operators.
struct OperatorParams {
  double x_cl = 0;
  double v_cl = 0;
  double phase0 = 0;  // S0(t), already including -E0 t
  double sigma = 1;
  double sigma_dot = 0;
  double sigma0 = 1;
  double f = 0;  // -ln(sigma / sigma0) / 2
};

OperatorParams make_operator_params(double x_cl, double v_cl, double phase0, double sigma, double sigma_dot,
                                    double sigma0);

/// Parameters of the controlled family at time t (envelope optional).
OperatorParams family_params(const ShapeFunction& shape, const ClassicalTrajectory& trajectory,
                             const EnvelopeTrajectory* envelope, double t);

ComplexField build_coherent_state(const ShapeFunction& shape, const ClassicalTrajectory& trajectory, double t,
                                  const Grid1D& grid);

ComplexField build_squeezed_state(const ShapeFunction& shape, const ClassicalTrajectory& trajectory,
                                  const EnvelopeTrajectory& envelope, double t, const Grid1D& grid);

/// psi(x) -> exp(i phase0 / hbar) exp(i m v_cl x / hbar) psi(x - x_cl).
ComplexField displace(const Grid1D& grid, const ComplexField& psi, const OperatorParams& p, Units units = {});

/// psi(x) -> exp(f) exp(i m sigma_dot x^2 / (2 hbar sigma)) psi(exp(2f) x).
ComplexField dynamical_scale(const Grid1D& grid, const ComplexField& psi, const OperatorParams& p, Units units = {});

/// D(x_cl, v_cl) S(f) D(-<x>_0) applied to the seed ground state.
ComplexField build_via_operators(const StationaryState& seed, const ShapeFunction& shape,
                                 const ClassicalTrajectory& trajectory, const EnvelopeTrajectory* envelope, double t,
                                 const Grid1D& grid);

}  // namespace wavectl
