#pragma once

#include <filesystem>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include "wavectl/numerics.hpp"
#include "wavectl/potentials.hpp"
#include "wavectl/spectrum.hpp"

namespace wavectl {

struct TrajectorySample {
  double t;
  double x;
  double v;
  double a;
  double action;  // integral of the classical Lagrangian from t = 0
};

/// Interval the classical center must stay inside; the default is unbounded.
struct EscapeBounds {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
};

/// Uniformly sampled solution of m x'' = -V'(x). Values between samples use
/// quintic Hermite interpolation.
class ClassicalTrajectory {
 public:
  ClassicalTrajectory() = default;
  ClassicalTrajectory(Potential pot, Units units, double dt, std::vector<TrajectorySample> samples);

  double dt() const { return dt_; }
  double t_begin() const { return samples_.front().t; }
  double t_end() const { return samples_.back().t; }
  bool covers(double t) const;
  const std::vector<TrajectorySample>& samples() const { return samples_; }
  const Potential& potential() const { return pot_; }
  const Units& units() const { return units_; }

  /// State at arbitrary t inside the span; throws time-out-of-range.
  TrajectorySample at(double t) const;

 private:
  Potential pot_ = Potential::harmonic(1.0);
  Units units_;
  double dt_ = 0.0;
  std::vector<TrajectorySample> samples_;
};

ClassicalTrajectory integrate_trajectory(const Potential& pot, double x0, double v0, double dt, double T,
                                         Units units = {}, EscapeBounds bounds = {});

struct EnvelopeSample {
  double t;
  double sigma;
  double sigma_dot;
  double sigma_ddot;
};

struct EnvelopeOptions;

/// Packet dispersion sigma(t) with derivatives.
class EnvelopeTrajectory {
 public:
  EnvelopeTrajectory() = default;
  EnvelopeTrajectory(double dt, double K2, std::vector<EnvelopeSample> samples);

  /// C^2 schedule through (t, sigma) points, fitted with a natural spline.
  static EnvelopeTrajectory prescribed(const std::vector<double>& t, const std::vector<double>& sigma, double dt,
                                       double K2);
  /// Two-column CSV (t, sigma) with optional header line.
  static EnvelopeTrajectory from_csv(const std::filesystem::path& path, double dt, double K2);
  /// sigma(t) = sigma0 over the span of `trajectory`.
  static EnvelopeTrajectory constant(double sigma0, double dt, double t_end, double K2);

  double dt() const { return dt_; }
  double K2() const { return K2_; }
  double t_begin() const { return samples_.front().t; }
  double t_end() const { return samples_.back().t; }
  bool covers(double t) const;
  const std::vector<EnvelopeSample>& samples() const { return samples_; }

  EnvelopeSample at(double t) const;

 private:
  double dt_ = 0.0;
  double K2_ = 0.0;
  std::vector<EnvelopeSample> samples_;
  std::shared_ptr<const CubicSpline> spline_;  // set for prescribed schedules
  // sigma'' from the envelope equation at off-sample times; set for integrated envelopes
  std::shared_ptr<const std::function<double(double, double)>> acceleration_;

  friend EnvelopeTrajectory integrate_envelope(const Potential&, const ShapeFunction&, const ClassicalTrajectory&,
                                               double, double, const EnvelopeOptions&);
};

/// Right-hand side of the envelope equation,
///   sigma'' = hbar^2 K^2 / (4 m^2 sigma^3) - <xi V'(x_cl + sigma xi)>_rho / m,
/// with the expectation taken by quadrature over the shape density.
double envelope_acceleration(const Potential& pot, const ShapeFunction& shape, double x_cl, double sigma);

struct EnvelopeOptions {
  double collapse_fraction = 1e-3;  // collapse when sigma < fraction * sigma0
  double decay_tolerance = 1e-10;   // expectation integrand at the xi-grid edge, relative to its peak
};

EnvelopeTrajectory integrate_envelope(const Potential& pot, const ShapeFunction& shape,
                                      const ClassicalTrajectory& trajectory, double sigma_init, double sigma_dot_init,
                                      const EnvelopeOptions& options = {});

enum class ControlLaw { coherent, squeezed, squeezed_unscaled, residual };
enum class Gauge { raw, zero_at_center };

/// Shift `field` so that its value at x_ref equals v_ref. Off-node values
/// come from cubic interpolation of the four surrounding nodes.
RealField gauge_fix(const Grid1D& grid, const RealField& field, double x_ref, double v_ref = 0.0);

struct ResidualSample {
  RealField values;
  Mask trusted;  // false where values are quadratic extrapolations
};

/// Potential read off from the phase equation for the packet family
/// (shape, trajectory, envelope) at time t:
///   V = -[dS/dt + m v^2 / 2 - m u^2 / 2 - hbar u' / 2].
/// Without an envelope the dispersion is held at sigma0.
ResidualSample hjm_residual_sample(const ShapeFunction& shape, const ClassicalTrajectory& trajectory,
                                   const EnvelopeTrajectory* envelope, const Grid1D& grid, double t,
                                   Gauge gauge = Gauge::zero_at_center);

/// Time-dependent potential that steers the seed shape along the classical
/// trajectory (and the envelope, for squeezed laws).
class ControlPotential {
 public:
  static ControlPotential coherent(Potential base, std::shared_ptr<const ShapeFunction> shape,
                                   std::shared_ptr<const ClassicalTrajectory> trajectory, Gauge gauge);
  static ControlPotential squeezed(Potential base, std::shared_ptr<const ShapeFunction> shape,
                                   std::shared_ptr<const ClassicalTrajectory> trajectory,
                                   std::shared_ptr<const EnvelopeTrajectory> envelope, Gauge gauge,
                                   bool unscaled_form = false);
  static ControlPotential residual(Potential base, std::shared_ptr<const ShapeFunction> shape,
                                   std::shared_ptr<const ClassicalTrajectory> trajectory,
                                   std::shared_ptr<const EnvelopeTrajectory> envelope, Gauge gauge);

  RealField sample(const Grid1D& grid, double t) const;
  /// Gradient of the law's x-dependence at a single point (closed-form laws).
  double gradient(double x, double t) const;

  ControlLaw law() const { return law_; }
  Gauge gauge() const { return gauge_; }
  const Potential& base() const { return base_; }
  const ShapeFunction& shape() const { return *shape_; }
  const ClassicalTrajectory& trajectory() const { return *trajectory_; }
  const EnvelopeTrajectory* envelope() const { return envelope_.get(); }
  double t_begin() const;
  double t_end() const;

 private:
  ControlPotential(ControlLaw law, Potential base, std::shared_ptr<const ShapeFunction> shape,
                   std::shared_ptr<const ClassicalTrajectory> trajectory,
                   std::shared_ptr<const EnvelopeTrajectory> envelope, Gauge gauge);

  void check_time(double t) const;

  ControlLaw law_;
  Potential base_;
  std::shared_ptr<const ShapeFunction> shape_;
  std::shared_ptr<const ClassicalTrajectory> trajectory_;
  std::shared_ptr<const EnvelopeTrajectory> envelope_;
  Gauge gauge_;
};

RealField coherent_control_sample(const ControlPotential& cp, const Grid1D& grid, double t);
RealField squeezed_control_sample(const ControlPotential& cp, const Grid1D& grid, double t);

/// Both sides of the force balance at the packet center for the coherent
/// family: [dV/dx(x_cl) - <dV/dx>] evaluated with the controlling potential,
/// against [m (u^2)'/2 + hbar u''/2] at xi = 0.
struct CenterBalance {
  double force_side;
  double osmotic_side;
  double residual;
};

CenterBalance center_consistency_check(const ShapeFunction& shape, const Potential& pot,
                                       const ClassicalTrajectory& trajectory, double t);

}  // namespace wavectl
