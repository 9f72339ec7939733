#include "wavectl/classical_control.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace wavectl {

namespace {

// Locates the sample interval containing t; `exact` is set when t sits on a
// sample time up to rounding.
template <typename Sample>
std::size_t locate(const std::vector<Sample>& samples, double dt, double t, bool& exact) {
  const double position = (t - samples.front().t) / dt;
  const auto nearest = static_cast<long long>(std::llround(position));
  const auto last = static_cast<long long>(samples.size()) - 1;
  if (std::abs(position - static_cast<double>(nearest)) < 1e-9 && nearest >= 0 && nearest <= last) {
    exact = true;
    return static_cast<std::size_t>(nearest);
  }
  exact = false;
  const auto i = std::clamp<long long>(static_cast<long long>(std::floor(position)), 0, last - 1);
  return static_cast<std::size_t>(i);
}

bool span_covers(double t, double begin, double end, double dt) {
  const double eps = 1e-9 * dt;
  return t >= begin - eps && t <= end + eps;
}

}  // namespace

// ---------------------------------------------------------------------------
// Classical trajectory

ClassicalTrajectory::ClassicalTrajectory(Potential pot, Units units, double dt, std::vector<TrajectorySample> samples)
    : pot_(std::move(pot)), units_(units), dt_(dt), samples_(std::move(samples)) {
  if (samples_.size() < 2) fail(ErrorCode::invalid_argument, "trajectory needs at least two samples");
}

bool ClassicalTrajectory::covers(double t) const { return span_covers(t, t_begin(), t_end(), dt_); }

TrajectorySample ClassicalTrajectory::at(double t) const {
  if (!covers(t)) {
    fail(ErrorCode::time_out_of_range, "t = " + std::to_string(t) + " outside trajectory span [" +
                                           std::to_string(t_begin()) + ", " + std::to_string(t_end()) + "]");
  }
  bool exact = false;
  const std::size_t i = locate(samples_, dt_, t, exact);
  if (exact) return samples_[i];

  const auto& l = samples_[i];
  const auto& r = samples_[i + 1];
  const double m = units_.mass;
  const auto lagrangian = [&](const TrajectorySample& s) { return 0.5 * m * s.v * s.v - pot_.value(s.x); };
  const auto lagrangian_rate = [&](const TrajectorySample& s) { return m * s.v * s.a - pot_.gradient(s.x) * s.v; };

  const HermiteValue x = hermite_quintic(l.t, r.t, {l.x, l.v, l.a}, {r.x, r.v, r.a}, t);
  const HermiteValue s = hermite_quintic(l.t, r.t, {l.action, lagrangian(l), lagrangian_rate(l)},
                                         {r.action, lagrangian(r), lagrangian_rate(r)}, t);
  // The spline's second derivative amplifies the O(eps) mismatch between nodal
  // x, v and a by 1/dt^2; the equation of motion has no such loss.
  return {t, x.value, x.first, -pot_.gradient(x.value) / m, s.value};
}

ClassicalTrajectory integrate_trajectory(const Potential& pot, double x0, double v0, double dt, double T, Units units,
                                         EscapeBounds bounds) {
  if (!(dt > 0)) fail(ErrorCode::invalid_argument, "trajectory dt must be positive");
  if (!(T >= dt * (1 - 1e-12))) fail(ErrorCode::invalid_argument, "trajectory span T must be at least dt");
  const auto steps = static_cast<long long>(std::ceil(T / dt - 1e-9));
  const double m = units.mass;

  using State = Eigen::Vector3d;  // (x, v, action)
  const auto rate = [&](double, const State& y) {
    return State(y[1], -pot.gradient(y[0]) / m, 0.5 * m * y[1] * y[1] - pot.value(y[0]));
  };
  const auto check = [&](double x, double t) {
    if (x < bounds.lo || x > bounds.hi) {
      fail(ErrorCode::trajectory_escape, "classical center left [" + std::to_string(bounds.lo) + ", " +
                                             std::to_string(bounds.hi) + "] at t = " + std::to_string(t));
    }
  };

  std::vector<TrajectorySample> samples;
  samples.reserve(static_cast<std::size_t>(steps + 1));
  State y(x0, v0, 0.0);
  check(x0, 0.0);
  samples.push_back({0.0, x0, v0, -pot.gradient(x0) / m, 0.0});
  for (long long k = 1; k <= steps; ++k) {
    const double t_prev = static_cast<double>(k - 1) * dt;
    y = rk4_step(y, rate, t_prev, dt);
    const double t = static_cast<double>(k) * dt;
    check(y[0], t);
    samples.push_back({t, y[0], y[1], -pot.gradient(y[0]) / m, y[2]});
  }
  return ClassicalTrajectory(pot, units, dt, std::move(samples));
}

// ---------------------------------------------------------------------------
// Envelope

EnvelopeTrajectory::EnvelopeTrajectory(double dt, double K2, std::vector<EnvelopeSample> samples)
    : dt_(dt), K2_(K2), samples_(std::move(samples)) {
  if (samples_.size() < 2) fail(ErrorCode::invalid_argument, "envelope needs at least two samples");
}

EnvelopeTrajectory EnvelopeTrajectory::prescribed(const std::vector<double>& t, const std::vector<double>& sigma,
                                                  double dt, double K2) {
  if (!(dt > 0)) fail(ErrorCode::invalid_argument, "envelope dt must be positive");
  for (double s : sigma) {
    if (!(s > 0)) fail(ErrorCode::collapse, "prescribed sigma must be positive");
  }
  auto spline = std::make_shared<const CubicSpline>(t, sigma);
  const auto steps = static_cast<long long>(std::floor((spline->back() - spline->front()) / dt + 1e-9));
  std::vector<EnvelopeSample> samples;
  for (long long k = 0; k <= steps; ++k) {
    const double tk = spline->front() + static_cast<double>(k) * dt;
    samples.push_back({tk, spline->value(tk), spline->derivative(tk), spline->second_derivative(tk)});
  }
  EnvelopeTrajectory env(dt, K2, std::move(samples));
  env.spline_ = std::move(spline);
  return env;
}

EnvelopeTrajectory EnvelopeTrajectory::from_csv(const std::filesystem::path& path, double dt, double K2) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io_error, "cannot open sigma schedule " + path.string());
  std::vector<double> ts, ss;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    for (char& c : line) {
      if (c == ',' || c == ';' || c == '\t') c = ' ';
    }
    std::istringstream fields(line);
    double t = 0, s = 0;
    if (!(fields >> t >> s)) {
      if (ts.empty()) continue;
      fail(ErrorCode::parse_error, path.string() + ":" + std::to_string(line_no) + ": expected two numbers");
    }
    ts.push_back(t);
    ss.push_back(s);
  }
  return prescribed(ts, ss, dt, K2);
}

EnvelopeTrajectory EnvelopeTrajectory::constant(double sigma0, double dt, double t_end, double K2) {
  if (!(sigma0 > 0)) fail(ErrorCode::collapse, "sigma0 must be positive");
  const auto steps = static_cast<long long>(std::ceil(t_end / dt - 1e-9));
  std::vector<EnvelopeSample> samples;
  for (long long k = 0; k <= std::max(1LL, steps); ++k) samples.push_back({static_cast<double>(k) * dt, sigma0, 0, 0});
  return EnvelopeTrajectory(dt, K2, std::move(samples));
}

bool EnvelopeTrajectory::covers(double t) const { return span_covers(t, t_begin(), t_end(), dt_); }

EnvelopeSample EnvelopeTrajectory::at(double t) const {
  if (!covers(t)) {
    fail(ErrorCode::time_out_of_range, "t = " + std::to_string(t) + " outside envelope span [" +
                                           std::to_string(t_begin()) + ", " + std::to_string(t_end()) + "]");
  }
  bool exact = false;
  const std::size_t i = locate(samples_, dt_, t, exact);
  if (exact) return samples_[i];
  if (spline_) return {t, spline_->value(t), spline_->derivative(t), spline_->second_derivative(t)};
  const auto& l = samples_[i];
  const auto& r = samples_[i + 1];
  const HermiteValue s =
      hermite_quintic(l.t, r.t, {l.sigma, l.sigma_dot, l.sigma_ddot}, {r.sigma, r.sigma_dot, r.sigma_ddot}, t);
  return {t, s.value, s.first, acceleration_ ? (*acceleration_)(t, s.value) : s.second};
}

namespace {

struct Expectation {
  double value;
  double edge_ratio;  // |integrand| at the xi-grid edges relative to its peak
};

Expectation force_moment(const Potential& pot, const ShapeFunction& shape, double x_cl, double sigma) {
  const RealField& xi = shape.xi_grid.nodes();
  const RealField integrand = xi * pot.gradient(RealField(x_cl + sigma * xi)) * shape.rho;
  const Index n = integrand.size();
  const Index edge = std::max<Index>(1, n / 20);
  const double peak = integrand.abs().maxCoeff();
  const double at_edge = std::max(integrand.head(edge).abs().maxCoeff(), integrand.tail(edge).abs().maxCoeff());
  return {quadrature(shape.xi_grid, integrand), peak > 0 ? at_edge / peak : 0.0};
}

}  // namespace

double envelope_acceleration(const Potential& pot, const ShapeFunction& shape, double x_cl, double sigma) {
  if (!(sigma > 0)) fail(ErrorCode::collapse, "envelope sigma reached zero");
  const double hbar = shape.units.hbar, m = shape.units.mass;
  const double pressure = hbar * hbar * shape.K2 / (4.0 * m * m * sigma * sigma * sigma);
  return pressure - force_moment(pot, shape, x_cl, sigma).value / m;
}

EnvelopeTrajectory integrate_envelope(const Potential& pot, const ShapeFunction& shape,
                                      const ClassicalTrajectory& trajectory, double sigma_init, double sigma_dot_init,
                                      const EnvelopeOptions& options) {
  if (!(sigma_init > 0)) fail(ErrorCode::invalid_argument, "sigma_init must be positive");
  const double sigma_min = options.collapse_fraction * shape.sigma0;
  const double dt = trajectory.dt();

  using State = Eigen::Vector2d;  // (sigma, sigma_dot)
  const auto rate = [&](double t, const State& y) {
    if (!(y[0] > sigma_min)) {
      fail(ErrorCode::collapse, "envelope collapsed below " + std::to_string(sigma_min) + " at t = " + std::to_string(t));
    }
    return State(y[1], envelope_acceleration(pot, shape, trajectory.at(t).x, y[0]));
  };
  const auto record = [&](const TrajectorySample& c, const State& y) {
    if (!(y[0] > sigma_min)) {
      fail(ErrorCode::collapse,
           "envelope collapsed below " + std::to_string(sigma_min) + " at t = " + std::to_string(c.t));
    }
    const Expectation e = force_moment(pot, shape, c.x, y[0]);
    if (e.edge_ratio > options.decay_tolerance) {
      fail(ErrorCode::expectation_window,
           "envelope expectation integrand not decayed at the shape-grid edge (ratio " +
               std::to_string(e.edge_ratio) + ")");
    }
    return EnvelopeSample{c.t, y[0], y[1], envelope_acceleration(pot, shape, c.x, y[0])};
  };

  const auto& points = trajectory.samples();
  std::vector<EnvelopeSample> samples;
  samples.reserve(points.size());
  State y(sigma_init, sigma_dot_init);
  samples.push_back(record(points.front(), y));
  for (std::size_t k = 1; k < points.size(); ++k) {
    y = rk4_step(y, rate, points[k - 1].t, dt);
    samples.push_back(record(points[k], y));
  }
  EnvelopeTrajectory env(dt, shape.K2, std::move(samples));
  auto motion = std::make_shared<const ClassicalTrajectory>(trajectory);
  auto seed = std::make_shared<const ShapeFunction>(shape);
  env.acceleration_ = std::make_shared<const std::function<double(double, double)>>(
      [pot, seed, motion](double t, double sigma) { return envelope_acceleration(pot, *seed, motion->at(t).x, sigma); });
  return env;
}

// ---------------------------------------------------------------------------
// Gauge and HJM residual

RealField gauge_fix(const Grid1D& grid, const RealField& field, double x_ref, double v_ref) {
  if (field.size() != grid.size()) fail(ErrorCode::invalid_size, "field length does not match grid");
  const Index n = grid.size();
  const double u = (x_ref - grid.x_min()) / grid.dx();
  const Index near = grid.nearest_index(x_ref);
  if (n < 4 || std::abs(u - static_cast<double>(near)) < 1e-12) return field + (v_ref - field[near]);
  // Cubic Lagrange through the four nodes around x_ref, so the offset moves
  // smoothly as x_ref sweeps across nodes.
  const Index first = std::clamp<Index>(static_cast<Index>(std::floor(u)) - 1, 0, n - 4);
  double value = 0.0;
  for (Index j = first; j < first + 4; ++j) {
    double w = 1.0;
    for (Index k = first; k < first + 4; ++k) {
      if (k != j) w *= (u - static_cast<double>(k)) / static_cast<double>(j - k);
    }
    value += w * field[j];
  }
  return field + (v_ref - value);
}

namespace {

struct FamilyPoint {
  double x_cl, v_cl, sigma, sigma_dot, s0;
};

FamilyPoint family_at(const ShapeFunction& shape, const ClassicalTrajectory& trajectory,
                      const EnvelopeTrajectory* envelope, double t) {
  const TrajectorySample c = trajectory.at(t);
  double sigma = shape.sigma0, sigma_dot = 0.0;
  if (envelope) {
    const EnvelopeSample e = envelope->at(t);
    sigma = e.sigma;
    sigma_dot = e.sigma_dot;
  }
  return {c.x, c.v, sigma, sigma_dot, -shape.E0 * t + c.action};
}

double phase_function(const FamilyPoint& p, double m, double x) {
  const double d = x - p.x_cl;
  return m * p.v_cl * x + m * d * d * p.sigma_dot / (2.0 * p.sigma) + p.s0;
}

}  // namespace

ResidualSample hjm_residual_sample(const ShapeFunction& shape, const ClassicalTrajectory& trajectory,
                                   const EnvelopeTrajectory* envelope, const Grid1D& grid, double t, Gauge gauge) {
  const double hbar = shape.units.hbar, m = shape.units.mass;
  const double h = trajectory.dt();
  auto covered = [&](double tt) { return trajectory.covers(tt) && (!envelope || envelope->covers(tt)); };
  if (!covered(t)) fail(ErrorCode::time_out_of_range, "residual time outside the family span");

  // Fourth-order time-derivative stencil on the trajectory step: centered
  // when the span allows it, one-sided at the span edges.
  std::vector<std::pair<double, double>> stencil;  // (time offset, weight * h)
  if (covered(t - 2 * h) && covered(t + 2 * h)) {
    stencil = {{-2 * h, 1.0 / 12}, {-h, -8.0 / 12}, {h, 8.0 / 12}, {2 * h, -1.0 / 12}};
  } else if (covered(t + 4 * h)) {
    stencil = {{0, -25.0 / 12}, {h, 4.0}, {2 * h, -3.0}, {3 * h, 4.0 / 3}, {4 * h, -0.25}};
  } else if (covered(t - 4 * h)) {
    stencil = {{0, 25.0 / 12}, {-h, -4.0}, {-2 * h, 3.0}, {-3 * h, -4.0 / 3}, {-4 * h, 0.25}};
  } else {
    fail(ErrorCode::time_out_of_range, "family span too short for a time derivative");
  }
  std::vector<std::pair<FamilyPoint, double>> stencil_points;
  for (const auto& [offset, weight] : stencil) stencil_points.emplace_back(family_at(shape, trajectory, envelope, t + offset), weight / h);

  const FamilyPoint now = family_at(shape, trajectory, envelope, t);
  const Index n = grid.size();
  const double dx = grid.dx();
  RealField values(n);
  Mask trusted(n);
  for (Index j = 0; j < n; ++j) {
    const double x = grid.nodes()[j];
    const double xi = (x - now.x_cl) / now.sigma;
    trusted[j] = shape.in_window(xi);
    if (!trusted[j]) {
      values[j] = 0.0;
      continue;
    }
    double dS_dt = 0.0;
    for (const auto& [p, w] : stencil_points) dS_dt += w * phase_function(p, m, x);
    const double v = (phase_function(now, m, x + dx) - phase_function(now, m, x - dx)) / (2.0 * dx * m);

    const auto a = shape.interpolant.jet(xi);
    const double A = a[0].real(), A1 = a[1].real(), A2 = a[2].real();
    const double G = 2.0 * A1 / A;
    const double G1 = 2.0 * (A2 / A - (A1 / A) * (A1 / A));
    const double u = hbar / (2.0 * m * now.sigma) * G;
    const double du = hbar / (2.0 * m * now.sigma * now.sigma) * G1;
    values[j] = -(dS_dt + 0.5 * m * v * v - 0.5 * m * u * u - 0.5 * hbar * du);
  }

  Index first = 0, last = n - 1;
  while (first < n && !trusted[first]) ++first;
  while (last >= 0 && !trusted[last]) --last;
  if (last - first + 1 < 3) fail(ErrorCode::density_underflow, "fewer than three trusted nodes for the residual");
  // Quadratic continuation through the three outermost trusted nodes on each side.
  const auto extrapolate = [&](Index i0, double x) {
    const double x0 = grid.nodes()[i0], x1 = grid.nodes()[i0 + 1], x2 = grid.nodes()[i0 + 2];
    const double y0 = values[i0], y1 = values[i0 + 1], y2 = values[i0 + 2];
    return y0 * (x - x1) * (x - x2) / ((x0 - x1) * (x0 - x2)) + y1 * (x - x0) * (x - x2) / ((x1 - x0) * (x1 - x2)) +
           y2 * (x - x0) * (x - x1) / ((x2 - x0) * (x2 - x1));
  };
  for (Index j = 0; j < first; ++j) values[j] = extrapolate(first, grid.nodes()[j]);
  for (Index j = last + 1; j < n; ++j) values[j] = extrapolate(last - 2, grid.nodes()[j]);

  if (gauge == Gauge::zero_at_center) values = gauge_fix(grid, values, now.x_cl, 0.0);
  return {values, trusted};
}

// ---------------------------------------------------------------------------
// Control potentials

ControlPotential::ControlPotential(ControlLaw law, Potential base, std::shared_ptr<const ShapeFunction> shape,
                                   std::shared_ptr<const ClassicalTrajectory> trajectory,
                                   std::shared_ptr<const EnvelopeTrajectory> envelope, Gauge gauge)
    : law_(law),
      base_(std::move(base)),
      shape_(std::move(shape)),
      trajectory_(std::move(trajectory)),
      envelope_(std::move(envelope)),
      gauge_(gauge) {
  if (!shape_ || !trajectory_) fail(ErrorCode::invalid_argument, "control law needs a shape and a trajectory");
  if ((law_ == ControlLaw::squeezed || law_ == ControlLaw::squeezed_unscaled) && !envelope_) {
    fail(ErrorCode::invalid_argument, "squeezed control law needs an envelope");
  }
}

ControlPotential ControlPotential::coherent(Potential base, std::shared_ptr<const ShapeFunction> shape,
                                            std::shared_ptr<const ClassicalTrajectory> trajectory, Gauge gauge) {
  return ControlPotential(ControlLaw::coherent, std::move(base), std::move(shape), std::move(trajectory), nullptr,
                          gauge);
}

ControlPotential ControlPotential::squeezed(Potential base, std::shared_ptr<const ShapeFunction> shape,
                                            std::shared_ptr<const ClassicalTrajectory> trajectory,
                                            std::shared_ptr<const EnvelopeTrajectory> envelope, Gauge gauge,
                                            bool unscaled_form) {
  return ControlPotential(unscaled_form ? ControlLaw::squeezed_unscaled : ControlLaw::squeezed, std::move(base),
                          std::move(shape), std::move(trajectory), std::move(envelope), gauge);
}

ControlPotential ControlPotential::residual(Potential base, std::shared_ptr<const ShapeFunction> shape,
                                            std::shared_ptr<const ClassicalTrajectory> trajectory,
                                            std::shared_ptr<const EnvelopeTrajectory> envelope, Gauge gauge) {
  return ControlPotential(ControlLaw::residual, std::move(base), std::move(shape), std::move(trajectory),
                          std::move(envelope), gauge);
}

double ControlPotential::t_begin() const {
  return envelope_ ? std::max(trajectory_->t_begin(), envelope_->t_begin()) : trajectory_->t_begin();
}

double ControlPotential::t_end() const {
  return envelope_ ? std::min(trajectory_->t_end(), envelope_->t_end()) : trajectory_->t_end();
}

void ControlPotential::check_time(double t) const {
  const double eps = 1e-9 * trajectory_->dt();
  if (t < t_begin() - eps || t > t_end() + eps) {
    fail(ErrorCode::time_out_of_range, "control law sampled at t = " + std::to_string(t) + " outside [" +
                                           std::to_string(t_begin()) + ", " + std::to_string(t_end()) + "]");
  }
}

RealField ControlPotential::sample(const Grid1D& grid, double t) const {
  check_time(t);
  const TrajectorySample c = trajectory_->at(t);
  const double m = trajectory_->units().mass;
  const double center = shape_->mean_x;
  const RealField& x = grid.nodes();
  RealField field;
  switch (law_) {
    case ControlLaw::coherent:
      field = base_.value(RealField(x - c.x + center)) - m * c.a * x;
      break;
    case ControlLaw::squeezed: {
      const EnvelopeSample e = envelope_->at(t);
      const double s = shape_->sigma0 / e.sigma;
      field = s * s * base_.value(RealField(s * (x - c.x) + center)) - m * c.a * x -
              (m * e.sigma_ddot / (2.0 * e.sigma)) * (x - c.x).square();
      break;
    }
    case ControlLaw::squeezed_unscaled: {
      const EnvelopeSample e = envelope_->at(t);
      const double curvature = e.sigma_ddot / e.sigma;
      field = base_.value(RealField(x - c.x)) + m * (c.a - curvature * c.x) * x + (0.5 * m * curvature) * x.square();
      break;
    }
    case ControlLaw::residual:
      return hjm_residual_sample(*shape_, *trajectory_, envelope_.get(), grid, t, gauge_).values;
  }
  if (gauge_ == Gauge::zero_at_center) field = gauge_fix(grid, field, c.x, 0.0);
  return field;
}

double ControlPotential::gradient(double x, double t) const {
  check_time(t);
  const TrajectorySample c = trajectory_->at(t);
  const double m = trajectory_->units().mass;
  const double center = shape_->mean_x;
  switch (law_) {
    case ControlLaw::coherent:
      return base_.gradient(x - c.x + center) - m * c.a;
    case ControlLaw::squeezed: {
      const EnvelopeSample e = envelope_->at(t);
      const double s = shape_->sigma0 / e.sigma;
      return s * s * s * base_.gradient(s * (x - c.x) + center) - m * c.a - (m * e.sigma_ddot / e.sigma) * (x - c.x);
    }
    case ControlLaw::squeezed_unscaled: {
      const EnvelopeSample e = envelope_->at(t);
      const double curvature = e.sigma_ddot / e.sigma;
      return base_.gradient(x - c.x) + m * (c.a - curvature * c.x) + m * curvature * x;
    }
    case ControlLaw::residual:
      break;
  }
  fail(ErrorCode::invalid_argument, "residual control law has no closed-form gradient");
}

RealField coherent_control_sample(const ControlPotential& cp, const Grid1D& grid, double t) {
  if (cp.law() != ControlLaw::coherent) fail(ErrorCode::invalid_argument, "control law is not coherent");
  return cp.sample(grid, t);
}

RealField squeezed_control_sample(const ControlPotential& cp, const Grid1D& grid, double t) {
  if (cp.law() != ControlLaw::squeezed && cp.law() != ControlLaw::squeezed_unscaled) {
    fail(ErrorCode::invalid_argument, "control law is not squeezed");
  }
  return cp.sample(grid, t);
}

CenterBalance center_consistency_check(const ShapeFunction& shape, const Potential& pot,
                                       const ClassicalTrajectory& trajectory, double t) {
  const TrajectorySample c = trajectory.at(t);
  const double hbar = shape.units.hbar, m = shape.units.mass;
  const double sigma0 = shape.sigma0;
  const auto control_gradient = [&](double x) { return pot.gradient(x - c.x + shape.mean_x) - m * c.a; };

  const RealField& xi = shape.xi_grid.nodes();
  RealField weighted(xi.size());
  for (Index j = 0; j < xi.size(); ++j) weighted[j] = control_gradient(c.x + sigma0 * xi[j]) * shape.rho[j];
  const double force_side = control_gradient(c.x) - quadrature(shape.xi_grid, weighted);

  const auto a = shape.interpolant.jet(0.0);
  const double A = a[0].real(), r1 = a[1].real() / A, r2 = a[2].real() / A, r3 = a[3].real() / A;
  const double G = 2.0 * r1;
  const double G1 = 2.0 * (r2 - r1 * r1);
  const double G2 = 2.0 * (r3 - 3.0 * r2 * r1 + 2.0 * r1 * r1 * r1);
  const double osmotic_side = hbar * hbar / (4.0 * m * sigma0 * sigma0 * sigma0) * (G * G1 + G2);
  return {force_side, osmotic_side, force_side - osmotic_side};
}

}  // namespace wavectl
