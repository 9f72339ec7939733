#pragma once

// Shared numerical substrate: periodic uniform grid, FFT-based spectral
// calculus, quadrature, fixed-step RK4, band-limited interpolation and a
// couple of small interpolation helpers.

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "wavectl/error.hpp"

namespace wavectl {

using Eigen::Index;

template <typename Scalar>
using RealArray = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using ComplexArray = Eigen::Array<std::complex<Scalar>, Eigen::Dynamic, 1>;

using RealField = RealArray<double>;
using ComplexField = ComplexArray<double>;
using Mask = Eigen::Array<bool, Eigen::Dynamic, 1>;

/// Physical constants of the model; natural units by default.
struct Units {
  double hbar = 1.0;
  double mass = 1.0;
};

/// Uniform periodic grid on [x_min, x_max) with `n` nodes.
///
/// Wavenumbers follow the standard DFT ordering: 0, dk, ..., (n/2-1)dk,
/// -n/2 dk, ..., -dk.
template <typename Scalar>
class BasicGrid {
 public:
  BasicGrid() : BasicGrid(64, Scalar(0), Scalar(1)) {}
  BasicGrid(Index n_points, Scalar x_min, Scalar x_max)
      : n_(n_points), x_min_(x_min), x_max_(x_max) {
    if (n_points < 64 || (n_points & (n_points - 1)) != 0) {
      fail(ErrorCode::invalid_size, "grid size must be a power of two >= 64, got " + std::to_string(n_points));
    }
    if (!(x_max > x_min) || !std::isfinite(x_min) || !std::isfinite(x_max)) {
      fail(ErrorCode::degenerate_extent, "grid requires finite x_max > x_min");
    }
    dx_ = (x_max - x_min) / static_cast<Scalar>(n_points);
    x_ = RealArray<Scalar>::LinSpaced(n_, Scalar(0), static_cast<Scalar>(n_ - 1)) * dx_ + x_min_;
    k_.resize(n_);
    const Scalar dk = dk_value();
    for (Index j = 0; j < n_; ++j) {
      const Index signed_j = j < n_ / 2 ? j : j - n_;
      k_[j] = dk * static_cast<Scalar>(signed_j);
    }
  }

  Index size() const { return n_; }
  Scalar x_min() const { return x_min_; }
  Scalar x_max() const { return x_max_; }
  Scalar length() const { return x_max_ - x_min_; }
  Scalar dx() const { return dx_; }
  Scalar dk() const { return dk_value(); }
  const RealArray<Scalar>& nodes() const { return x_; }
  const RealArray<Scalar>& wavenumbers() const { return k_; }

  /// Index of the node closest to `x`, clamped to the grid.
  Index nearest_index(Scalar x) const {
    const auto j = static_cast<Index>(std::llround((x - x_min_) / dx_));
    return std::clamp<Index>(j, 0, n_ - 1);
  }

  bool operator==(const BasicGrid& other) const {
    return n_ == other.n_ && x_min_ == other.x_min_ && x_max_ == other.x_max_;
  }

 private:
  Scalar dk_value() const { return Scalar(2) * std::numbers::pi_v<Scalar> / (x_max_ - x_min_); }

  Index n_;
  Scalar x_min_;
  Scalar x_max_;
  Scalar dx_{};
  RealArray<Scalar> x_;
  RealArray<Scalar> k_;
};

using Grid1D = BasicGrid<double>;

inline Grid1D make_grid(Index n_points, double x_min, double x_max) { return Grid1D(n_points, x_min, x_max); }

// ---------------------------------------------------------------------------
// Transforms

template <typename Scalar>
Eigen::FFT<Scalar>& fft_engine() {
  thread_local Eigen::FFT<Scalar> engine;
  return engine;
}

template <typename Scalar>
ComplexArray<Scalar> forward_transform(const ComplexArray<Scalar>& f) {
  ComplexArray<Scalar> out(f.size());
  fft_engine<Scalar>().fwd(out.data(), f.data(), f.size());
  return out;
}

/// Inverse transform including the 1/n normalization.
template <typename Scalar>
ComplexArray<Scalar> inverse_transform(const ComplexArray<Scalar>& f) {
  ComplexArray<Scalar> out(f.size());
  fft_engine<Scalar>().inv(out.data(), f.data(), f.size());
  return out;
}

/// Fourier multiplier (i k)^order. The Nyquist mode is dropped for odd
/// orders so that real fields stay real.
template <typename Scalar>
ComplexArray<Scalar> derivative_multiplier(const BasicGrid<Scalar>& grid, int order) {
  const Index n = grid.size();
  ComplexArray<Scalar> mult(n);
  const std::complex<Scalar> i_unit(0, 1);
  for (Index j = 0; j < n; ++j) mult[j] = std::pow(i_unit * grid.wavenumbers()[j], order);
  if (order % 2 == 1) mult[n / 2] = 0;
  return mult;
}

template <typename Scalar>
ComplexArray<Scalar> spectral_derivative(const BasicGrid<Scalar>& grid, const ComplexArray<Scalar>& field,
                                         int order) {
  if (order < 0) fail(ErrorCode::invalid_argument, "derivative order must be non-negative");
  if (field.size() != grid.size()) fail(ErrorCode::invalid_size, "field length does not match grid");
  if (order == 0) return field;
  ComplexArray<Scalar> spectrum = forward_transform(field);
  spectrum *= derivative_multiplier(grid, order);
  return inverse_transform(spectrum);
}

template <typename Scalar>
RealArray<Scalar> spectral_derivative(const BasicGrid<Scalar>& grid, const RealArray<Scalar>& field, int order) {
  const ComplexArray<Scalar> as_complex = field.template cast<std::complex<Scalar>>();
  return spectral_derivative(grid, as_complex, order).real();
}

/// Riemann sum times dx; spectrally accurate for periodic or decayed integrands.
template <typename Scalar, typename Derived>
Scalar quadrature(const BasicGrid<Scalar>& grid, const Eigen::ArrayBase<Derived>& field) {
  return field.sum() * grid.dx();
}

template <typename Scalar>
Scalar l2_norm(const BasicGrid<Scalar>& grid, const ComplexArray<Scalar>& psi) {
  return std::sqrt(quadrature(grid, psi.abs2()));
}

template <typename Scalar>
std::complex<Scalar> inner_product(const BasicGrid<Scalar>& grid, const ComplexArray<Scalar>& a,
                                   const ComplexArray<Scalar>& b) {
  return (a.conjugate() * b).sum() * grid.dx();
}

template <typename Scalar>
Scalar l2_distance(const BasicGrid<Scalar>& grid, const ComplexArray<Scalar>& a, const ComplexArray<Scalar>& b) {
  return std::sqrt(quadrature(grid, (a - b).abs2()));
}

// ---------------------------------------------------------------------------
// Time stepping

/// One classical fourth-order Runge-Kutta step of dy/dt = rate(t, y).
template <typename Scalar, int N, typename Rate>
Eigen::Matrix<Scalar, N, 1> rk4_step(const Eigen::Matrix<Scalar, N, 1>& y, Rate&& rate, Scalar t, Scalar dt) {
  using Vec = Eigen::Matrix<Scalar, N, 1>;
  if (!(dt > 0)) fail(ErrorCode::invalid_argument, "rk4 step requires dt > 0");
  auto checked = [](const Vec& k) {
    if (!k.allFinite()) fail(ErrorCode::non_finite, "rate function returned a non-finite derivative");
    return k;
  };
  const Scalar half = dt / Scalar(2);
  const Vec k1 = checked(rate(t, y));
  const Vec k2 = checked(rate(t + half, Vec(y + half * k1)));
  const Vec k3 = checked(rate(t + half, Vec(y + half * k2)));
  const Vec k4 = checked(rate(t + dt, Vec(y + dt * k3)));
  return y + (dt / Scalar(6)) * (k1 + Scalar(2) * k2 + Scalar(2) * k3 + k4);
}

// ---------------------------------------------------------------------------
// Interpolation

/// Value, slope and curvature of a quintic Hermite interpolant on [t0, t1]
/// that matches (y, y', y'') at both ends.
struct HermiteValue {
  double value;
  double first;
  double second;
};

inline HermiteValue hermite_quintic(double t0, double t1, const std::array<double, 3>& left,
                                    const std::array<double, 3>& right, double t) {
  const double h = t1 - t0;
  const double s = (t - t0) / h;
  const double s2 = s * s, s3 = s2 * s, s4 = s3 * s, s5 = s4 * s;

  // Basis on the unit interval and its first two derivatives in s; the
  // left-value function is 1 - h3 and drops out below.
  const double h1 = s - 6 * s3 + 8 * s4 - 3 * s5;
  const double h2 = 0.5 * s2 - 1.5 * s3 + 1.5 * s4 - 0.5 * s5;
  const double h3 = 10 * s3 - 15 * s4 + 6 * s5;
  const double h4 = -4 * s3 + 7 * s4 - 3 * s5;
  const double h5 = 0.5 * s3 - s4 + 0.5 * s5;

  const double d1 = 1 - 18 * s2 + 32 * s3 - 15 * s4;
  const double d2 = s - 4.5 * s2 + 6 * s3 - 2.5 * s4;
  const double d3 = 30 * s2 - 60 * s3 + 30 * s4;
  const double d4 = -12 * s2 + 28 * s3 - 15 * s4;
  const double d5 = 1.5 * s2 - 4 * s3 + 2.5 * s4;

  const double c1 = -36 * s + 96 * s2 - 60 * s3;
  const double c2 = 1 - 9 * s + 18 * s2 - 10 * s3;
  const double c3 = 60 * s - 180 * s2 + 120 * s3;
  const double c4 = -24 * s + 84 * s2 - 60 * s3;
  const double c5 = 3 * s - 12 * s2 + 10 * s3;

  // End values enter through their difference, which keeps rounding in the
  // derivatives at eps / h rather than eps / h^2.
  const double jump = right[0] - left[0];
  const double a1 = left[1] * h, a2 = left[2] * h * h;
  const double b1 = right[1] * h, b2 = right[2] * h * h;

  return {left[0] + jump * h3 + a1 * h1 + a2 * h2 + b1 * h4 + b2 * h5,
          (jump * d3 + a1 * d1 + a2 * d2 + b1 * d4 + b2 * d5) / h,
          (jump * c3 + a1 * c1 + a2 * c2 + b1 * c4 + b2 * c5) / (h * h)};
}

/// Natural cubic spline through (x_i, y_i), x strictly increasing.
/// Outside the table it continues linearly with the end slopes.
class CubicSpline {
 public:
  CubicSpline() = default;
  CubicSpline(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 3 || y_.size() != n) fail(ErrorCode::invalid_argument, "spline needs at least 3 matching points");
    for (std::size_t i = 1; i < n; ++i) {
      if (!(x_[i] > x_[i - 1])) fail(ErrorCode::invalid_argument, "spline abscissae must increase strictly");
    }
    // Tridiagonal system for second derivatives with natural end conditions.
    m_.assign(n, 0.0);
    std::vector<double> diag(n, 1.0), upper(n, 0.0), rhs(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double h0 = x_[i] - x_[i - 1], h1 = x_[i + 1] - x_[i];
      const double lower = h0 / 6.0;
      diag[i] = (h0 + h1) / 3.0;
      upper[i] = h1 / 6.0;
      rhs[i] = (y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0;
      const double w = lower / diag[i - 1];
      diag[i] -= w * upper[i - 1];
      rhs[i] -= w * rhs[i - 1];
    }
    for (std::size_t i = n - 2; i >= 1; --i) m_[i] = (rhs[i] - upper[i] * m_[i + 1]) / diag[i];
  }

  double value(double x) const { return eval(x, 0); }
  double derivative(double x) const { return eval(x, 1); }
  double second_derivative(double x) const { return eval(x, 2); }
  double front() const { return x_.front(); }
  double back() const { return x_.back(); }

 private:
  double eval(double x, int order) const {
    const std::size_t n = x_.size();
    if (x <= x_.front() || x >= x_.back()) {
      const bool left = x <= x_.front();
      const std::size_t i = left ? 0 : n - 2;
      const double edge = left ? x_.front() : x_.back();
      const double slope = segment(i, edge, 1);
      if (order == 0) return segment(i, edge, 0) + slope * (x - edge);
      return order == 1 ? slope : 0.0;
    }
    const auto it = std::upper_bound(x_.begin(), x_.end(), x);
    return segment(static_cast<std::size_t>(it - x_.begin()) - 1, x, order);
  }

  double segment(std::size_t i, double x, int order) const {
    const double h = x_[i + 1] - x_[i];
    const double a = (x_[i + 1] - x) / h, b = (x - x_[i]) / h;
    switch (order) {
      case 0:
        return a * y_[i] + b * y_[i + 1] + ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / 6.0;
      case 1:
        return (y_[i + 1] - y_[i]) / h - (3 * a * a - 1) * h / 6.0 * m_[i] + (3 * b * b - 1) * h / 6.0 * m_[i + 1];
      default:
        return a * m_[i] + b * m_[i + 1];
    }
  }

  std::vector<double> x_, y_, m_;
};

/// Trigonometric (band-limited) interpolant of samples on a periodic grid.
///
/// Evaluates the unique trigonometric polynomial through the samples and its
/// derivatives at arbitrary points. Points outside one period [x_min, x_max)
/// evaluate to zero: the interpolated fields are localized and the periodic
/// image is not physical.
class SpectralInterpolant {
 public:
  static constexpr int max_derivative = 3;

  SpectralInterpolant() = default;
  SpectralInterpolant(const Grid1D& grid, const ComplexField& samples) : grid_(grid) {
    if (samples.size() != grid.size()) fail(ErrorCode::invalid_size, "interpolant samples do not match grid");
    const ComplexField coeffs = forward_transform(samples) / static_cast<double>(grid.size());
    const std::complex<double> i_unit(0, 1);
    const Index n = grid.size();
    for (int d = 0; d <= max_derivative; ++d) {
      scaled_[d] = coeffs;
      for (Index j = 0; j < n; ++j) scaled_[d][j] *= std::pow(i_unit * grid.wavenumbers()[j], d);
      // Nyquist mode split evenly between +k and -k.
      const double kn = grid.dk() * static_cast<double>(n / 2);
      nyquist_plus_[d] = 0.5 * coeffs[n / 2] * std::pow(i_unit * kn, d);
      nyquist_minus_[d] = 0.5 * coeffs[n / 2] * std::pow(-i_unit * kn, d);
    }
  }
  SpectralInterpolant(const Grid1D& grid, const RealField& samples)
      : SpectralInterpolant(grid, ComplexField(samples.cast<std::complex<double>>())) {}

  const Grid1D& grid() const { return grid_; }

  std::complex<double> value(double x, int derivative = 0) const {
    if (derivative < 0 || derivative > max_derivative) {
      fail(ErrorCode::invalid_argument, "interpolant supports derivatives up to order 3");
    }
    if (x < grid_.x_min() || x >= grid_.x_max()) return 0.0;
    const ComplexField& c = scaled_[derivative];
    const Index n = grid_.size();
    const Index half = n / 2;
    const double phase = grid_.dk() * (x - grid_.x_min());

    std::complex<double> sum = c[0];
    std::complex<double> z = 1.0;
    const std::complex<double> step = std::polar(1.0, phase);
    for (Index j = 1; j < half; ++j) {
      // Periodic resynchronisation keeps the recurrence error at rounding level.
      if (j % 64 == 0) {
        z = std::polar(1.0, phase * static_cast<double>(j));
      } else {
        z *= step;
      }
      sum += c[j] * z + c[n - j] * std::conj(z);
    }
    const std::complex<double> zn = std::polar(1.0, phase * static_cast<double>(half));
    sum += nyquist_plus_[derivative] * zn + nyquist_minus_[derivative] * std::conj(zn);
    return sum;
  }

  /// All derivatives 0..3 at `x` in a single pass over the coefficients.
  std::array<std::complex<double>, max_derivative + 1> jet(double x) const {
    std::array<std::complex<double>, max_derivative + 1> sums{};
    if (x < grid_.x_min() || x >= grid_.x_max()) return sums;
    const Index n = grid_.size();
    const Index half = n / 2;
    const double phase = grid_.dk() * (x - grid_.x_min());
    for (int d = 0; d <= max_derivative; ++d) sums[d] = scaled_[d][0];
    std::complex<double> z = 1.0;
    const std::complex<double> step = std::polar(1.0, phase);
    for (Index j = 1; j < half; ++j) {
      if (j % 64 == 0) {
        z = std::polar(1.0, phase * static_cast<double>(j));
      } else {
        z *= step;
      }
      const std::complex<double> zc = std::conj(z);
      for (int d = 0; d <= max_derivative; ++d) sums[d] += scaled_[d][j] * z + scaled_[d][n - j] * zc;
    }
    const std::complex<double> zn = std::polar(1.0, phase * static_cast<double>(half));
    for (int d = 0; d <= max_derivative; ++d) sums[d] += nyquist_plus_[d] * zn + nyquist_minus_[d] * std::conj(zn);
    return sums;
  }

  ComplexField evaluate(const RealField& points, int derivative = 0) const {
    ComplexField out(points.size());
    for (Index i = 0; i < points.size(); ++i) out[i] = value(points[i], derivative);
    return out;
  }

 private:
  Grid1D grid_;
  std::array<ComplexField, max_derivative + 1> scaled_;
  std::array<std::complex<double>, max_derivative + 1> nyquist_plus_{};
  std::array<std::complex<double>, max_derivative + 1> nyquist_minus_{};
};

}  // namespace wavectl
