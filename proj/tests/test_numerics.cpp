#include <doctest.h>

#include <cmath>
#include <numbers>

#include "wavectl/numerics.hpp"

using namespace wavectl;

namespace {

constexpr double pi = std::numbers::pi;

RealField gaussian(const Grid1D& g, double mean = 0.0, double sd = 1.0) {
  const RealField z = (g.nodes() - mean) / sd;
  return (-0.5 * z.square()).exp() / (sd * std::sqrt(2 * pi));
}

double max_abs(const ComplexField& f) { return f.abs().maxCoeff(); }
double max_abs(const RealField& f) { return f.abs().maxCoeff(); }

}  // namespace

TEST_CASE("grid spacing and wavenumbers") {
  const Grid1D g = make_grid(256, -8, 8);
  CHECK(g.dx() == doctest::Approx(0.0625).epsilon(1e-15));
  CHECK(g.nodes()[0] == -8.0);
  CHECK(g.nodes()[255] == doctest::Approx(8.0 - 0.0625));

  const Grid1D unit = make_grid(64, 0, 64);
  CHECK(unit.dx() == 1.0);
  CHECK(unit.dk() == doctest::Approx(2 * pi / 64));
  CHECK(unit.wavenumbers()[1] == doctest::Approx(2 * pi / 64));
  CHECK(unit.wavenumbers()[32] == doctest::Approx(-32 * 2 * pi / 64));
  CHECK(unit.wavenumbers()[63] == doctest::Approx(-2 * pi / 64));
}

TEST_CASE("grid rejects bad sizes and extents") {
  auto code_of = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::io_error;
  };
  CHECK(code_of([] { make_grid(100, -8, 8); }) == ErrorCode::invalid_size);
  CHECK(code_of([] { make_grid(32, -8, 8); }) == ErrorCode::invalid_size);
  CHECK(code_of([] { make_grid(64, 1, 1); }) == ErrorCode::degenerate_extent);
}

TEST_CASE("spectral derivative of Fourier modes and constants") {
  const Grid1D g = make_grid(128, -4, 4);
  const double k = 5 * g.dk();
  const ComplexField mode = (std::complex<double>(0, 1) * k * g.nodes().cast<std::complex<double>>()).exp();
  const ComplexField d = spectral_derivative(g, mode, 1);
  CHECK(max_abs(ComplexField(d - std::complex<double>(0, k) * mode)) < 1e-10);
  const ComplexField d2 = spectral_derivative(g, mode, 2);
  CHECK(max_abs(ComplexField(d2 + k * k * mode)) < 1e-9);

  const ComplexField constant = ComplexField::Constant(128, 2.5);
  CHECK(max_abs(spectral_derivative(g, constant, 1)) < 1e-12);
}

TEST_CASE("spectral derivative of a Gaussian agrees with central differences to O(dx^2)") {
  double previous = 0.0;
  for (Index n : {256, 512}) {
    const Grid1D g = make_grid(n, -10, 10);
    const RealField f = gaussian(g);
    const RealField spectral = spectral_derivative(g, f, 1);
    RealField central(n);
    for (Index j = 0; j < n; ++j) central[j] = (f[(j + 1) % n] - f[(j + n - 1) % n]) / (2 * g.dx());
    const double err = max_abs(RealField(spectral - central));
    CHECK(err < 0.1 * g.dx() * g.dx());
    if (previous > 0) CHECK(previous / err == doctest::Approx(4.0).epsilon(0.05));
    previous = err;
  }
}

TEST_CASE("spectral derivative is linear") {
  const Grid1D g = make_grid(256, -10, 10);
  const ComplexField a = gaussian(g, 1.0, 0.7).cast<std::complex<double>>();
  const ComplexField b = (gaussian(g, -2.0, 1.3) * (3 * g.nodes()).sin()).cast<std::complex<double>>();
  const std::complex<double> alpha(0.3, -1.2), beta(2.0, 0.5);
  const ComplexField lhs = spectral_derivative(g, ComplexField(alpha * a + beta * b), 1);
  const ComplexField rhs = alpha * spectral_derivative(g, a, 1) + beta * spectral_derivative(g, b, 1);
  CHECK(max_abs(ComplexField(lhs - rhs)) < 1e-12);
}

TEST_CASE("transform pair preserves the L2 norm") {
  const Grid1D g = make_grid(512, -12, 12);
  const ComplexField psi = (gaussian(g, 0.5, 0.8).sqrt() * (2 * g.nodes()).cos()).cast<std::complex<double>>();
  const ComplexField spectrum = forward_transform(psi);
  const double direct = psi.abs2().sum();
  const double parseval = spectrum.abs2().sum() / static_cast<double>(g.size());
  CHECK(std::abs(direct - parseval) / direct < 1e-12);
  CHECK(l2_distance(g, inverse_transform(spectrum), psi) < 1e-12);
}

TEST_CASE("quadrature of moments") {
  const Grid1D g = make_grid(1024, -20, 20);
  const RealField rho = gaussian(g);
  CHECK(std::abs(quadrature(g, rho) - 1.0) < 1e-12);
  CHECK(std::abs(quadrature(g, RealField(g.nodes() * rho))) < 1e-12);
  CHECK(std::abs(quadrature(g, RealField(g.nodes().square() * rho)) - 1.0) < 1e-10);
}

TEST_CASE("rk4 on elementary equations") {
  using V1 = Eigen::Matrix<double, 1, 1>;
  V1 y = V1::Constant(3.0);
  const auto frozen = [](double, const V1&) { return V1::Zero().eval(); };
  CHECK(rk4_step(y, frozen, 0.0, 0.1)[0] == 3.0);

  const auto growth = [](double, const V1& v) { return v; };
  y = V1::Constant(1.0);
  for (int i = 0; i < 10; ++i) y = rk4_step(y, growth, 0.1 * i, 0.1);
  CHECK(std::abs(y[0] - std::exp(1.0)) < 1e-5);
  CHECK(std::abs(y[0] - std::exp(1.0)) / std::exp(1.0) < 1e-6);
}

TEST_CASE("rk4 returns the oscillator to its start after one period, at fourth order") {
  using V2 = Eigen::Vector2d;
  const auto oscillator = [](double, const V2& s) { return V2(s[1], -s[0]); };
  auto period_error = [&](long long steps) {
    const double dt = 2 * pi / static_cast<double>(steps);
    V2 s(1.0, 0.0);
    for (long long i = 0; i < steps; ++i) s = rk4_step(s, oscillator, dt * static_cast<double>(i), dt);
    return (s - V2(1.0, 0.0)).norm();
  };
  CHECK(period_error(6283) < 1e-8);
  const double coarse = period_error(200), fine = period_error(400);
  CHECK(coarse / fine == doctest::Approx(16.0).epsilon(0.05));
}

TEST_CASE("quintic Hermite reproduces quintic polynomials") {
  const auto p = [](double t) { return 1 - 2 * t + 0.5 * t * t + 3 * std::pow(t, 3) - std::pow(t, 4) + 0.2 * std::pow(t, 5); };
  const auto dp = [](double t) { return -2 + t + 9 * t * t - 4 * std::pow(t, 3) + std::pow(t, 4); };
  const auto ddp = [](double t) { return 1 + 18 * t - 12 * t * t + 4 * std::pow(t, 3); };
  const double t0 = 0.3, t1 = 1.1;
  for (double t : {0.3, 0.45, 0.7, 1.0, 1.1}) {
    const HermiteValue h = hermite_quintic(t0, t1, {p(t0), dp(t0), ddp(t0)}, {p(t1), dp(t1), ddp(t1)}, t);
    CHECK(h.value == doctest::Approx(p(t)).epsilon(1e-12));
    CHECK(h.first == doctest::Approx(dp(t)).epsilon(1e-11));
    CHECK(h.second == doctest::Approx(ddp(t)).epsilon(1e-10));
  }
}

TEST_CASE("cubic spline interpolates its knots and continues linearly") {
  const CubicSpline s({0, 1, 2, 3, 4}, {0, 1, 4, 9, 16});
  for (int i = 0; i <= 4; ++i) CHECK(s.value(i) == doctest::Approx(i * i));
  CHECK(s.value(5) == doctest::Approx(16 + s.derivative(4)));
  CHECK(s.second_derivative(-1) == 0.0);
  CHECK_THROWS_AS(CubicSpline({0, 1}, {0, 1}), Error);
  CHECK_THROWS_AS(CubicSpline({0, 2, 1}, {0, 1, 2}), Error);
}

TEST_CASE("band-limited interpolant: samples, off-node values and derivatives") {
  const Grid1D g = make_grid(256, -12, 12);
  const RealField f = gaussian(g, 0.4, 1.1);
  const SpectralInterpolant interp(g, f);
  for (Index j : {0, 50, 128, 200}) CHECK(std::abs(interp.value(g.nodes()[j]).real() - f[j]) < 1e-13);

  const double sd = 1.1, mean = 0.4, norm = 1.0 / (sd * std::sqrt(2 * pi));
  for (double x : {-1.37, 0.0, 0.91, 2.53}) {
    const double z = (x - mean) / sd;
    const double v = norm * std::exp(-0.5 * z * z);
    const double d1 = -z / sd * v;
    const double d2 = (z * z - 1) / (sd * sd) * v;
    const double d3 = (3 * z - z * z * z) / (sd * sd * sd) * v;
    const auto jet = interp.jet(x);
    CHECK(std::abs(jet[0].real() - v) < 1e-12);
    CHECK(std::abs(jet[1].real() - d1) < 1e-11);
    CHECK(std::abs(jet[2].real() - d2) < 1e-10);
    CHECK(std::abs(jet[3].real() - d3) < 1e-9);
    CHECK(std::abs(interp.value(x, 2) - jet[2]) < 1e-14);
  }
  CHECK(std::abs(interp.value(30.0)) == 0.0);
}
