#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wavectl/numerics.hpp"

namespace wavectl {

enum class PotentialFamily { harmonic, quartic, double_well, morse, tabulated };

std::string_view to_string(PotentialFamily family);

/// Static potential V(x) from a closed analytic family, with hand-coded
/// gradient.
///
///   harmonic     (omega, mass)           m w^2 x^2 / 2
///   quartic      (omega, lambda, mass)   m w^2 x^2 / 2 + lambda x^4
///   double_well  (a, b)                  -a x^2 / 2 + b x^4 / 4
///   morse        (depth, alpha, x_e)     D (1 - exp(-alpha (x - x_e)))^2
///   tabulated    spline through (x, V) samples, linear beyond the table
class Potential {
 public:
  static Potential harmonic(double omega, double mass = 1.0);
  static Potential quartic(double omega, double lambda, double mass = 1.0);
  static Potential double_well(double a, double b);
  static Potential morse(double depth, double alpha, double x_e = 0.0);
  static Potential tabulated(std::vector<double> x, std::vector<double> values);
  /// Two-column CSV (x, V); a non-numeric first line is treated as a header.
  static Potential from_csv(const std::filesystem::path& path);

  double value(double x) const;
  double gradient(double x) const;
  RealField value(const RealField& x) const;
  RealField gradient(const RealField& x) const;

  PotentialFamily family() const { return family_; }
  const std::vector<double>& params() const { return params_; }

  /// True for families that are polynomials of degree <= 2.
  bool is_quadratic() const { return family_ == PotentialFamily::harmonic; }

  /// Closed-form location of the global minimum, when the family has one.
  std::optional<double> minimum_location() const;

  std::string describe() const;

 private:
  Potential(PotentialFamily family, std::vector<double> params) : family_(family), params_(std::move(params)) {}

  PotentialFamily family_;
  std::vector<double> params_;
  std::shared_ptr<const CubicSpline> table_;
};

/// Values and analytic gradient of V on the grid nodes.
struct PotentialSample {
  RealField values;
  RealField gradient;
};

PotentialSample sample(const Potential& pot, const Grid1D& grid);

/// scale^2 * V(scale * (x - shift) + center) on the grid nodes.
///
/// `center` maps the shifted origin onto a reference point of V (the mean
/// of the seed state); it is zero for potentials centered at the origin.
RealField shifted_scaled_sample(const Potential& pot, const Grid1D& grid, double shift, double scale,
                                double center = 0.0);

}  // namespace wavectl
