#include "wavectl/potentials.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace wavectl {

std::string_view to_string(PotentialFamily family) {
  switch (family) {
    case PotentialFamily::harmonic: return "harmonic";
    case PotentialFamily::quartic: return "quartic";
    case PotentialFamily::double_well: return "double-well";
    case PotentialFamily::morse: return "morse";
    case PotentialFamily::tabulated: return "tabulated";
  }
  return "unknown";
}

namespace {

void require_positive(double value, const char* name) {
  if (!(value > 0) || !std::isfinite(value)) {
    fail(ErrorCode::invalid_argument, std::string(name) + " must be strictly positive");
  }
}

}  // namespace

Potential Potential::harmonic(double omega, double mass) {
  require_positive(omega, "omega");
  require_positive(mass, "mass");
  return Potential(PotentialFamily::harmonic, {omega, mass});
}

Potential Potential::quartic(double omega, double lambda, double mass) {
  require_positive(omega, "omega");
  require_positive(mass, "mass");
  if (!(lambda >= 0)) fail(ErrorCode::invalid_argument, "quartic lambda must be non-negative");
  return Potential(PotentialFamily::quartic, {omega, lambda, mass});
}

Potential Potential::double_well(double a, double b) {
  require_positive(b, "double-well b");
  if (!std::isfinite(a)) fail(ErrorCode::invalid_argument, "double-well a must be finite");
  return Potential(PotentialFamily::double_well, {a, b});
}

Potential Potential::morse(double depth, double alpha, double x_e) {
  require_positive(depth, "morse depth");
  require_positive(alpha, "morse alpha");
  return Potential(PotentialFamily::morse, {depth, alpha, x_e});
}

Potential Potential::tabulated(std::vector<double> x, std::vector<double> values) {
  Potential pot(PotentialFamily::tabulated, {});
  pot.table_ = std::make_shared<const CubicSpline>(std::move(x), std::move(values));
  return pot;
}

Potential Potential::from_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io_error, "cannot open potential table " + path.string());
  std::vector<double> xs, vs;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    for (char& c : line) {
      if (c == ',' || c == ';' || c == '\t') c = ' ';
    }
    std::istringstream fields(line);
    double x = 0, v = 0;
    if (!(fields >> x >> v)) {
      if (xs.empty()) continue;  // header
      fail(ErrorCode::parse_error, path.string() + ":" + std::to_string(line_no) + ": expected two numbers");
    }
    xs.push_back(x);
    vs.push_back(v);
  }
  return tabulated(std::move(xs), std::move(vs));
}

double Potential::value(double x) const {
  const auto& p = params_;
  switch (family_) {
    case PotentialFamily::harmonic: return 0.5 * p[1] * p[0] * p[0] * x * x;
    case PotentialFamily::quartic: {
      const double x2 = x * x;
      return 0.5 * p[2] * p[0] * p[0] * x2 + p[1] * x2 * x2;
    }
    case PotentialFamily::double_well: {
      const double x2 = x * x;
      return -0.5 * p[0] * x2 + 0.25 * p[1] * x2 * x2;
    }
    case PotentialFamily::morse: {
      const double e = 1.0 - std::exp(-p[1] * (x - p[2]));
      return p[0] * e * e;
    }
    case PotentialFamily::tabulated: return table_->value(x);
  }
  return 0.0;
}

double Potential::gradient(double x) const {
  const auto& p = params_;
  switch (family_) {
    case PotentialFamily::harmonic: return p[1] * p[0] * p[0] * x;
    case PotentialFamily::quartic: return p[2] * p[0] * p[0] * x + 4.0 * p[1] * x * x * x;
    case PotentialFamily::double_well: return -p[0] * x + p[1] * x * x * x;
    case PotentialFamily::morse: {
      const double decay = std::exp(-p[1] * (x - p[2]));
      return 2.0 * p[0] * p[1] * (1.0 - decay) * decay;
    }
    case PotentialFamily::tabulated: return table_->derivative(x);
  }
  return 0.0;
}

RealField Potential::value(const RealField& x) const { return x.unaryExpr([this](double xi) { return value(xi); }); }

RealField Potential::gradient(const RealField& x) const {
  return x.unaryExpr([this](double xi) { return gradient(xi); });
}

std::optional<double> Potential::minimum_location() const {
  switch (family_) {
    case PotentialFamily::harmonic:
    case PotentialFamily::quartic: return 0.0;
    case PotentialFamily::double_well:
      // Symmetric pair of minima; report the right one.
      return params_[0] > 0 ? std::sqrt(params_[0] / params_[1]) : 0.0;
    case PotentialFamily::morse: return params_[2];
    case PotentialFamily::tabulated: return std::nullopt;
  }
  return std::nullopt;
}

std::string Potential::describe() const {
  std::ostringstream out;
  out << to_string(family_) << "(";
  for (std::size_t i = 0; i < params_.size(); ++i) out << (i ? ", " : "") << params_[i];
  out << ")";
  return out.str();
}

PotentialSample sample(const Potential& pot, const Grid1D& grid) {
  return {pot.value(grid.nodes()), pot.gradient(grid.nodes())};
}

RealField shifted_scaled_sample(const Potential& pot, const Grid1D& grid, double shift, double scale, double center) {
  if (!(scale > 0)) fail(ErrorCode::invalid_argument, "scale must be positive");
  const RealField arguments = scale * (grid.nodes() - shift) + center;
  return scale * scale * pot.value(arguments);
}

}  // namespace wavectl
