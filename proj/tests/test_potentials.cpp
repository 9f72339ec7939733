#include <doctest.h>

#include <cmath>
#include <fstream>
#include <vector>

#include "wavectl/potentials.hpp"

using namespace wavectl;

namespace {

std::vector<Potential> families() {
  return {Potential::harmonic(1.3, 0.8), Potential::quartic(1.0, 0.1), Potential::double_well(2.0, 1.0),
          Potential::morse(10.0, 0.3, 0.5)};
}

}  // namespace

TEST_CASE("closed-form values") {
  CHECK(Potential::harmonic(1.0).value(0.0) == 0.0);
  CHECK(Potential::harmonic(1.0, 1.0).value(2.0) == doctest::Approx(2.0));
  CHECK(Potential::quartic(1.0, 0.1).value(1.0) == doctest::Approx(0.6));
  CHECK(Potential::double_well(2.0, 1.0).value(std::sqrt(2.0)) == doctest::Approx(-1.0));
  CHECK(Potential::morse(10.0, 0.3, 0.0).value(0.0) == 0.0);
}

TEST_CASE("closed-form gradients") {
  CHECK(Potential::harmonic(1.0, 1.0).gradient(1.0) == doctest::Approx(1.0));
  const Potential q = Potential::quartic(1.0, 0.1);
  CHECK(q.gradient(1.0) == doctest::Approx(1.4));
  const double h = 1e-4;
  CHECK(std::abs(q.gradient(1.0) - (q.value(1.0 + h) - q.value(1.0 - h)) / (2 * h)) < 1e-6);
}

TEST_CASE("gradient vanishes at each family's minimum") {
  for (const Potential& p : families()) {
    CAPTURE(p.describe());
    REQUIRE(p.minimum_location());
    CHECK(std::abs(p.gradient(*p.minimum_location())) < 1e-12);
  }
}

TEST_CASE("gradient is the derivative of the value, at second order in h") {
  for (const Potential& p : families()) {
    CAPTURE(p.describe());
    for (double x : {-2.1, -0.7, 0.0, 0.35, 1.4, 2.9}) {
      const auto fd = [&](double h) { return (p.value(x + h) - p.value(x - h)) / (2 * h); };
      const double e1 = std::abs(p.gradient(x) - fd(1e-2));
      const double e2 = std::abs(p.gradient(x) - fd(5e-3));
      CHECK(e1 < 1e-2 * (1 + std::abs(p.gradient(x))));
      if (e1 > 1e-9) CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.02));
    }
  }
}

TEST_CASE("vectorized evaluation matches the scalar one") {
  const Grid1D g = make_grid(128, -4, 4);
  for (const Potential& p : families()) {
    const PotentialSample s = sample(p, g);
    for (Index j = 0; j < g.size(); j += 17) {
      CHECK(s.values[j] == p.value(g.nodes()[j]));
      CHECK(s.gradient[j] == p.gradient(g.nodes()[j]));
    }
  }
}

TEST_CASE("shifted and scaled samples") {
  const Grid1D g = make_grid(256, -8, 8);
  const Potential h = Potential::harmonic(1.0);
  const RealField plain = sample(h, g).values;
  CHECK((shifted_scaled_sample(h, g, 0.0, 1.0) - plain).abs().maxCoeff() < 1e-15);

  const double s = 0.75;
  const RealField shifted = shifted_scaled_sample(h, g, s, 1.0);
  CHECK((shifted - 0.5 * (g.nodes() - s).square()).abs().maxCoeff() < 1e-12);

  const RealField scaled = shifted_scaled_sample(h, g, 0.0, 2.0);
  CHECK((scaled - 4.0 * 0.5 * (2.0 * g.nodes()).square()).abs().maxCoeff() < 1e-12);
  CHECK((scaled - 8.0 * g.nodes().square()).abs().maxCoeff() < 1e-12);

  for (const Potential& p : families()) {
    const RealField a = shifted_scaled_sample(p, g, -1.3, 1.0);
    for (Index j = 0; j < g.size(); j += 13) CHECK(std::abs(a[j] - p.value(g.nodes()[j] + 1.3)) < 1e-12);
    const RealField c = shifted_scaled_sample(p, g, 0.5, 0.8, 0.2);
    for (Index j = 0; j < g.size(); j += 13) {
      CHECK(std::abs(c[j] - 0.64 * p.value(0.8 * (g.nodes()[j] - 0.5) + 0.2)) < 1e-12);
    }
  }
}

TEST_CASE("every family is bounded below on a wide grid") {
  const Grid1D g = make_grid(4096, -40, 40);
  for (const Potential& p : families()) {
    const RealField v = sample(p, g).values;
    CHECK(v.allFinite());
    CHECK(v.minCoeff() >= p.value(*p.minimum_location()) - 1e-12);
  }
}

TEST_CASE("tabulated potential follows its table") {
  std::vector<double> x, v;
  const Potential q = Potential::quartic(1.0, 0.1);
  for (int i = 0; i <= 640; ++i) {
    x.push_back(-16.0 + 0.05 * i);
    v.push_back(q.value(x.back()));
  }
  const Potential t = Potential::tabulated(x, v);
  CHECK(t.family() == PotentialFamily::tabulated);
  for (double p : {-3.0, -0.52, 0.0, 1.11, 2.7}) {
    CHECK(std::abs(t.value(p) - q.value(p)) < 1e-5);
    CHECK(std::abs(t.gradient(p) - q.gradient(p)) < 1e-3);
  }
  // Spline gradient against its own finite difference.
  for (double p : {-2.03, 0.41, 1.77}) {
    const double h = 1e-4;
    CHECK(std::abs(t.gradient(p) - (t.value(p + h) - t.value(p - h)) / (2 * h)) < 1e-6);
  }
}

TEST_CASE("tabulated potential from CSV, header optional") {
  const std::string path = "potential_table_test.csv";
  {
    std::ofstream out(path);
    out << "x,V\n";
    for (int i = -20; i <= 20; ++i) out << 0.25 * i << "," << 0.5 * (0.25 * i) * (0.25 * i) << "\n";
  }
  const Potential t = Potential::from_csv(path);
  CHECK(t.value(1.0) == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(t.gradient(1.0) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK_THROWS_AS(Potential::from_csv("does_not_exist.csv"), Error);
}

TEST_CASE("family names and quadratic flag") {
  CHECK(to_string(PotentialFamily::double_well) == "double-well");
  CHECK(Potential::harmonic(1.0).is_quadratic());
  CHECK_FALSE(Potential::quartic(1.0, 0.1).is_quadratic());
  CHECK_FALSE(Potential::quartic(1.0, 0.1).describe().empty());
}
