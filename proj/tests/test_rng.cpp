#include <doctest.h>

#include <cmath>

#include "wavectl/rng.hpp"

using namespace wavectl;

// Known-answer vectors published with the Random123 library.
TEST_CASE("philox4x32-10 known answers") {
  using Block = std::array<std::uint32_t, 4>;
  CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == Block{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        Block{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        Block{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("draws are pure functions of seed, stream and index") {
  const RngStream a(42, 7), b(42, 7);
  CHECK((gaussian_draws(a, 1001) == gaussian_draws(b, 1001)).all());
  CHECK(a.uniform(123) == b.uniform(123));
  CHECK(a.substream(5) == b.substream(5));
  CHECK_FALSE(a.substream(5) == a.substream(6));
  CHECK(gaussian_draws(a, 10)[7] == a.gaussian(7));
  CHECK(gaussian_draws(RngStream(43, 7), 4)[0] != a.gaussian(0));
}

TEST_CASE("uniform draws stay inside the open unit interval") {
  const RngStream s(1, 0);
  double lo = 1, hi = 0, sum = 0;
  for (std::uint64_t i = 0; i < 100000; ++i) {
    const double u = s.uniform(i);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    sum += u;
  }
  CHECK(lo > 0.0);
  CHECK(hi < 1.0);
  CHECK(std::abs(sum / 1e5 - 0.5) < 4 * std::sqrt(1.0 / 12.0 / 1e5));
}

TEST_CASE("gaussian draws: mean, shape and independence of streams") {
  const Index n = 1000000;
  const RealField z = gaussian_draws(RngStream(2024, 3), n);
  const double mean = z.mean();
  CHECK(std::abs(mean) < 4.0 / std::sqrt(static_cast<double>(n)));
  const RealField c = z - mean;
  const double var = c.square().mean();
  const double skew = c.cube().mean() / std::pow(var, 1.5);
  const double kurt = c.square().square().mean() / (var * var) - 3.0;
  CHECK(std::abs(var - 1.0) < 0.01);
  CHECK(std::abs(skew) < 0.05);
  CHECK(std::abs(kurt) < 0.05);

  const Index m = 100000;
  const RealField x = gaussian_draws(RngStream(2024, 0), m);
  const RealField y = gaussian_draws(RngStream(2024, 1), m);
  const RealField xc = x - x.mean(), yc = y - y.mean();
  const double r = (xc * yc).sum() / std::sqrt(xc.square().sum() * yc.square().sum());
  CHECK(std::abs(r) < 0.01);

  const RealField p = gaussian_draws(RngStream(2024, 0).substream(0), m);
  const RealField q = gaussian_draws(RngStream(2024, 0).substream(1), m);
  const RealField pc = p - p.mean(), qc = q - q.mean();
  CHECK(std::abs((pc * qc).sum() / std::sqrt(pc.square().sum() * qc.square().sum())) < 0.01);
}
