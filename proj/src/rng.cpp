#include "wavectl/rng.hpp"

#include <cmath>
#include <numbers>

namespace wavectl {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

// Domain separation between uniform and Gaussian draws of the same stream.
constexpr std::uint64_t kUniformDomain = std::uint64_t{1} << 63;

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// 53 random bits mapped to the open interval (0, 1).
double to_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = ((std::uint64_t{hi} << 32) | lo) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
    const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
    ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

RngStream RngStream::substream(std::uint64_t child) const {
  return RngStream(seed_, splitmix64(stream_id_ ^ splitmix64(child + 0x632BE59BD9B4E019ull)));
}

std::array<std::uint32_t, 4> RngStream::block(std::uint64_t block_index) const {
  return philox4x32({static_cast<std::uint32_t>(block_index), static_cast<std::uint32_t>(block_index >> 32),
                     static_cast<std::uint32_t>(stream_id_), static_cast<std::uint32_t>(stream_id_ >> 32)},
                    {static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)});
}

double RngStream::uniform(std::uint64_t index) const {
  const auto words = block(index | kUniformDomain);
  return to_unit(words[0], words[1]);
}

double RngStream::gaussian(std::uint64_t index) const {
  const auto words = block(index >> 1);
  const double radius = std::sqrt(-2.0 * std::log(to_unit(words[0], words[1])));
  const double angle = 2.0 * std::numbers::pi * to_unit(words[2], words[3]);
  return (index & 1) == 0 ? radius * std::cos(angle) : radius * std::sin(angle);
}

RealField gaussian_draws(const RngStream& stream, Index count) {
  if (count < 1) fail(ErrorCode::invalid_argument, "gaussian_draws needs count >= 1");
  RealField out(count);
  for (Index j = 0; j < count; j += 2) {
    const auto jj = static_cast<std::uint64_t>(j);
    out[j] = stream.gaussian(jj);
    if (j + 1 < count) out[j + 1] = stream.gaussian(jj + 1);
  }
  return out;
}

}  // namespace wavectl
