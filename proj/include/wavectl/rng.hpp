#pragma once

#include <array>
#include <cstdint>

#include "wavectl/numerics.hpp"

namespace wavectl {

/// Philox4x32-10 block function (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

/// Reproducible random stream addressed by (seed, stream_id).
///
/// Every draw is a pure function of (seed, stream_id, index): there is no
/// hidden state, so particle i at step k can be generated independently on
/// any thread.
class RngStream {
 public:
  RngStream() = default;
  RngStream(std::uint64_t seed, std::uint64_t stream_id) : seed_(seed), stream_id_(stream_id) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  /// Independent child stream, e.g. one per particle.
  RngStream substream(std::uint64_t child) const;

  /// Uniform deviate in (0, 1).
  double uniform(std::uint64_t index) const;

  /// Standard normal deviate; draws 2j and 2j+1 share one Box-Muller block.
  double gaussian(std::uint64_t index) const;

  bool operator==(const RngStream&) const = default;

 private:
  std::array<std::uint32_t, 4> block(std::uint64_t block_index) const;

  std::uint64_t seed_ = 0;
  std::uint64_t stream_id_ = 0;
};

/// `count` i.i.d. standard normal samples; element j equals stream.gaussian(j).
RealField gaussian_draws(const RngStream& stream, Index count);

}  // namespace wavectl
