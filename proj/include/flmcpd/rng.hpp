#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace flmcpd {

/// Philox4x32-10 counter-based block function (Salmon et al., SC'11).
/// Maps a 128-bit counter and a 64-bit key to 128 pseudo-random bits.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

/// Reproducible random stream addressed by (seed, stream, substream).
///
/// Two streams with different addresses never share a counter, so
/// replication r draws the same numbers whether it runs first, last, or on
/// another thread. Satisfies UniformRandomBitGenerator.
class RandomStream {
 public:
  using result_type = std::uint32_t;

  RandomStream(std::uint64_t seed, std::uint64_t stream, std::uint32_t substream = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();

  /// Standard normal via Box-Muller. Written out rather than using
  /// std::normal_distribution, whose algorithm is implementation-defined.
  double normal();

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> counter_;
  std::array<std::uint32_t, 4> block_{};
  int next_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace flmcpd
