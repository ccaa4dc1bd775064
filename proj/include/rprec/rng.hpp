#pragma once

#include <cstdint>

#include "rprec/data_matrix.hpp"

namespace rprec {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based 64-bit generator.
///
/// A stream is identified by (seed, stream id); its key is
/// mix64(seed ^ mix64(stream)). Draw k (zero-based) of the stream is
/// mix64(key + k * 0x9e3779b97f4a7c15). Draws depend only on (seed, stream, k),
/// never on the platform or on the order in which other streams are consumed,
/// so work split across threads reproduces the serial result bit for bit.
///
/// Uniforms use the top 53 bits: u = (bits + 0.5) / 2^53, strictly inside (0, 1).
/// Gaussians use one uniform each through `inverse_normal_cdf`.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(mix64(seed ^ mix64(stream))) {}

  std::uint64_t next_u64() { return mix64(key_ + 0x9e3779b97f4a7c15ULL * counter_++); }
  double next_uniform();
  double next_gaussian();

  /// Independent child stream; does not advance this generator.
  CounterRng split(std::uint64_t child) const { return CounterRng(key_, child); }

  std::uint64_t draws() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Acklam's rational approximation refined by one Halley step against erfc.
/// Accurate to ~1e-15 relative on (0, 1).
double inverse_normal_cdf(double p);

/// rows x cols standard normal matrix, filled column by column.
DenseMatrix gaussian_matrix(Index rows, Index cols, CounterRng& rng);

}  // namespace rprec
