#pragma once

#include <cstdint>
#include <string_view>

namespace coopnav {

// Deterministic random stream: xoshiro256++ seeded through splitmix64.
// Child streams are derived from (seed, label) so adding a consumer never
// perturbs the draws of existing ones. The generator algorithm and the
// derivation rule are documented in the README; equal seeds give equal
// 64-bit output sequences on every platform.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  // Derive an independent stream keyed by this stream's seed and a label.
  RngStream child(std::string_view label) const;

  std::uint64_t next_u64();

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform01();

  double uniform(double lo, double hi);

  // Draw from N(mean, variance) via Box-Muller (two uniforms per draw,
  // cosine branch). variance == 0 returns mean without consuming draws.
  double gaussian(double mean, double variance);

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint64_t state_[4];
};

}  // namespace coopnav
