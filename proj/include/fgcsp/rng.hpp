#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace fgcsp {

// SplitMix64 finalizer; used to derive independent seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

// Seeded stream with platform-independent draws. std::mt19937_64's output
// sequence is fixed by the standard; the distributions in <random> are not,
// so draws are derived here directly.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next() { return engine_(); }
  // Uniform in [0, 1) with 53 bits of precision.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  // Uniform integer in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n);

  Rng substream(std::uint64_t stream) const { return Rng(mix_seed(seed_, stream)); }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

// Inverse-CDF draw from an unnormalized nonnegative vector with a single
// uniform u in [0,1). The weights must not all be zero.
std::size_t sample_index(std::span<const double> weights, double u);

}  // namespace fgcsp
