#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace convograph {

// SplitMix64 (Steele/Lea/Flood, public domain). Used instead of <random>
// engines + distributions because results must be bit-identical across
// platforms and standard libraries; <random> distributions are not.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Derives an independent stream. Callers that need several uncorrelated
  // sequences (e.g. vocabulary vs. walk sampling) split once up front so
  // extra draws in one stream never shift another.
  SplitMix64 split(std::uint64_t stream) const {
    SplitMix64 child(state_ ^ ((stream + 1) * 0xd1b54a32d192ed03ULL));
    child.next();
    return child;
  }

  // Uniform in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Unbiased integer in [0, bound), bound >= 1.
  std::uint64_t next_below(std::uint64_t bound) {
    const std::uint64_t threshold = (0 - bound) % bound;  // 2^64 mod bound
    for (;;) {
      const std::uint64_t r = next();
      if (r >= threshold) return r % bound;
    }
  }

  // Standard normal via Box-Muller. No cached spare: two draws per value
  // keeps the consumed stream length predictable.
  double next_gaussian() {
    const double u1 = 1.0 - next_double();  // (0, 1]
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(6.283185307179586476925287 * u2);
  }

  // Index sampled proportionally to nonnegative weights; the caller must
  // ensure the total is positive.
  std::size_t sample_weighted(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double u = next_double() * total;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      u -= weights[i];
      if (u < 0.0) return i;
    }
    // Floating-point slack at the top end: take the last positive weight.
    for (std::size_t i = weights.size(); i-- > 0;) {
      if (weights[i] > 0.0) return i;
    }
    return weights.size() - 1;
  }

 private:
  std::uint64_t state_;
};

}  // namespace convograph
