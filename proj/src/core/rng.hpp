#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace srfe {

// splitmix64 generator. Chosen over <random> engines so that sequences are
// identical across standard libraries and platforms; every stochastic choice
// in the library flows through this type.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1), 53-bit resolution
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // unbiased integer in [0, n); n must be > 0
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
    for (;;) {
      std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  // inclusive bounds
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Box-Muller without a cached spare: two uniforms per variate, so the
  // draw count per call is fixed and streams stay reproducible.
  double normal() {
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

private:
  std::uint64_t state_;
};

inline std::uint64_t mix_u64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Derives an independent stream seed from a base seed and a key path.
// Work units (trial, generation, individual, tree, candidate...) each get
// their own derived stream, which makes results independent of scheduling.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts) {
  std::uint64_t s = mix_u64(base ^ 0x5851f42d4c957f2dull);
  for (std::uint64_t p : parts) {
    s = mix_u64(s ^ (p + 0x9e3779b97f4a7c15ull + (s << 6) + (s >> 2)));
  }
  return s;
}

// Stream tags, one per independent consumer of randomness.
namespace stream {
constexpr std::uint64_t kInitTree = 1;
constexpr std::uint64_t kGeneration = 2;
constexpr std::uint64_t kEnsembleMember = 3;
constexpr std::uint64_t kSplit = 4;
constexpr std::uint64_t kFolds = 5;
constexpr std::uint64_t kCandidate = 6;
constexpr std::uint64_t kRefit = 7;
constexpr std::uint64_t kPolynomial = 8;
constexpr std::uint64_t kData = 9;
constexpr std::uint64_t kGpRun = 10;
constexpr std::uint64_t kTrial = 11;
constexpr std::uint64_t kSweepCell = 12;
constexpr std::uint64_t kBootstrap = 13;
}  // namespace stream

}  // namespace srfe
