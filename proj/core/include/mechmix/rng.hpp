#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace mechmix {

// Counter-based splittable PRNG built on the splitmix64 finalizer. Substreams
// are derived by hashing a path of tags into the seed, so every
// (trajectory, purpose) pair gets an independent stream and results are
// reproducible regardless of evaluation order or thread count.
//
// Normal variates use Box-Muller on our own uniforms rather than
// std::normal_distribution, whose output is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  static std::uint64_t mix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  }

  static std::uint64_t substream(std::uint64_t seed,
                                 std::initializer_list<std::uint64_t> path) {
    std::uint64_t h = mix(seed);
    for (std::uint64_t tag : path) {
      h = mix(h ^ (tag * 0xC2B2AE3D27D4EB4FULL));
    }
    return h;
  }

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform in [lo, hi).
  double next_uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  // Standard normal via Box-Muller; the second variate of each pair is
  // cached.
  double next_normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u1 = next_double();
    double u2 = next_double();
    if (u1 < 0x1.0p-53) u1 = 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    cached_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
  }

  // Integer in [0, n).
  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

 private:
  std::uint64_t state_;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

// Stream tags used to split the experiment seed into purpose-specific
// substreams.
namespace streams {
inline constexpr std::uint64_t kMechanism = 0x01;
inline constexpr std::uint64_t kInitState = 0x02;
inline constexpr std::uint64_t kTransitionNoise = 0x03;
inline constexpr std::uint64_t kMixingMap = 0x04;
inline constexpr std::uint64_t kDistortion = 0x05;
inline constexpr std::uint64_t kEncoderNoise = 0x06;
inline constexpr std::uint64_t kContexts = 0x07;
inline constexpr std::uint64_t kEnsemble = 0x08;
inline constexpr std::uint64_t kValidation = 0x09;
inline constexpr std::uint64_t kDeltaProbe = 0x0A;
inline constexpr std::uint64_t kTrajectory = 0x0B;
inline constexpr std::uint64_t kBasis = 0x0C;
inline constexpr std::uint64_t kStandardize = 0x0D;
}  // namespace streams

}  // namespace mechmix
