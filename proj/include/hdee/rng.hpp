#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace hdee {

// SplitMix64 finalizer. Bijective on 64-bit words, so distinct inputs give
// distinct outputs; used to derive per-replicate sub-seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t index) {
  return seed ^ splitmix64(index);
}

// Seedable stream of doubles. The generator is std::mt19937_64 (algorithm
// fixed by the C++ standard) and normals come from Box-Muller, so a given
// seed reproduces the same draws on every build. std::normal_distribution
// is deliberately avoided: its output is implementation-defined.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : gen_(seed) {}

  // Uniform on (0,1]; never 0, so log() below is safe.
  double uniform01() {
    return static_cast<double>((gen_() >> 11) + 1ULL) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double t = 2.0 * M_PI * u2;
    spare_ = r * std::sin(t);
    have_spare_ = true;
    return r * std::cos(t);
  }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace hdee
