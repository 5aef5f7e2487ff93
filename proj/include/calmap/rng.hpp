#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace calmap {

/// Deterministic random stream. mt19937_64 output is pinned by the standard;
/// the distribution transforms are written out here so that sequences do not
/// depend on the standard library implementation.
class RngStream {
 public:
  explicit RngStream(uint64_t seed) : eng_(seed), seed_mix_(seed) {}

  /// Derive an independent child stream; mixing follows splitmix64.
  RngStream child(uint64_t tag) const {
    uint64_t z = seed_mix_ + tag + 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z = z ^ (z >> 31);
    return RngStream(z, z);
  }

  uint64_t next_u64() { return eng_(); }

  /// Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (pair cached).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform(), u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  int uniform_int(int n) {  // in [0, n)
    return static_cast<int>(uniform() * n) % n;
  }

 private:
  RngStream(uint64_t seed, uint64_t mix) : eng_(seed), seed_mix_(mix) {}
  std::mt19937_64 eng_;
  uint64_t seed_mix_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace calmap
