#pragma once
// Deterministic random number generation. std::mt19937 distributions are
// implementation-defined, so everything here is hand-pinned: the same seed
// produces the same bytes on every platform and build.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string_view>
#include <vector>

namespace inspl {

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// One global seed per run; per-stage and per-tree streams are derived by
// hashing a tag (and optional index) into the seed, so stages can rerun
// independently yet reproducibly.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag,
                                 std::uint64_t index = 0) {
  std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a 64
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  std::uint64_t state = seed ^ h;
  std::uint64_t mixed = splitmix64_next(state);
  state = mixed ^ (index * 0xd1342543de82ef95ull);
  return splitmix64_next(state);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {
    // warm-up so seed==0 doesn't emit the raw splitmix constants first
    next_u64();
  }

  std::uint64_t next_u64() { return splitmix64_next(state_); }

  // Uniform integer in [0, bound) by rejection; unbiased.
  std::uint64_t next_below(std::uint64_t bound) {
    if (bound <= 1) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % bound;
  }

  // Uniform in [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform in [-half_width, half_width).
  double next_uniform(double half_width) {
    return (2.0 * next_double() - 1.0) * half_width;
  }

  bool next_bernoulli(double p) { return next_double() < p; }

  // Standard normal via Box-Muller; caches the second variate.
  double next_normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1, u2;
    do {
      u1 = next_double();
    } while (u1 <= 0.0);
    u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  // Uniformly random permutation of {0..n-1} (Fisher-Yates).
  std::vector<std::uint32_t> next_permutation(std::uint32_t n) {
    std::vector<std::uint32_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0u);
    for (std::uint32_t i = n; i > 1; --i) {
      const auto j = static_cast<std::uint32_t>(next_below(i));
      std::swap(perm[i - 1], perm[j]);
    }
    return perm;
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace inspl
