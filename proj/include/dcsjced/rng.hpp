#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>
#include <vector>

#include "dcsjced/types.hpp"

namespace dcsjced {

// Counter-based generator: every stream is splitmix64 over an incrementing
// counter, keyed by (seed, stream name, trial, lane).  Streams drawn for the
// same key are identical regardless of execution order, which is what makes
// paired trials and concurrent workers reproducible.
class RngStream {
 public:
  RngStream(uint64_t seed, std::string_view name, uint64_t trial = 0, uint64_t lane = 0) {
    uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a over the key material
    auto feed = [&h](uint64_t v) {
      for (int i = 0; i < 8; ++i) {
        h ^= (v >> (8 * i)) & 0xff;
        h *= 0x100000001b3ull;
      }
    };
    feed(seed);
    for (char c : name) {
      h ^= static_cast<uint8_t>(c);
      h *= 0x100000001b3ull;
    }
    feed(trial);
    feed(lane);
    key_ = h;
  }

  uint64_t next_u64() {
    uint64_t z = (key_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // uniform in [0,1)
  Real next_double() { return static_cast<Real>(next_u64() >> 11) * 0x1.0p-53; }

  // standard normal via Box-Muller (explicit, platform-independent)
  Real next_gauss() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    Real u1 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    const Real u2 = next_double();
    const Real r = std::sqrt(-2.0 * std::log(u1));
    const Real a = 2.0 * std::numbers::pi_v<Real> * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // CN(0, var): total variance var, split equally across real/imag
  Complex next_cgauss(Real var) {
    const Real s = std::sqrt(var / 2.0);
    const Real re = next_gauss();
    const Real im = next_gauss();
    return {s * re, s * im};
  }

  int next_below(int n) { return static_cast<int>(next_u64() % static_cast<uint64_t>(n)); }

  // Fisher-Yates permutation of 0..n-1
  std::vector<int> permutation(int n) {
    std::vector<int> p(n);
    for (int i = 0; i < n; ++i) p[i] = i;
    for (int i = n - 1; i > 0; --i) std::swap(p[i], p[next_below(i + 1)]);
    return p;
  }

 private:
  uint64_t key_ = 0;
  Real spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace dcsjced
