#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "inf2vec/core.hpp"

namespace inf2vec {

inline uint64_t splitmix64(uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic random stream. The distribution transforms are implemented
// here rather than via std::*_distribution so that a given (seed, stream)
// yields the same values on every platform and standard library.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(mix(seed, 0)) {}
  Rng(uint64_t seed, uint64_t stream) : gen_(mix(seed, stream)) {}

  // uniform in [0, 1)
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  // uniform in (0, 1]; safe as a log() argument
  double uniform_pos() { return 1.0 - uniform(); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double exponential(double rate) {
    require(rate > 0.0, "exponential rate must be positive");
    return -std::log(uniform_pos()) / rate;
  }

  // standard normal via Box-Muller, one value per call (second discarded
  // to keep the stream position independent of call parity)
  double normal() {
    double u1 = uniform_pos();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // uniform integer in [0, n)
  uint64_t below(uint64_t n) {
    require(n > 0, "below(n) requires n > 0");
    uint64_t threshold = (~n + 1) % n;  // 2^64 mod n
    for (;;) {
      uint64_t r = gen_();
      if (r >= threshold) return r % n;
    }
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  std::vector<int> permutation(int n) {
    std::vector<int> p(n);
    for (int i = 0; i < n; ++i) p[i] = i;
    shuffle(p);
    return p;
  }

 private:
  static uint64_t mix(uint64_t seed, uint64_t stream) {
    uint64_t s = seed;
    uint64_t a = splitmix64(s);
    s ^= 0x6a09e667f3bcc909ULL + stream * 0x9e3779b97f4a7c15ULL;
    uint64_t b = splitmix64(s);
    return a ^ (b + 0x2545f4914f6cdd1dULL);
  }

  std::mt19937_64 gen_;
};

}  // namespace inf2vec
