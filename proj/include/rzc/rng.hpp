#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <utility>

namespace rzc {

// SplitMix64 finalizer, bijective on 64-bit words.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Counter-based generator: output i is mix64(key + i*gamma), so a value
// depends only on (key, counter). Streams with distinct keys are independent
// for Monte Carlo purposes and reproducible regardless of scheduling.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  std::uint64_t next() {
    ++counter_;
    return mix64(key_ + 0x9e3779b97f4a7c15ull * counter_);
  }

  // uniform on (0, 1]
  double uniform01() { return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53; }

  std::pair<double, double> normal_pair() {
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    return {r * std::cos(a), r * std::sin(a)};
  }

  // a + ib with independent standard normal parts
  std::complex<double> complex_normal() {
    auto [a, b] = normal_pair();
    return {a, b};
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Per-sample stream derived from (master_seed, sample_index).
inline CounterRng sample_stream(std::uint64_t master_seed, std::uint64_t sample_index) {
  return CounterRng(mix64(master_seed) ^ mix64(0x517cc1b727220a95ull + sample_index));
}

}  // namespace rzc
