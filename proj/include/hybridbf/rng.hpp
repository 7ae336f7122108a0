#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>

namespace hybridbf {

// Counter-based 64-bit generator.
//
// Output n (n = 0, 1, 2, ...) of the stream with key `k` is
//
//     mix64(k + (n + 1) * 0x9E3779B97F4A7C15)
//
// where mix64 is the SplitMix64 finalizer:
//
//     z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//     z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//     z =  z ^ (z >> 31)
//
// All arithmetic is modulo 2^64. A uniform double in [0, 1) is
// (output >> 11) * 2^-53. A standard complex Gaussian CN(0, 1) consumes two
// uniforms u1, u2 in that order and returns sqrt(-ln(1 - u1)) * exp(j 2 pi u2).
//
// Substream keys are derived with `substream_key(seed, index)`
// = mix64(mix64(seed) ^ (index * 0xD1B54A32D192ED03 + 0x632BE59BD9B4E019)).
// The construction depends only on 64-bit integer arithmetic and IEEE
// doubles, so draws are reproducible across platforms and languages.
class CounterRng {
 public:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

  explicit CounterRng(std::uint64_t key) : key_(key) {}

  static constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  static constexpr std::uint64_t substream_key(std::uint64_t seed, std::uint64_t index) {
    return mix64(mix64(seed) ^ (index * 0xD1B54A32D192ED03ULL + 0x632BE59BD9B4E019ULL));
  }

  std::uint64_t next_u64() {
    ++counter_;
    return mix64(key_ + counter_ * kGolden);
  }

  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform_angle() { return 2.0 * std::numbers::pi * uniform(); }

  std::complex<double> complex_gaussian() {
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-std::log1p(-u1));
    return std::polar(r, 2.0 * std::numbers::pi * u2);
  }

  std::complex<double> unit_phase() { return std::polar(1.0, uniform_angle()); }

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace hybridbf
