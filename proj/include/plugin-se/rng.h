// plugin-se/rng.h

// Copyright 2026  plugin-se contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef PLUGIN_SE_RNG_H_
#define PLUGIN_SE_RNG_H_

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace plugin_se {

inline uint64_t SplitMix64(uint64_t &state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Mixes a base seed with a stream index so that sub-generators (per item,
/// per epoch, per harmonic) never share a sequence.
inline uint64_t DeriveSeed(uint64_t base, uint64_t stream) {
  uint64_t s = base;
  uint64_t a = SplitMix64(s);
  uint64_t t = stream ^ a;
  return SplitMix64(t);
}

/// xoshiro256++ seeded through splitmix64. Satisfies
/// UniformRandomBitGenerator, but the helpers below are used throughout so
/// that streams do not depend on the standard library's distributions.
class Rng {
 public:
  using result_type = uint64_t;

  explicit Rng(uint64_t seed) {
    uint64_t s = seed;
    for (auto &w : state_) w = SplitMix64(s);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() {
    const uint64_t result = Rotl(state_[0] + state_[3], 23) + state_[0];
    const uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = Rotl(state_[3], 45);
    return result;
  }

  // [0, 1)
  double Uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

  // [0, n)
  uint64_t UniformInt(uint64_t n) {
    // Lemire's multiply-shift; the bias is below 2^-64 * n, irrelevant here.
    return static_cast<uint64_t>(
        (static_cast<unsigned __int128>((*this)()) * n) >> 64);
  }

  // Box-Muller, no caching so the stream position is easy to reason about.
  double Normal() {
    double u1 = Uniform();
    while (u1 <= 0.0) u1 = Uniform();
    const double u2 = Uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  static uint64_t Rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  uint64_t state_[4];
};

}  // namespace plugin_se

#endif  // PLUGIN_SE_RNG_H_
