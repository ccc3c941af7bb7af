// Copyright 2026 The htmia Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Reproducible random numbers.
//
// The bit generator is std::mt19937_64, whose output sequence is fixed by the
// C++ standard. The standard <random> distributions are NOT portable across
// library implementations, so every variate used by this project is derived
// here from raw 64-bit draws with an explicit formula:
//
//   uniform01   (x >> 11) * 2^-53                     in [0, 1)
//   bernoulli   uniform01 < p
//   uniform_int lo + floor(uniform01 * (hi - lo + 1))
//   normal      Box-Muller on (1 - u1, u2), cosine branch only
//
// Independent streams are derived from a master seed with split_seed(), which
// applies the SplitMix64 finalizer to (seed + (stream + 1) * golden_gamma).

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace htmia {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed for the stream-th child of `seed`.
inline constexpr std::uint64_t split_seed(std::uint64_t seed,
                                          std::uint64_t stream) noexcept {
  return splitmix64(seed + stream * 0x9e3779b97f4a7c15ULL);
}

class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Inclusive on both ends.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const double span = static_cast<double>(hi - lo + 1);
    auto v = lo + static_cast<std::int64_t>(uniform01() * span);
    return v > hi ? hi : v;
  }

  bool bernoulli(double p) { return uniform01() < p; }

  double normal() {
    const double u1 = 1.0 - uniform01();  // (0, 1]
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace htmia
