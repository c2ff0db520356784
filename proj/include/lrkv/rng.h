// Copyright 2026 The LRKV Lab Authors.
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

#ifndef LRKV_RNG_H_
#define LRKV_RNG_H_

#include <cstdint>
#include <random>
#include <string_view>

namespace lrkv {

// Seeded source for every random draw in the project. The algorithm tag is
// recorded alongside generated artifacts so a change of generator is visible.
struct RngSpec {
  static constexpr std::string_view kAlgorithm = "mt19937_64/box-muller-v1";
  std::uint64_t seed = 0;
};

// Standard-normal sampler. std::normal_distribution is implementation
// defined, so the transform is spelled out to keep draws identical across
// standard libraries.
class NormalSampler {
 public:
  explicit NormalSampler(std::uint64_t seed) : engine_(seed) {}
  explicit NormalSampler(const RngSpec& spec) : engine_(spec.seed) {}

  double uniform() {
    // 53 random mantissa bits in [0, 1).
    return double(engine_() >> 11) * 0x1.0p-53;
  }

  double next();

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

// Independent child seed for stream `index` (splitmix64 finalizer).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace lrkv

#endif  // LRKV_RNG_H_
