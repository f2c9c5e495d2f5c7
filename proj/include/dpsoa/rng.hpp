// Copyright 2026 The dpsoa Authors
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

#pragma once

#include <cstdint>
#include <random>

namespace dpsoa {

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Child seed for a derived component (trial index, tree index, ...).
inline uint64_t derive_seed(uint64_t seed, uint64_t salt) {
  return splitmix64(seed ^ splitmix64(salt));
}

// Seeded random stream. Identical (seed, stream) gives an identical draw
// sequence; draws are produced from raw engine output so results do not
// depend on library distribution implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed, uint64_t stream = 0)
      : engine_(splitmix64(splitmix64(seed) ^ splitmix64(stream * 0xda3e39cb94b95bdbull + 1))) {}

  uint64_t next_u64() { return engine_(); }

  // Uniform in [0,1), 53-bit resolution.
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in (0,1), never returns an endpoint.
  double uniform_open() {
    return (double(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  bool bit() { return (next_u64() >> 63) != 0; }

  // Uniform integer in [0, n). Rejection sampling, unbiased.
  uint64_t below(uint64_t n) {
    uint64_t threshold = (0 - n) % n;
    for (;;) {
      uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace dpsoa
