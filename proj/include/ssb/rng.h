// Copyright 2026 The SSB Codec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SSB_RNG_H_
#define SSB_RNG_H_

#include <cstdint>

namespace ssb {

// SplitMix64: integer-only, so streams are identical across platforms.
class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  uint64_t Next() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 random bits.
  double NextDouble() { return static_cast<double>(Next() >> 11) * 0x1.0p-53; }

  // Unbiased draw in [0, bound) by rejection; bound >= 1.
  uint64_t Below(uint64_t bound) {
    // Largest multiple of bound representable in 64 bits, minus one.
    const uint64_t limit = ~0ull - (~0ull % bound + 1) % bound;
    uint64_t x;
    do {
      x = Next();
    } while (x > limit);
    return x % bound;
  }

 private:
  uint64_t state_;
};

}  // namespace ssb

#endif  // SSB_RNG_H_
