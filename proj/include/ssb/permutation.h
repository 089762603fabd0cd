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

// Keyed Fisher-Yates permutations used to scramble a group's coded latents.
// This is obfuscation, not authenticated encryption.

#ifndef SSB_PERMUTATION_H_
#define SSB_PERMUTATION_H_

#include <cstdint>
#include <span>
#include <vector>

#include "ssb/rng.h"

namespace ssb {

// FNV-1a-64 over key || group_id (u16 LE) || key_salt (u64 LE).
uint64_t PermutationSeed(std::span<const uint8_t> key, uint16_t group_id, uint64_t key_salt);

// Fisher-Yates from the top index down with unbiased bounded draws.
std::vector<uint32_t> FisherYates(SplitMix64& stream, size_t n);

// First permutation of the keyed stream.
std::vector<uint32_t> PermutationFromKey(std::span<const uint8_t> key, uint16_t group_id,
                                         uint64_t key_salt, size_t n);

std::vector<uint32_t> InversePermutation(std::span<const uint32_t> perm);

// Successive permutations drawn from one keyed stream; slice s of a group
// uses the (s + 1)-th draw.
class KeyedPermuter {
 public:
  KeyedPermuter(std::span<const uint8_t> key, uint16_t group_id, uint64_t key_salt)
      : stream_(PermutationSeed(key, group_id, key_salt)) {}

  std::vector<uint32_t> Next(size_t n) { return FisherYates(stream_, n); }

 private:
  SplitMix64 stream_;
};

// out[k] = in[perm[k]].
template <typename T>
std::vector<T> ApplyPermutation(std::span<const T> in, std::span<const uint32_t> perm) {
  std::vector<T> out(in.size());
  for (size_t k = 0; k < perm.size(); ++k) out[k] = in[perm[k]];
  return out;
}

// Inverse of ApplyPermutation: out[perm[k]] = in[k].
template <typename T>
std::vector<T> UndoPermutation(std::span<const T> in, std::span<const uint32_t> perm) {
  std::vector<T> out(in.size());
  for (size_t k = 0; k < perm.size(); ++k) out[perm[k]] = in[k];
  return out;
}

}  // namespace ssb

#endif  // SSB_PERMUTATION_H_
