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

#include "ssb/permutation.h"

#include <numeric>
#include <utility>

#include "ssb/byte_io.h"

namespace ssb {

uint64_t PermutationSeed(std::span<const uint8_t> key, uint16_t group_id, uint64_t key_salt) {
  ByteWriter w;
  w.Append(key);
  w.U16(group_id);
  w.U64(key_salt);
  return Fnv1a64(w.bytes());
}

std::vector<uint32_t> FisherYates(SplitMix64& stream, size_t n) {
  std::vector<uint32_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0u);
  for (size_t i = n; i-- > 1;) {
    const auto j = static_cast<size_t>(stream.Below(i + 1));
    std::swap(perm[i], perm[j]);
  }
  return perm;
}

std::vector<uint32_t> PermutationFromKey(std::span<const uint8_t> key, uint16_t group_id,
                                         uint64_t key_salt, size_t n) {
  return KeyedPermuter(key, group_id, key_salt).Next(n);
}

std::vector<uint32_t> InversePermutation(std::span<const uint32_t> perm) {
  std::vector<uint32_t> inv(perm.size());
  for (size_t k = 0; k < perm.size(); ++k) inv[perm[k]] = static_cast<uint32_t>(k);
  return inv;
}

}  // namespace ssb
