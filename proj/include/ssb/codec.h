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

// End-to-end encode and selective decode of SSB files.
//
// Coding order inside a group substream is slice-major, then raster order
// over the group's latent cells, then channel within the slice. Each symbol
// is coded as residual = clamp(s - round(mu), -L, L) against the table whose
// scale is the smallest one >= sigma. An encrypted group permutes every
// slice's (residual, scale index) pairs with a keyed Fisher-Yates shuffle
// before coding.

#ifndef SSB_CODEC_H_
#define SSB_CODEC_H_

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "ssb/byte_io.h"
#include "ssb/config.h"
#include "ssb/container.h"
#include "ssb/entropy_model.h"
#include "ssb/group_mask.h"
#include "ssb/range_coder.h"
#include "ssb/tensor.h"
#include "ssb/transform.h"
#include "ssb/weights.h"

namespace ssb {

// Worker thread cap from SSB_THREADS; 1 when unset or invalid.
int ThreadsFromEnv();

// Flat y * w + x latent positions of one group, in raster order.
std::vector<int> GroupCells(const IdGrid& cell_groups, uint16_t group_id);

struct GroupKey {
  std::span<const uint8_t> key;
  uint16_t group_id = 0;
  uint64_t key_salt = 0;
};

struct GroupStream {
  Bytes bytes;
  size_t clamp_events = 0;
};

// Codes one group's cells of `y`. Cells whose symbol had to be clamped are
// rewritten in `y` with the value the decoder will see.
GroupStream EncodeGroupLatents(const Tensor& hyper, std::span<const int> cells,
                               LatentSymbols& y, const ModelWeights& weights,
                               const CodecConfig& cfg, const CdfTables& tables,
                               const GroupKey* key = nullptr);

// Writes the group's cells of `y`. Returns false when the stream did not end
// where the encoder left it (corrupt data or a wrong key).
bool DecodeGroupLatents(std::span<const uint8_t> stream, const Tensor& hyper,
                        std::span<const int> cells, LatentSymbols& y,
                        const ModelWeights& weights, const CodecConfig& cfg,
                        const CdfTables& tables, const GroupKey* key = nullptr);

// Hyper latent, channel-major, against the factorized prior.
Bytes EncodeHyperLatent(LatentSymbols& z, const FactorizedPrior& prior, const CdfTables& tables,
                        size_t* clamp_events = nullptr);
LatentSymbols DecodeHyperLatent(std::span<const uint8_t> stream, std::vector<int> shape,
                                const FactorizedPrior& prior, const CdfTables& tables,
                                bool* verified = nullptr);

struct EncodeOptions {
  AttentionMode mode = AttentionMode::kGroupIndependent;
  std::map<uint16_t, Bytes> keys;  // groups to encrypt
  int threads = 1;
};

struct EncodeResult {
  Bytes ssb;
  LatentSymbols y_quantized;  // round(g_a(x)) before any clamping
  LatentSymbols y_hat;        // values the decoder reconstructs
  LatentSymbols z_hat;
  size_t clamp_events = 0;
  std::map<uint16_t, size_t> group_bytes;
  size_t overhead_bytes = 0;
};

// image: [3, image_h, image_w] in [0, 1], matching the mask extent.
EncodeResult EncodeImage(const Tensor& image, const GroupMask& mask, const ModelWeights& weights,
                         const CodecConfig& cfg, const EncodeOptions& options = {});

struct DecodeOptions {
  std::map<uint16_t, Bytes> keys;
  // Missing keys and streams that fail verification become errors instead of
  // warnings.
  bool strict = false;
  int threads = 1;
  bool synthesize = true;
};

struct DecodeResult {
  Tensor image;  // [3, image_h, image_w] in [0, 1]; empty unless synthesized
  GroupMask mask;
  LatentSymbols y_hat;  // absent groups zero-filled
  std::set<uint16_t> groups;
  std::map<uint16_t, size_t> group_bits;
  size_t overhead_bits = 0;
  std::vector<std::string> warnings;
};

// groups: nullopt decodes every group present in the file.
DecodeResult DecodeGroups(std::span<const uint8_t> ssb,
                          const std::optional<std::set<uint16_t>>& groups,
                          const ModelWeights& weights, const CodecConfig& cfg,
                          const DecodeOptions& options = {});

}  // namespace ssb

#endif  // SSB_CODEC_H_
