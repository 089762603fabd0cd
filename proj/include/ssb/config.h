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

#ifndef SSB_CONFIG_H_
#define SSB_CONFIG_H_

#include <string>
#include <vector>

namespace ssb {

// Four x2 stages.
inline constexpr int kTotalStride = 16;
inline constexpr int kNumStages = 4;
inline constexpr int kMlpRatio = 4;
// Hyper path: two stride-2 convolutions below the latent grid.
inline constexpr int kHyperStride = 4;

struct CodecConfig {
  std::vector<int> stage_channels{48, 64, 96, 128};
  std::vector<int> depths{1, 1, 2, 1};
  int window = 4;
  std::vector<int> heads{2, 2, 4, 4};
  int latent_channels = 32;
  int hyper_channels = 48;
  int slices = 10;
  bool charm_enabled = true;
  int block_size = 32;
  float sigma_min = 0.11f;
  int symbol_bound = 64;
  int cdf_precision = 16;

  // Throws kConfig on any violated invariant.
  void Validate() const;

  // Channel widths of the ChARM slices; the remainder goes to the last slice.
  std::vector<int> SliceWidths() const;
  std::vector<int> SliceOffsets() const;

  // Flat "key = value" text; '#' starts a comment. Lists are comma separated.
  static CodecConfig Parse(const std::string& text);
  std::string Serialize() const;

  friend bool operator==(const CodecConfig&, const CodecConfig&) = default;
};

CodecConfig LoadConfig(const std::string& path);

}  // namespace ssb

#endif  // SSB_CONFIG_H_
