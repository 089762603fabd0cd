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

// Group-independent analysis/synthesis transforms and the hyper transforms.
//
// Within a stage every layer except attention is position-wise (1x1 convs,
// layer norm, MLP), and each feature cell lies inside a single mask block
// because the block size is a multiple of the total stride. Restricting
// attention to same-group tokens therefore makes every output cell a function
// of its own group's inputs only.

#ifndef SSB_TRANSFORM_H_
#define SSB_TRANSFORM_H_

#include <cstdint>
#include <string>
#include <vector>

#include "ssb/config.h"
#include "ssb/group_mask.h"
#include "ssb/nn.h"
#include "ssb/tensor.h"
#include "ssb/weights.h"

namespace ssb {

enum class AttentionMode {
  kGroupIndependent,  // windows split by group id
  kPlain,             // ablation: ordinary (shifted) window attention
};

// Label of tokens introduced by padding the feature map to window multiples.
inline constexpr int32_t kSentinelGroup = -1;

// Window layout of a feature map after padding to window multiples and a
// cyclic shift by (-shift, -shift).
struct WindowPartition {
  int height = 0, width = 0;              // feature extent
  int padded_h = 0, padded_w = 0;         // multiples of window
  int window = 0, shift = 0;
  // Per window, row-major token positions as flat indices y * width + x into
  // the unpadded feature map, or -1 for a padding token. This is also the
  // inverse layout: scattering window rows back through it undoes the shift.
  std::vector<std::vector<int>> tokens;
  std::vector<nn::AttentionMask> masks;
};

// ids: group ids at feature resolution (must match height x width); ignored
// in kPlain mode. allow(p, q) holds iff p == q, or both tokens are real, share
// a group id, and lie in the same pre-shift sub-window region.
WindowPartition GiWindowPartition(int height, int width, const IdGrid& ids, int window,
                                  int shift, AttentionMode mode);

// Rows of tokens [H * W, C] gathered for one window, zero rows for padding.
Tensor GatherWindow(const Tensor& tokens, const WindowPartition& part, size_t window_index);

// [heads, w*w, w*w] additive bias from a learned [(2w-1)^2, heads] table.
Tensor RelativePositionBias(const Tensor& table, int window, int heads);

struct BlockRef {
  const ModelWeights& weights;
  std::string prefix;  // e.g. "g_a.stage0.block1."
  int heads;
};

// Pre-norm residual block: x + MHSA(LN(x)) under the partition's masks, then
// x + MLP(LN(x)). feat [C, H, W].
Tensor GiSwinBlock(const Tensor& feat, const IdGrid& ids, const BlockRef& block, int window,
                   int shift, AttentionMode mode);

// x [3, padded_h, padded_w] in [0, 1] -> y [M, padded_h / 16, padded_w / 16].
Tensor AnalysisTransform(const Tensor& x, const GroupMask& mask, const ModelWeights& weights,
                         const CodecConfig& cfg,
                         AttentionMode mode = AttentionMode::kGroupIndependent);

// Unclamped synthesis output at padded resolution [3, padded_h, padded_w].
Tensor SynthesisRaw(const Tensor& y_hat, const GroupMask& mask, const ModelWeights& weights,
                    const CodecConfig& cfg,
                    AttentionMode mode = AttentionMode::kGroupIndependent);
// Reconstruction clamped to [0, 1] and cropped to [3, image_h, image_w].
Tensor SynthesisTransform(const Tensor& y_hat, const GroupMask& mask,
                          const ModelWeights& weights, const CodecConfig& cfg,
                          AttentionMode mode = AttentionMode::kGroupIndependent);

// y [M, h, w] -> z [hyper, ceil(h / 4), ceil(w / 4)]. y is zero-padded to a
// multiple of 4 first; the hyper path is shared by all groups.
Tensor HyperAnalysis(const Tensor& y, const ModelWeights& weights, const CodecConfig& cfg);
// z_hat -> [2M, h, w] hyper features (cropped to the latent extent).
Tensor HyperSynthesis(const Tensor& z_hat, int latent_h, int latent_w,
                      const ModelWeights& weights, const CodecConfig& cfg);

// Edge-replicating pad of an image tensor [3, H, W] to the mask's padded size.
Tensor PadToMask(const Tensor& image, const GroupMask& mask);

}  // namespace ssb

#endif  // SSB_TRANSFORM_H_
