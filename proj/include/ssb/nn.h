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

// Deterministic numeric primitives. Every reduction accumulates sequentially
// in index order so results are reproducible bit-for-bit and independent of
// values outside the reduction.

#ifndef SSB_NN_H_
#define SSB_NN_H_

#include <cstdint>
#include <span>
#include <vector>

#include "ssb/tensor.h"

namespace ssb::nn {

// Added to the attention logits of disallowed query/key pairs.
inline constexpr float kMaskedLogit = -1e9f;

Tensor MatMul(const Tensor& a, const Tensor& b);

// Row-wise softmax over the last axis of a rank-2 tensor.
Tensor Softmax(const Tensor& v);
void SoftmaxInPlace(std::span<float> row);

// Normalizes each row of x [n, dim] over dim.
Tensor LayerNorm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                 float eps = 1e-5f);

// tanh approximation.
float Gelu(float x);
void GeluInPlace(Tensor& t);
void ReluInPlace(Tensor& t);

// y = x W^T + b with x [n, in], W [out, in], b [out].
Tensor Linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

// x [C, H, W]; weight [Co, Ci, k, k]; zero padding.
Tensor Conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias,
              int stride, int pad);
// 1x1 convolution; same result as Conv2d(x, w, b, 1, 0) with w [Co, Ci, 1, 1].
Tensor Conv1x1(const Tensor& x, const Tensor& weight, const Tensor& bias);
// weight [Ci, Co, k, k]. Output extent (in - 1) * stride - 2 * pad + k + output_pad.
Tensor ConvTranspose2d(const Tensor& x, const Tensor& weight, const Tensor& bias,
                       int stride, int pad, int output_pad = 0);

// [C, H, W] -> [C * r * r, H / r, W / r]; channel c * r * r + dy * r + dx holds
// pixel (y * r + dy, x * r + dx) of input channel c.
Tensor PixelUnshuffle(const Tensor& t, int r);
Tensor PixelShuffle(const Tensor& t, int r);

// [C, H, W] <-> [H * W, C] token layout.
Tensor ToTokens(const Tensor& feat);
Tensor FromTokens(const Tensor& tokens, int height, int width);

// Square boolean allow-matrix for one attention window (true: query may
// attend key). Realized additively as 0 / kMaskedLogit.
class AttentionMask {
 public:
  AttentionMask() = default;
  explicit AttentionMask(int n, bool fill = true)
      : n_(n), allow_(static_cast<size_t>(n) * n, fill ? 1 : 0) {}

  int size() const { return n_; }
  bool allowed(int q, int k) const { return allow_[static_cast<size_t>(q) * n_ + k] != 0; }
  void set(int q, int k, bool v) { allow_[static_cast<size_t>(q) * n_ + k] = v ? 1 : 0; }

  // Diagonal all-true and symmetric.
  bool IsValid() const;

  friend bool operator==(const AttentionMask&, const AttentionMask&) = default;

 private:
  int n_ = 0;
  std::vector<uint8_t> allow_;
};

struct AttentionParams {
  const Tensor& qkv_weight;   // [3 * dim, dim]; rows ordered q, k, v
  const Tensor& qkv_bias;     // [3 * dim]
  const Tensor& proj_weight;  // [dim, dim]
  const Tensor& proj_bias;    // [dim]
};

// Attention core on precomputed projections. qkv [n, 3 * dim]; bias is an
// optional additive [heads, n, n] logit bias. Returns per-head outputs
// concatenated, [n, dim], before the output projection.
Tensor MaskedAttention(const Tensor& qkv, const AttentionMask& mask, int heads,
                       const Tensor* bias);

// softmax(Q K^T / sqrt(d_head) + bias + mask) V per head, then projection.
Tensor MaskedMhsa(const Tensor& x, const AttentionMask& mask,
                  const AttentionParams& params, int heads,
                  const Tensor* bias = nullptr);

}  // namespace ssb::nn

#endif  // SSB_NN_H_
