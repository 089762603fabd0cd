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

#include "ssb/nn.h"

#include <algorithm>
#include <cmath>

#include "ssb/error.h"

namespace ssb::nn {

namespace {

void RequireRank(const Tensor& t, int rank, const char* what) {
  if (t.rank() != rank) Fail(ErrorCode::kDimension, what);
}

// Transposes a rank-2 [rows, cols] tensor stored as a flat array.
std::vector<float> Transposed(const Tensor& w) {
  const int rows = w.dim(0), cols = w.dim(1);
  std::vector<float> t(w.size());
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) t[static_cast<size_t>(c) * rows + r] = w.at(r, c);
  }
  return t;
}

}  // namespace

Tensor MatMul(const Tensor& a, const Tensor& b) {
  RequireRank(a, 2, "matmul expects rank-2 lhs");
  RequireRank(b, 2, "matmul expects rank-2 rhs");
  if (a.dim(1) != b.dim(0)) Fail(ErrorCode::kDimension, "matmul inner extents differ");
  const int n = a.dim(0), k = a.dim(1), m = b.dim(1);
  Tensor out({n, m});
  // i-k-j order: each output element still accumulates over k in sequence.
  for (int i = 0; i < n; ++i) {
    float* o = out.data() + static_cast<size_t>(i) * m;
    for (int kk = 0; kk < k; ++kk) {
      const float av = a.at(i, kk);
      const float* br = b.data() + static_cast<size_t>(kk) * m;
      for (int j = 0; j < m; ++j) o[j] += av * br[j];
    }
  }
  SSB_DCHECK_FINITE(out);
  return out;
}

void SoftmaxInPlace(std::span<float> row) {
  if (row.empty()) return;
  float mx = row[0];
  for (float v : row) mx = std::max(mx, v);
  float sum = 0.0f;
  for (float& v : row) {
    v = std::exp(v - mx);
    sum += v;
  }
  const float inv = 1.0f / sum;
  for (float& v : row) v *= inv;
}

Tensor Softmax(const Tensor& v) {
  RequireRank(v, 2, "softmax expects rank-2 input");
  Tensor out = v;
  for (int r = 0; r < out.dim(0); ++r) SoftmaxInPlace(out.row(r));
  SSB_DCHECK_FINITE(out);
  return out;
}

Tensor LayerNorm(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps) {
  RequireRank(x, 2, "layer_norm expects [n, dim]");
  const int n = x.dim(0), d = x.dim(1);
  if (static_cast<int>(gamma.size()) != d || static_cast<int>(beta.size()) != d) {
    Fail(ErrorCode::kDimension, "layer_norm affine size mismatch");
  }
  Tensor out({n, d});
  for (int i = 0; i < n; ++i) {
    auto in = x.row(i);
    auto o = out.row(i);
    float mean = 0.0f;
    for (float v : in) mean += v;
    mean /= static_cast<float>(d);
    float var = 0.0f;
    for (float v : in) var += (v - mean) * (v - mean);
    var /= static_cast<float>(d);
    const float inv = 1.0f / std::sqrt(var + eps);
    for (int j = 0; j < d; ++j) o[j] = (in[j] - mean) * inv * gamma[j] + beta[j];
  }
  SSB_DCHECK_FINITE(out);
  return out;
}

float Gelu(float x) {
  constexpr float kSqrt2OverPi = 0.7978845608028654f;
  return 0.5f * x * (1.0f + std::tanh(kSqrt2OverPi * (x + 0.044715f * x * x * x)));
}

void GeluInPlace(Tensor& t) {
  for (float& v : t.values()) v = Gelu(v);
}

void ReluInPlace(Tensor& t) {
  for (float& v : t.values()) v = v > 0.0f ? v : 0.0f;
}

Tensor Linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  RequireRank(x, 2, "linear expects [n, in]");
  RequireRank(weight, 2, "linear weight expects [out, in]");
  const int n = x.dim(0), in = x.dim(1), out_dim = weight.dim(0);
  if (weight.dim(1) != in) Fail(ErrorCode::kDimension, "linear input width mismatch");
  if (static_cast<int>(bias.size()) != out_dim) Fail(ErrorCode::kDimension, "linear bias mismatch");
  const std::vector<float> wt = Transposed(weight);
  Tensor out({n, out_dim});
  for (int i = 0; i < n; ++i) {
    float* o = out.data() + static_cast<size_t>(i) * out_dim;
    const float* xr = x.data() + static_cast<size_t>(i) * in;
    for (int k = 0; k < in; ++k) {
      const float xv = xr[k];
      const float* wr = wt.data() + static_cast<size_t>(k) * out_dim;
      for (int j = 0; j < out_dim; ++j) o[j] += xv * wr[j];
    }
    for (int j = 0; j < out_dim; ++j) o[j] += bias[j];
  }
  SSB_DCHECK_FINITE(out);
  return out;
}

Tensor Conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, int stride,
              int pad) {
  RequireRank(x, 3, "conv2d expects [C, H, W]");
  RequireRank(weight, 4, "conv2d weight expects [Co, Ci, k, k]");
  const int ci_n = x.dim(0), h = x.dim(1), w = x.dim(2);
  const int co_n = weight.dim(0), k = weight.dim(2);
  if (weight.dim(1) != ci_n || weight.dim(3) != k) {
    Fail(ErrorCode::kDimension, "conv2d weight/input channel mismatch");
  }
  if (static_cast<int>(bias.size()) != co_n) Fail(ErrorCode::kDimension, "conv2d bias mismatch");
  if (stride < 1 || pad < 0) Fail(ErrorCode::kDimension, "conv2d bad stride/pad");
  const int oh = (h + 2 * pad - k) / stride + 1;
  const int ow = (w + 2 * pad - k) / stride + 1;
  if (oh < 1 || ow < 1) Fail(ErrorCode::kDimension, "conv2d output is empty");
  Tensor out({co_n, oh, ow});
  for (int co = 0; co < co_n; ++co) {
    for (int ci = 0; ci < ci_n; ++ci) {
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          const float wv = weight[((static_cast<size_t>(co) * ci_n + ci) * k + ky) * k + kx];
          for (int oy = 0; oy < oh; ++oy) {
            const int iy = oy * stride - pad + ky;
            if (iy < 0 || iy >= h) continue;
            for (int ox = 0; ox < ow; ++ox) {
              const int ix = ox * stride - pad + kx;
              if (ix < 0 || ix >= w) continue;
              out.at(co, oy, ox) += wv * x.at(ci, iy, ix);
            }
          }
        }
      }
    }
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) out.at(co, oy, ox) += bias[co];
    }
  }
  SSB_DCHECK_FINITE(out);
  return out;
}

Tensor Conv1x1(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  RequireRank(x, 3, "conv1x1 expects [C, H, W]");
  const int ci_n = x.dim(0);
  const int co_n = weight.dim(0);
  if (static_cast<int>(weight.size()) != co_n * ci_n) {
    Fail(ErrorCode::kDimension, "conv1x1 weight/input channel mismatch");
  }
  if (static_cast<int>(bias.size()) != co_n) Fail(ErrorCode::kDimension, "conv1x1 bias mismatch");
  const size_t plane = static_cast<size_t>(x.dim(1)) * x.dim(2);
  Tensor out({co_n, x.dim(1), x.dim(2)});
  for (int co = 0; co < co_n; ++co) {
    float* o = out.data() + co * plane;
    for (int ci = 0; ci < ci_n; ++ci) {
      const float wv = weight[static_cast<size_t>(co) * ci_n + ci];
      const float* xi = x.data() + ci * plane;
      for (size_t p = 0; p < plane; ++p) o[p] += wv * xi[p];
    }
    for (size_t p = 0; p < plane; ++p) o[p] += bias[co];
  }
  SSB_DCHECK_FINITE(out);
  return out;
}

Tensor ConvTranspose2d(const Tensor& x, const Tensor& weight, const Tensor& bias,
                       int stride, int pad, int output_pad) {
  RequireRank(x, 3, "conv_transpose2d expects [C, H, W]");
  RequireRank(weight, 4, "conv_transpose2d weight expects [Ci, Co, k, k]");
  const int ci_n = x.dim(0), h = x.dim(1), w = x.dim(2);
  const int co_n = weight.dim(1), k = weight.dim(2);
  if (weight.dim(0) != ci_n || weight.dim(3) != k) {
    Fail(ErrorCode::kDimension, "conv_transpose2d weight/input channel mismatch");
  }
  if (static_cast<int>(bias.size()) != co_n) {
    Fail(ErrorCode::kDimension, "conv_transpose2d bias mismatch");
  }
  const int oh = (h - 1) * stride - 2 * pad + k + output_pad;
  const int ow = (w - 1) * stride - 2 * pad + k + output_pad;
  if (oh < 1 || ow < 1) Fail(ErrorCode::kDimension, "conv_transpose2d output is empty");
  Tensor out({co_n, oh, ow});
  for (int co = 0; co < co_n; ++co) {
    for (int ci = 0; ci < ci_n; ++ci) {
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          const float wv = weight[((static_cast<size_t>(ci) * co_n + co) * k + ky) * k + kx];
          for (int iy = 0; iy < h; ++iy) {
            const int oy = iy * stride - pad + ky;
            if (oy < 0 || oy >= oh) continue;
            for (int ix = 0; ix < w; ++ix) {
              const int ox = ix * stride - pad + kx;
              if (ox < 0 || ox >= ow) continue;
              out.at(co, oy, ox) += wv * x.at(ci, iy, ix);
            }
          }
        }
      }
    }
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) out.at(co, oy, ox) += bias[co];
    }
  }
  SSB_DCHECK_FINITE(out);
  return out;
}

Tensor PixelUnshuffle(const Tensor& t, int r) {
  RequireRank(t, 3, "pixel_unshuffle expects [C, H, W]");
  const int c_n = t.dim(0), h = t.dim(1), w = t.dim(2);
  if (r < 1 || h % r != 0 || w % r != 0) {
    Fail(ErrorCode::kDimension, "pixel_unshuffle: H, W must be divisible by r");
  }
  const int oh = h / r, ow = w / r;
  Tensor out({c_n * r * r, oh, ow});
  for (int c = 0; c < c_n; ++c) {
    for (int dy = 0; dy < r; ++dy) {
      for (int dx = 0; dx < r; ++dx) {
        const int oc = (c * r + dy) * r + dx;
        for (int y = 0; y < oh; ++y) {
          for (int x = 0; x < ow; ++x) out.at(oc, y, x) = t.at(c, y * r + dy, x * r + dx);
        }
      }
    }
  }
  return out;
}

Tensor PixelShuffle(const Tensor& t, int r) {
  RequireRank(t, 3, "pixel_shuffle expects [C, H, W]");
  const int c_in = t.dim(0), h = t.dim(1), w = t.dim(2);
  if (r < 1 || c_in % (r * r) != 0) {
    Fail(ErrorCode::kDimension, "pixel_shuffle: channels must be divisible by r^2");
  }
  const int c_n = c_in / (r * r);
  Tensor out({c_n, h * r, w * r});
  for (int c = 0; c < c_n; ++c) {
    for (int dy = 0; dy < r; ++dy) {
      for (int dx = 0; dx < r; ++dx) {
        const int ic = (c * r + dy) * r + dx;
        for (int y = 0; y < h; ++y) {
          for (int x = 0; x < w; ++x) out.at(c, y * r + dy, x * r + dx) = t.at(ic, y, x);
        }
      }
    }
  }
  return out;
}

Tensor ToTokens(const Tensor& feat) {
  RequireRank(feat, 3, "to_tokens expects [C, H, W]");
  const int c_n = feat.dim(0);
  const int n = feat.dim(1) * feat.dim(2);
  Tensor out({n, c_n});
  for (int c = 0; c < c_n; ++c) {
    const float* src = feat.data() + static_cast<size_t>(c) * n;
    for (int p = 0; p < n; ++p) out[static_cast<size_t>(p) * c_n + c] = src[p];
  }
  return out;
}

Tensor FromTokens(const Tensor& tokens, int height, int width) {
  RequireRank(tokens, 2, "from_tokens expects [n, C]");
  const int n = tokens.dim(0), c_n = tokens.dim(1);
  if (n != height * width) Fail(ErrorCode::kDimension, "from_tokens token count mismatch");
  Tensor out({c_n, height, width});
  for (int c = 0; c < c_n; ++c) {
    float* dst = out.data() + static_cast<size_t>(c) * n;
    for (int p = 0; p < n; ++p) dst[p] = tokens[static_cast<size_t>(p) * c_n + c];
  }
  return out;
}

bool AttentionMask::IsValid() const {
  for (int q = 0; q < n_; ++q) {
    if (!allowed(q, q)) return false;
    for (int k = q + 1; k < n_; ++k) {
      if (allowed(q, k) != allowed(k, q)) return false;
    }
  }
  return true;
}

Tensor MaskedAttention(const Tensor& qkv, const AttentionMask& mask, int heads,
                       const Tensor* bias) {
  RequireRank(qkv, 2, "attention expects qkv [n, 3 * dim]");
  const int n = qkv.dim(0);
  if (qkv.dim(1) % 3 != 0) Fail(ErrorCode::kDimension, "qkv width not divisible by 3");
  const int dim = qkv.dim(1) / 3;
  if (heads < 1 || dim % heads != 0) Fail(ErrorCode::kDimension, "dim not divisible by heads");
  if (mask.size() != n) Fail(ErrorCode::kDimension, "attention mask size mismatch");
  if (bias && (bias->rank() != 3 || bias->dim(0) != heads || bias->dim(1) != n ||
               bias->dim(2) != n)) {
    Fail(ErrorCode::kDimension, "relative position bias shape mismatch");
  }
  const int dh = dim / heads;
  const float scale = 1.0f / std::sqrt(static_cast<float>(dh));
  Tensor out({n, dim});
  std::vector<float> logits(n);
  for (int h = 0; h < heads; ++h) {
    const int qo = h * dh, ko = dim + h * dh, vo = 2 * dim + h * dh;
    for (int i = 0; i < n; ++i) {
      const float* q = qkv.data() + static_cast<size_t>(i) * 3 * dim + qo;
      for (int j = 0; j < n; ++j) {
        const float* k = qkv.data() + static_cast<size_t>(j) * 3 * dim + ko;
        float dot = 0.0f;
        for (int d = 0; d < dh; ++d) dot += q[d] * k[d];
        float logit = dot * scale;
        if (bias) logit += (*bias)[(static_cast<size_t>(h) * n + i) * n + j];
        if (!mask.allowed(i, j)) logit += kMaskedLogit;
        logits[j] = logit;
      }
      SoftmaxInPlace(logits);
      float* o = out.data() + static_cast<size_t>(i) * dim + qo;
      for (int j = 0; j < n; ++j) {
        const float a = logits[j];
        const float* v = qkv.data() + static_cast<size_t>(j) * 3 * dim + vo;
        for (int d = 0; d < dh; ++d) o[d] += a * v[d];
      }
    }
  }
  SSB_DCHECK_FINITE(out);
  return out;
}

Tensor MaskedMhsa(const Tensor& x, const AttentionMask& mask, const AttentionParams& params,
                  int heads, const Tensor* bias) {
  RequireRank(x, 2, "mhsa expects [n, dim]");
  const int dim = x.dim(1);
  if (params.qkv_weight.rank() != 2 || params.qkv_weight.dim(0) != 3 * dim) {
    Fail(ErrorCode::kDimension, "mhsa qkv weight shape mismatch");
  }
  const Tensor qkv = Linear(x, params.qkv_weight, params.qkv_bias);
  const Tensor att = MaskedAttention(qkv, mask, heads, bias);
  return Linear(att, params.proj_weight, params.proj_bias);
}

}  // namespace ssb::nn
