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

#include "ssb/transform.h"

#include <algorithm>

#include "ssb/error.h"

namespace ssb {

namespace {

std::string Idx(const char* base, int i) { return base + std::to_string(i); }

int ShiftForBlock(int block_index, int window) {
  return (block_index % 2 == 1) ? window / 2 : 0;
}

// Pre-shift sub-window region along one axis, in shifted coordinates.
int AxisRegion(int pos, int padded, int window, int shift) {
  if (shift == 0) return 0;
  if (pos < padded - window) return 0;
  if (pos < padded - shift) return 1;
  return 2;
}

Tensor PadBottomRight(const Tensor& y, int h, int w) {
  Tensor out({y.dim(0), h, w});
  for (int c = 0; c < y.dim(0); ++c) {
    for (int r = 0; r < y.dim(1); ++r) {
      for (int x = 0; x < y.dim(2); ++x) out.at(c, r, x) = y.at(c, r, x);
    }
  }
  return out;
}

}  // namespace

WindowPartition GiWindowPartition(int height, int width, const IdGrid& ids, int window,
                                  int shift, AttentionMode mode) {
  if (window < 1 || shift < 0 || shift >= window) {
    Fail(ErrorCode::kDimension, "window partition: need 0 <= shift < window");
  }
  if (mode == AttentionMode::kGroupIndependent && (ids.height != height || ids.width != width)) {
    Fail(ErrorCode::kDimension, "window partition: group grid does not match feature map");
  }
  WindowPartition p;
  p.height = height;
  p.width = width;
  p.window = window;
  p.shift = shift;
  p.padded_h = (height + window - 1) / window * window;
  p.padded_w = (width + window - 1) / window * window;
  const int n = window * window;
  std::vector<int32_t> label(n);
  std::vector<int> region(n);
  for (int wr = 0; wr < p.padded_h / window; ++wr) {
    for (int wc = 0; wc < p.padded_w / window; ++wc) {
      std::vector<int> toks(n);
      for (int i = 0; i < window; ++i) {
        for (int j = 0; j < window; ++j) {
          const int k = i * window + j;
          const int sr = wr * window + i, sc = wc * window + j;  // shifted coords
          const int r = (sr + shift) % p.padded_h, c = (sc + shift) % p.padded_w;
          const bool real = r < height && c < width;
          toks[k] = real ? r * width + c : -1;
          if (!real) {
            label[k] = kSentinelGroup;
          } else {
            label[k] = mode == AttentionMode::kGroupIndependent ? ids.at(r, c) : 0;
          }
          region[k] = AxisRegion(sr, p.padded_h, window, shift) * 3 +
                      AxisRegion(sc, p.padded_w, window, shift);
        }
      }
      nn::AttentionMask mask(n, false);
      for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
          const bool allow = a == b || (label[a] != kSentinelGroup && label[a] == label[b] &&
                                        region[a] == region[b]);
          mask.set(a, b, allow);
        }
      }
      p.tokens.push_back(std::move(toks));
      p.masks.push_back(std::move(mask));
    }
  }
  return p;
}

Tensor GatherWindow(const Tensor& tokens, const WindowPartition& part, size_t window_index) {
  const auto& toks = part.tokens.at(window_index);
  const int c = tokens.dim(1);
  Tensor out({static_cast<int>(toks.size()), c});
  for (size_t k = 0; k < toks.size(); ++k) {
    if (toks[k] < 0) continue;
    std::copy_n(tokens.row(toks[k]).data(), c, out.row(static_cast<int>(k)).data());
  }
  return out;
}

Tensor RelativePositionBias(const Tensor& table, int window, int heads) {
  const int side = 2 * window - 1;
  if (table.rank() != 2 || table.dim(0) != side * side || table.dim(1) != heads) {
    Fail(ErrorCode::kDimension, "relative position table shape mismatch");
  }
  const int n = window * window;
  Tensor bias({heads, n, n});
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      const int dr = a / window - b / window + window - 1;
      const int dc = a % window - b % window + window - 1;
      const int idx = dr * side + dc;
      for (int h = 0; h < heads; ++h) bias.at(h, a, b) = table.at(idx, h);
    }
  }
  return bias;
}

Tensor GiSwinBlock(const Tensor& feat, const IdGrid& ids, const BlockRef& block, int window,
                   int shift, AttentionMode mode) {
  const ModelWeights& w = block.weights;
  const std::string& p = block.prefix;
  const int height = feat.dim(1), width = feat.dim(2);
  const WindowPartition part = GiWindowPartition(height, width, ids, window, shift, mode);
  const Tensor bias = RelativePositionBias(w.Get(p + "attn.rel_pos"), window, block.heads);

  const Tensor x = nn::ToTokens(feat);
  const int c = x.dim(1);
  const Tensor normed = nn::LayerNorm(x, w.Get(p + "norm1.weight"), w.Get(p + "norm1.bias"));
  const Tensor qkv = nn::Linear(normed, w.Get(p + "attn.qkv.weight"), w.Get(p + "attn.qkv.bias"));

  Tensor attended({x.dim(0), c});
  for (size_t win = 0; win < part.tokens.size(); ++win) {
    const Tensor local = GatherWindow(qkv, part, win);
    const Tensor out = nn::MaskedAttention(local, part.masks[win], block.heads, &bias);
    const auto& toks = part.tokens[win];
    for (size_t k = 0; k < toks.size(); ++k) {
      if (toks[k] < 0) continue;
      std::copy_n(out.row(static_cast<int>(k)).data(), c, attended.row(toks[k]).data());
    }
  }
  const Tensor proj =
      nn::Linear(attended, w.Get(p + "attn.proj.weight"), w.Get(p + "attn.proj.bias"));
  Tensor x1 = x;
  for (size_t i = 0; i < x1.size(); ++i) x1[i] += proj[i];

  const Tensor normed2 = nn::LayerNorm(x1, w.Get(p + "norm2.weight"), w.Get(p + "norm2.bias"));
  Tensor hidden = nn::Linear(normed2, w.Get(p + "mlp.fc1.weight"), w.Get(p + "mlp.fc1.bias"));
  nn::GeluInPlace(hidden);
  const Tensor mlp = nn::Linear(hidden, w.Get(p + "mlp.fc2.weight"), w.Get(p + "mlp.fc2.bias"));
  for (size_t i = 0; i < x1.size(); ++i) x1[i] += mlp[i];
  return nn::FromTokens(x1, height, width);
}

Tensor AnalysisTransform(const Tensor& x, const GroupMask& mask, const ModelWeights& weights,
                         const CodecConfig& cfg, AttentionMode mode) {
  if (x.rank() != 3 || x.dim(0) != 3 || x.dim(1) != mask.padded_h() ||
      x.dim(2) != mask.padded_w()) {
    Fail(ErrorCode::kDimension, "analysis input must be [3, padded_h, padded_w]");
  }
  if (mask.block_size() % kTotalStride != 0) {
    Fail(ErrorCode::kCompatibility, "mask block size is not a multiple of the model stride");
  }
  Tensor f = x;
  for (int s = 0; s < kNumStages; ++s) {
    f = nn::PixelUnshuffle(f, 2);
    f = nn::Conv1x1(f, weights.Get(Idx("g_a.down", s) + ".weight"),
                    weights.Get(Idx("g_a.down", s) + ".bias"));
    const IdGrid ids = Downsample(mask, 2 << s);
    for (int b = 0; b < cfg.depths[s]; ++b) {
      const BlockRef ref{weights, Idx("g_a.stage", s) + Idx(".block", b) + ".", cfg.heads[s]};
      f = GiSwinBlock(f, ids, ref, cfg.window, ShiftForBlock(b, cfg.window), mode);
    }
  }
  return nn::Conv1x1(f, weights.Get("g_a.out.weight"), weights.Get("g_a.out.bias"));
}

Tensor SynthesisRaw(const Tensor& y_hat, const GroupMask& mask, const ModelWeights& weights,
                    const CodecConfig& cfg, AttentionMode mode) {
  if (y_hat.rank() != 3 || y_hat.dim(0) != cfg.latent_channels ||
      y_hat.dim(1) * kTotalStride != mask.padded_h() ||
      y_hat.dim(2) * kTotalStride != mask.padded_w()) {
    Fail(ErrorCode::kDimension, "synthesis input does not match mask and config");
  }
  Tensor f = nn::Conv1x1(y_hat, weights.Get("g_s.in.weight"), weights.Get("g_s.in.bias"));
  for (int s = kNumStages - 1; s >= 0; --s) {
    const IdGrid ids = Downsample(mask, 2 << s);
    for (int b = 0; b < cfg.depths[s]; ++b) {
      const BlockRef ref{weights, Idx("g_s.stage", s) + Idx(".block", b) + ".", cfg.heads[s]};
      f = GiSwinBlock(f, ids, ref, cfg.window, ShiftForBlock(b, cfg.window), mode);
    }
    f = nn::Conv1x1(f, weights.Get(Idx("g_s.up", s) + ".weight"),
                    weights.Get(Idx("g_s.up", s) + ".bias"));
    f = nn::PixelShuffle(f, 2);
  }
  return f;
}

Tensor SynthesisTransform(const Tensor& y_hat, const GroupMask& mask,
                          const ModelWeights& weights, const CodecConfig& cfg,
                          AttentionMode mode) {
  const Tensor raw = SynthesisRaw(y_hat, mask, weights, cfg, mode);
  Tensor out({3, mask.image_h(), mask.image_w()});
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < mask.image_h(); ++y) {
      for (int x = 0; x < mask.image_w(); ++x) {
        out.at(c, y, x) = std::clamp(raw.at(c, y, x), 0.0f, 1.0f);
      }
    }
  }
  return out;
}

Tensor HyperAnalysis(const Tensor& y, const ModelWeights& weights, const CodecConfig& cfg) {
  if (y.rank() != 3 || y.dim(0) != cfg.latent_channels) {
    Fail(ErrorCode::kDimension, "hyper analysis input channel mismatch");
  }
  const int h = (y.dim(1) + kHyperStride - 1) / kHyperStride * kHyperStride;
  const int w = (y.dim(2) + kHyperStride - 1) / kHyperStride * kHyperStride;
  Tensor f = PadBottomRight(y, h, w);
  f = nn::Conv2d(f, weights.Get("h_a.conv0.weight"), weights.Get("h_a.conv0.bias"), 2, 1);
  nn::ReluInPlace(f);
  return nn::Conv2d(f, weights.Get("h_a.conv1.weight"), weights.Get("h_a.conv1.bias"), 2, 1);
}

Tensor HyperSynthesis(const Tensor& z_hat, int latent_h, int latent_w,
                      const ModelWeights& weights, const CodecConfig& cfg) {
  if (z_hat.rank() != 3 || z_hat.dim(0) != cfg.hyper_channels ||
      z_hat.dim(1) * kHyperStride < latent_h || z_hat.dim(2) * kHyperStride < latent_w) {
    Fail(ErrorCode::kDimension, "hyper synthesis input shape mismatch");
  }
  Tensor f = nn::ConvTranspose2d(z_hat, weights.Get("h_s.deconv0.weight"),
                                 weights.Get("h_s.deconv0.bias"), 2, 1);
  nn::ReluInPlace(f);
  f = nn::ConvTranspose2d(f, weights.Get("h_s.deconv1.weight"), weights.Get("h_s.deconv1.bias"),
                          2, 1);
  if (f.dim(1) == latent_h && f.dim(2) == latent_w) return f;
  Tensor out({f.dim(0), latent_h, latent_w});
  for (int c = 0; c < f.dim(0); ++c) {
    for (int y = 0; y < latent_h; ++y) {
      for (int x = 0; x < latent_w; ++x) out.at(c, y, x) = f.at(c, y, x);
    }
  }
  return out;
}

Tensor PadToMask(const Tensor& image, const GroupMask& mask) {
  if (image.rank() != 3 || image.dim(1) != mask.image_h() || image.dim(2) != mask.image_w()) {
    Fail(ErrorCode::kDimension, "image extent does not match the mask");
  }
  Tensor out({image.dim(0), mask.padded_h(), mask.padded_w()});
  for (int c = 0; c < image.dim(0); ++c) {
    for (int y = 0; y < mask.padded_h(); ++y) {
      const int sy = std::min(y, mask.image_h() - 1);
      for (int x = 0; x < mask.padded_w(); ++x) {
        out.at(c, y, x) = image.at(c, sy, std::min(x, mask.image_w() - 1));
      }
    }
  }
  return out;
}

}  // namespace ssb
