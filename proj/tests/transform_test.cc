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

#include <cmath>
#include <cstring>
#include <set>
#include <vector>

#include "doctest.h"
#include "ssb/entropy_model.h"
#include "ssb/error.h"
#include "ssb/nn.h"
#include "ssb/transform.h"
#include "ssb/weights.h"
#include "test_util.h"

namespace {

using ssb::AttentionMode;
using ssb::IdGrid;
using ssb::Tensor;
using ssb::testing::RandomTensor;

IdGrid RandomIds(int h, int w, int groups, ssb::SplitMix64& rng) {
  IdGrid g(h, w);
  for (auto& id : g.ids) id = static_cast<uint16_t>(rng.Below(groups));
  return g;
}

// Position of real token (y, x) after the cyclic shift, and its pre-shift
// sub-window region.
struct Placement {
  int window_row, window_col, in_row, in_col, region;
};

Placement Place(int y, int x, int padded_h, int padded_w, int window, int shift) {
  const int sy = (y - shift + padded_h) % padded_h, sx = (x - shift + padded_w) % padded_w;
  auto region = [&](int s, int padded) {
    if (shift == 0) return 0;
    return s < padded - window ? 0 : (s < padded - shift ? 1 : 2);
  };
  return {sy / window, sx / window, sy % window, sx % window,
          region(sy, padded_h) * 3 + region(sx, padded_w)};
}

// Double-precision shifted-window block written from the per-token view.
Tensor ReferenceBlock(const Tensor& feat, const IdGrid& ids, const ssb::ModelWeights& w,
                      const std::string& p, int heads, int window, int shift, bool grouped) {
  const int c = feat.dim(0), h = feat.dim(1), wd = feat.dim(2), n = h * wd;
  const int ph = (h + window - 1) / window * window, pw = (wd + window - 1) / window * window;
  auto layer_norm = [&](const std::vector<std::vector<double>>& x, const Tensor& g, const Tensor& b) {
    std::vector<std::vector<double>> out = x;
    for (auto& row : out) {
      double mean = 0.0, var = 0.0;
      for (double v : row) mean += v;
      mean /= c;
      for (double v : row) var += (v - mean) * (v - mean);
      var /= c;
      for (int i = 0; i < c; ++i) row[i] = (row[i] - mean) / std::sqrt(var + 1e-5) * g[i] + b[i];
    }
    return out;
  };
  auto linear = [&](const std::vector<double>& x, const Tensor& wt, const Tensor& b) {
    std::vector<double> out(wt.dim(0));
    for (int o = 0; o < wt.dim(0); ++o) {
      double s = b[o];
      for (int i = 0; i < wt.dim(1); ++i) s += wt.at(o, i) * x[i];
      out[o] = s;
    }
    return out;
  };
  std::vector<std::vector<double>> x(n, std::vector<double>(c));
  for (int t = 0; t < n; ++t) {
    for (int i = 0; i < c; ++i) x[t][i] = feat[static_cast<size_t>(i) * n + t];
  }
  const auto normed = layer_norm(x, w.Get(p + "norm1.weight"), w.Get(p + "norm1.bias"));
  std::vector<std::vector<double>> qkv(n);
  for (int t = 0; t < n; ++t) {
    qkv[t] = linear(normed[t], w.Get(p + "attn.qkv.weight"), w.Get(p + "attn.qkv.bias"));
  }
  std::vector<Placement> place(n);
  for (int t = 0; t < n; ++t) place[t] = Place(t / wd, t % wd, ph, pw, window, shift);
  const Tensor& table = w.Get(p + "attn.rel_pos");
  const int dh = c / heads, side = 2 * window - 1;
  std::vector<std::vector<double>> attended(n, std::vector<double>(c, 0.0));
  for (int q = 0; q < n; ++q) {
    std::vector<int> keys;
    for (int k = 0; k < n; ++k) {
      const Placement &a = place[q], &b = place[k];
      if (a.window_row != b.window_row || a.window_col != b.window_col || a.region != b.region) {
        continue;
      }
      if (grouped && ids.ids[q] != ids.ids[k]) continue;
      keys.push_back(k);
    }
    for (int hd = 0; hd < heads; ++hd) {
      std::vector<double> logits;
      for (int k : keys) {
        double s = 0.0;
        for (int d = 0; d < dh; ++d) s += qkv[q][hd * dh + d] * qkv[k][c + hd * dh + d];
        const int rel = (place[q].in_row - place[k].in_row + window - 1) * side +
                        (place[q].in_col - place[k].in_col + window - 1);
        logits.push_back(s / std::sqrt(static_cast<double>(dh)) + table.at(rel, hd));
      }
      double mx = logits[0], z = 0.0;
      for (double l : logits) mx = std::fmax(mx, l);
      for (double& l : logits) z += (l = std::exp(l - mx));
      for (size_t i = 0; i < keys.size(); ++i) {
        for (int d = 0; d < dh; ++d) {
          attended[q][hd * dh + d] += logits[i] / z * qkv[keys[i]][2 * c + hd * dh + d];
        }
      }
    }
  }
  for (int t = 0; t < n; ++t) {
    const auto proj = linear(attended[t], w.Get(p + "attn.proj.weight"), w.Get(p + "attn.proj.bias"));
    for (int i = 0; i < c; ++i) x[t][i] += proj[i];
  }
  const auto normed2 = layer_norm(x, w.Get(p + "norm2.weight"), w.Get(p + "norm2.bias"));
  for (int t = 0; t < n; ++t) {
    auto hidden = linear(normed2[t], w.Get(p + "mlp.fc1.weight"), w.Get(p + "mlp.fc1.bias"));
    for (double& v : hidden) {
      v = 0.5 * v * (1.0 + std::tanh(std::sqrt(2.0 / M_PI) * (v + 0.044715 * v * v * v)));
    }
    const auto mlp = linear(hidden, w.Get(p + "mlp.fc2.weight"), w.Get(p + "mlp.fc2.bias"));
    for (int i = 0; i < c; ++i) x[t][i] += mlp[i];
  }
  Tensor out({c, h, wd});
  for (int t = 0; t < n; ++t) {
    for (int i = 0; i < c; ++i) out[static_cast<size_t>(i) * n + t] = static_cast<float>(x[t][i]);
  }
  return out;
}

// Every pixel outside group g replaced by noise.
Tensor PerturbOutside(const Tensor& x, const ssb::GroupMask& mask, uint16_t g, uint64_t seed) {
  ssb::SplitMix64 rng(seed);
  Tensor out = x;
  for (int c = 0; c < x.dim(0); ++c) {
    for (int y = 0; y < x.dim(1); ++y) {
      for (int xx = 0; xx < x.dim(2); ++xx) {
        if (mask.PixelId(y, xx) != g) out.at(c, y, xx) = static_cast<float>(rng.NextDouble());
      }
    }
  }
  return out;
}

bool SameAtGroup(const Tensor& a, const Tensor& b, const IdGrid& cells, uint16_t g) {
  const size_t plane = cells.cells();
  for (int c = 0; c < a.dim(0); ++c) {
    for (size_t i = 0; i < plane; ++i) {
      if (cells.ids[i] != g) continue;
      if (std::memcmp(a.data() + c * plane + i, b.data() + c * plane + i, sizeof(float)) != 0) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("window partition matches the pairwise label oracle") {
  ssb::SplitMix64 rng(8);
  for (int trial = 0; trial < 40; ++trial) {
    const int window = trial % 2 ? 4 : 3;
    const int shift = static_cast<int>(rng.Below(2)) * (window / 2);
    const int h = 1 + static_cast<int>(rng.Below(11)), w = 1 + static_cast<int>(rng.Below(11));
    const IdGrid ids = RandomIds(h, w, 3, rng);
    const auto mode = trial % 3 == 0 ? AttentionMode::kPlain : AttentionMode::kGroupIndependent;
    const auto part = ssb::GiWindowPartition(h, w, ids, window, shift, mode);
    CHECK(part.padded_h % window == 0);
    CHECK(part.padded_w % window == 0);
    std::vector<int> seen(h * w, 0);
    for (size_t win = 0; win < part.tokens.size(); ++win) {
      const auto& toks = part.tokens[win];
      const auto& mask = part.masks[win];
      REQUIRE(mask.IsValid());
      for (int t : toks) {
        if (t >= 0) ++seen[t];
      }
      for (int a = 0; a < window * window; ++a) {
        for (int b = 0; b < window * window; ++b) {
          bool expect = a == b;
          if (!expect && toks[a] >= 0 && toks[b] >= 0) {
            const Placement pa = Place(toks[a] / w, toks[a] % w, part.padded_h, part.padded_w,
                                       window, shift);
            const Placement pb = Place(toks[b] / w, toks[b] % w, part.padded_h, part.padded_w,
                                       window, shift);
            CHECK(pa.window_row == pb.window_row);
            CHECK(pa.window_col == pb.window_col);
            expect = pa.region == pb.region &&
                     (mode == AttentionMode::kPlain || ids.ids[toks[a]] == ids.ids[toks[b]]);
          }
          REQUIRE(mask.allowed(a, b) == expect);
        }
      }
    }
    for (int s : seen) CHECK(s == 1);
  }
}

TEST_CASE("relative position bias indexing") {
  Tensor table({9, 1});
  for (int i = 0; i < 9; ++i) table[i] = static_cast<float>(i);
  const Tensor b = ssb::RelativePositionBias(table, 2, 1);
  CHECK(b.at(0, 0, 0) == 4.0f);  // zero offset is the table centre
  CHECK(b.at(0, 0, 3) == 0.0f);  // query (0,0), key (1,1)
  CHECK(b.at(0, 3, 0) == 8.0f);
  CHECK(b.at(0, 1, 2) == 2.0f);  // query (0,1), key (1,0)
}

TEST_CASE("swin block matches the per-token reference") {
  auto cfg = ssb::testing::TinyConfig();
  const auto weights = ssb::ModelWeights::Random(cfg, 3);
  ssb::ModelWeights tweaked = weights;
  ssb::SplitMix64 rng(19);
  // Non-trivial norms and relative bias so every term is exercised.
  const std::string p = "g_a.stage2.block1.";
  for (const char* name : {"norm1.weight", "norm1.bias", "norm2.weight", "norm2.bias",
                           "attn.rel_pos", "attn.qkv.bias", "mlp.fc1.bias"}) {
    ssb::Tensor& t = tweaked.Mutable(p + name);
    t = RandomTensor(t.shape(), rng, -1.0f, 1.0f);
  }
  for (int trial = 0; trial < 8; ++trial) {
    const int h = 3 + static_cast<int>(rng.Below(7)), w = 3 + static_cast<int>(rng.Below(7));
    const IdGrid ids = RandomIds(h, w, 3, rng);
    const Tensor feat = RandomTensor({12, h, w}, rng, -2.0f, 2.0f);
    for (int shift : {0, 2}) {
      for (bool grouped : {false, true}) {
        const auto mode = grouped ? AttentionMode::kGroupIndependent : AttentionMode::kPlain;
        const Tensor got = ssb::GiSwinBlock(feat, ids, {tweaked, p, 2}, 4, shift, mode);
        const Tensor ref = ReferenceBlock(feat, ids, tweaked, p, 2, 4, shift, grouped);
        for (size_t i = 0; i < got.size(); ++i) REQUIRE(std::fabs(got[i] - ref[i]) <= 1e-4);
      }
    }
  }
}

TEST_CASE("transform shapes") {
  const ssb::CodecConfig cfg;
  const auto weights = ssb::ModelWeights::Random(cfg, 1);
  const auto mask = ssb::GroupMask::Uniform(128, 128, 32);
  const Tensor y = ssb::AnalysisTransform(ssb::testing::RandomImage(128, 128, 1), mask, weights, cfg);
  CHECK(y.shape() == std::vector<int>{32, 8, 8});
  CHECK(y.AllFinite());
  const Tensor z = ssb::HyperAnalysis(y, weights, cfg);
  CHECK(z.shape() == std::vector<int>{48, 2, 2});
  CHECK(ssb::HyperSynthesis(z, 8, 8, weights, cfg).shape() == std::vector<int>{64, 8, 8});
  const Tensor x_hat = ssb::SynthesisTransform(ssb::Quantize(y).ToTensor(), mask, weights, cfg);
  CHECK(x_hat.shape() == std::vector<int>{3, 128, 128});

  // Latent extents that are not multiples of the hyper stride.
  const auto odd = ssb::GroupMask::Uniform(70, 40, 16);
  const Tensor y2 =
      ssb::AnalysisTransform(ssb::PadToMask(ssb::testing::RandomImage(70, 40, 2), odd), odd, weights, cfg);
  CHECK(y2.shape() == std::vector<int>{32, 5, 3});
  const Tensor z2 = ssb::HyperAnalysis(y2, weights, cfg);
  CHECK(z2.shape() == std::vector<int>{48, 2, 1});
  CHECK(ssb::HyperSynthesis(z2, 5, 3, weights, cfg).shape() == std::vector<int>{64, 5, 3});
  const Tensor x2 = ssb::SynthesisTransform(ssb::Quantize(y2).ToTensor(), odd, weights, cfg);
  CHECK(x2.shape() == std::vector<int>{3, 70, 40});
  for (float v : x2.values()) CHECK((v >= 0.0f && v <= 1.0f));
  CHECK_THROWS_AS(ssb::AnalysisTransform(Tensor({3, 64, 64}), odd, weights, cfg), ssb::Error);
}

TEST_CASE("synthesis of zero latents under zero weights is the output bias pattern") {
  const auto cfg = ssb::testing::TinyConfig();
  auto weights = ssb::ModelWeights::Zeros(cfg);
  ssb::SplitMix64 rng(6);
  Tensor& bias = weights.Mutable("g_s.up0.bias");
  bias = RandomTensor(bias.shape(), rng, 0.0f, 1.0f);
  const auto mask = ssb::GroupMask::Uniform(40, 36, 16);
  const Tensor out = ssb::SynthesisTransform(Tensor({8, 3, 3}), mask, weights, cfg);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < 40; ++y) {
      for (int x = 0; x < 36; ++x) {
        REQUIRE(out.at(c, y, x) == bias[c * 4 + (y % 2) * 2 + x % 2]);
      }
    }
  }
}

TEST_CASE("single-group mask matches the unmasked network") {
  const auto cfg = ssb::testing::TinyConfig();
  const auto weights = ssb::ModelWeights::Random(cfg, 4);
  const auto mask = ssb::GroupMask::Uniform(96, 80, 32);
  const Tensor x = ssb::PadToMask(ssb::testing::RandomImage(96, 80, 4), mask);
  const Tensor gi = ssb::AnalysisTransform(x, mask, weights, cfg);
  const Tensor plain = ssb::AnalysisTransform(x, mask, weights, cfg, AttentionMode::kPlain);
  for (size_t i = 0; i < gi.size(); ++i) CHECK(std::fabs(gi[i] - plain[i]) <= 1e-6);
}

TEST_CASE("analysis and synthesis are group independent") {
  const auto cfg = ssb::testing::TinyConfig();
  const auto weights = ssb::ModelWeights::Random(cfg, 5);
  ssb::SplitMix64 rng(23);
  for (int trial = 0; trial < 6; ++trial) {
    const int h = 48 + 16 * static_cast<int>(rng.Below(5)), w = 48 + 16 * static_cast<int>(rng.Below(5));
    const auto mask = ssb::testing::RandomMask(h, w, 16 * (1 + static_cast<int>(rng.Below(2))), 3, rng);
    const IdGrid cells = ssb::Downsample(mask, 16);
    const Tensor x = ssb::PadToMask(ssb::testing::RandomImage(h, w, trial), mask);
    const Tensor y = ssb::AnalysisTransform(x, mask, weights, cfg);
    const Tensor x_hat = ssb::SynthesisRaw(ssb::Quantize(y).ToTensor(), mask, weights, cfg);
    const IdGrid pixels = ssb::Downsample(mask, 1);
    for (uint16_t g = 0; g < 3; ++g) {
      const Tensor y2 = ssb::AnalysisTransform(PerturbOutside(x, mask, g, 99 + g), mask, weights, cfg);
      CHECK(SameAtGroup(y, y2, cells, g));
      Tensor latents = ssb::Quantize(y).ToTensor();
      for (int c = 0; c < latents.dim(0); ++c) {
        for (size_t i = 0; i < cells.cells(); ++i) {
          if (cells.ids[i] != g) latents[c * cells.cells() + i] = static_cast<float>(rng.Below(7)) - 3;
        }
      }
      CHECK(SameAtGroup(x_hat, ssb::SynthesisRaw(latents, mask, weights, cfg), pixels, g));
    }
  }
}

TEST_CASE("plain attention leaks across groups") {
  const auto cfg = ssb::testing::TinyConfig();
  const auto weights = ssb::ModelWeights::Random(cfg, 5);
  // Left and right halves in one attention window at every stage.
  const auto mask = ssb::GroupMask::Create(64, 64, 32, 2, {0, 1, 0, 1});
  const IdGrid cells = ssb::Downsample(mask, 16);
  const Tensor x = ssb::PadToMask(ssb::testing::RandomImage(64, 64, 1), mask);
  const Tensor x2 = PerturbOutside(x, mask, 0, 7);
  const auto plain = AttentionMode::kPlain;
  CHECK_FALSE(SameAtGroup(ssb::AnalysisTransform(x, mask, weights, cfg, plain),
                          ssb::AnalysisTransform(x2, mask, weights, cfg, plain), cells, 0));
  CHECK(SameAtGroup(ssb::AnalysisTransform(x, mask, weights, cfg),
                    ssb::AnalysisTransform(x2, mask, weights, cfg), cells, 0));
}

TEST_CASE("edge padding replicates the border") {
  const auto mask = ssb::GroupMask::Uniform(3, 2, 16);
  Tensor img({3, 3, 2});
  for (size_t i = 0; i < img.size(); ++i) img[i] = static_cast<float>(i);
  const Tensor p = ssb::PadToMask(img, mask);
  CHECK(p.shape() == std::vector<int>{3, 16, 16});
  CHECK(p.at(1, 15, 15) == img.at(1, 2, 1));
  CHECK(p.at(2, 0, 9) == img.at(2, 0, 1));
}
