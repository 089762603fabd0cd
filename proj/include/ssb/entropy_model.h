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

// Quantization, Gaussian likelihoods, the factorized prior for the hyper
// latent and the channel-wise autoregressive (ChARM) parameter model.
//
// Reconstruction uses plain rounding of y: the entropy parameters only change
// how many bits a symbol costs, never its decoded value.

#ifndef SSB_ENTROPY_MODEL_H_
#define SSB_ENTROPY_MODEL_H_

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "ssb/config.h"
#include "ssb/group_mask.h"
#include "ssb/rng.h"
#include "ssb/tensor.h"
#include "ssb/weights.h"

namespace ssb {

// Signed integer symbols with a [C, H, W] shape.
struct LatentSymbols {
  std::vector<int> shape;
  std::vector<int32_t> values;

  LatentSymbols() = default;
  explicit LatentSymbols(std::vector<int> s)
      : shape(std::move(s)), values(ShapeProduct(shape), 0) {}

  int32_t& at(int c, int y, int x) {
    return values[(static_cast<size_t>(c) * shape[1] + y) * shape[2] + x];
  }
  int32_t at(int c, int y, int x) const {
    return values[(static_cast<size_t>(c) * shape[1] + y) * shape[2] + x];
  }
  Tensor ToTensor() const;

  friend bool operator==(const LatentSymbols&, const LatentSymbols&) = default;
};

// Per-element Gaussian parameters, sigma >= sigma_min.
struct GaussianParams {
  std::vector<float> mean;
  std::vector<float> scale;
};

struct FactorizedPrior {
  std::vector<float> mean;   // per channel
  std::vector<float> scale;  // per channel, floored at sigma_min

  static FactorizedPrior FromWeights(const ModelWeights& w, const CodecConfig& cfg);
};

// Round half away from zero.
int32_t RoundSymbol(float v);
LatentSymbols Quantize(const Tensor& y);

// y + U(-0.5, 0.5) elementwise.
Tensor AddUniformNoise(const Tensor& y, SplitMix64& rng);

// Probability mass of the unit bin around `symbol`.
double GaussianBinMass(int64_t symbol, double mean, double scale);
// GaussianBinMass floored at 2^-32.
double GaussianLikelihood(int64_t symbol, double mean, double scale);
inline constexpr double kLikelihoodFloor = 0x1.0p-32;

// log(1 + e^x), floored at sigma_min.
float ScaleFromRaw(float raw, float sigma_min);

// Entropy parameters for one group's latent cells, slice by slice. Slice s
// parameters are a position-wise function of the hyper features and the
// already committed slices at the same cell.
class ChannelContext {
 public:
  // hyper: [2M, h, w] hyper features; cells: flat y * w + x positions.
  ChannelContext(const Tensor& hyper, std::vector<int> cells, const ModelWeights& weights,
                 const CodecConfig& cfg);

  // Parameters in (cell, channel-within-slice) order. Throws kSequencing
  // unless slice == next_slice().
  GaussianParams Params(int slice) const;
  // values in (cell, channel-within-slice) order.
  void Commit(int slice, std::span<const int32_t> values);

  int next_slice() const { return next_slice_; }
  const std::vector<int>& cells() const { return cells_; }

 private:
  const ModelWeights& weights_;
  const CodecConfig& cfg_;
  std::vector<int> cells_;
  std::vector<int> widths_, offsets_;
  Tensor context_;  // [cells, 2M + M]: hyper features then decoded channels
  int next_slice_ = 0;
};

struct RateReport {
  double total_bits = 0.0;              // latents + hyper latent
  double hyper_bits = 0.0;              // shared overhead
  std::map<uint16_t, double> group_bits;  // latents per group
};

// Sum of -log2 p over a sequence.
double SequenceBits(std::span<const int32_t> symbols, std::span<const float> mean,
                    std::span<const float> scale);

// y_params: mean/scale laid out like y_hat [M, h, w]; cell_groups: ids at
// latent resolution.
RateReport EstimateRate(const LatentSymbols& y_hat, const GaussianParams& y_params,
                        const IdGrid& cell_groups, const LatentSymbols& z_hat,
                        const FactorizedPrior& prior);

}  // namespace ssb

#endif  // SSB_ENTROPY_MODEL_H_
