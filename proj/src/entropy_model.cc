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

#include "ssb/entropy_model.h"

#include <algorithm>
#include <cmath>

#include "ssb/error.h"
#include "ssb/nn.h"

namespace ssb {

namespace {

// Views a [out, in, 1, 1] convolution kernel as a [out, in] matrix.
Tensor AsMatrix(const Tensor& kernel) {
  const int out = kernel.dim(0);
  const int in = static_cast<int>(kernel.size()) / out;
  return Tensor({out, in}, std::vector<float>(kernel.values().begin(), kernel.values().end()));
}

// Standard normal upper tail, accurate far into the tails.
double UpperTail(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

}  // namespace

Tensor LatentSymbols::ToTensor() const {
  Tensor t(shape);
  for (size_t i = 0; i < values.size(); ++i) t[i] = static_cast<float>(values[i]);
  return t;
}

FactorizedPrior FactorizedPrior::FromWeights(const ModelWeights& w, const CodecConfig& cfg) {
  FactorizedPrior p;
  const Tensor& mean = w.Get("prior.mean");
  const Tensor& scale = w.Get("prior.scale");
  p.mean.assign(mean.values().begin(), mean.values().end());
  for (float s : scale.values()) p.scale.push_back(std::max(s, cfg.sigma_min));
  return p;
}

int32_t RoundSymbol(float v) {
  const float r = std::round(v);
  if (!(r > -2147483648.0f && r < 2147483648.0f)) Fail(ErrorCode::kDimension, "latent out of range");
  return static_cast<int32_t>(r);
}

LatentSymbols Quantize(const Tensor& y) {
  LatentSymbols q(y.shape());
  for (size_t i = 0; i < y.size(); ++i) q.values[i] = RoundSymbol(y[i]);
  return q;
}

Tensor AddUniformNoise(const Tensor& y, SplitMix64& rng) {
  Tensor out = y;
  constexpr float kBelowHalf = 0.49999997f;  // largest float < 0.5
  for (float& v : out.values()) {
    v += std::min(static_cast<float>(rng.NextDouble() - 0.5), kBelowHalf);
  }
  return out;
}

double GaussianBinMass(int64_t symbol, double mean, double scale) {
  // Evaluate on the side where both tails are small to avoid cancellation.
  const double d = std::fabs(static_cast<double>(symbol) - mean);
  return UpperTail((d - 0.5) / scale) - UpperTail((d + 0.5) / scale);
}

double GaussianLikelihood(int64_t symbol, double mean, double scale) {
  return std::max(GaussianBinMass(symbol, mean, scale), kLikelihoodFloor);
}

float ScaleFromRaw(float raw, float sigma_min) {
  const float sp = raw > 20.0f ? raw : std::log1p(std::exp(raw));
  return std::max(sp, sigma_min);
}

ChannelContext::ChannelContext(const Tensor& hyper, std::vector<int> cells,
                               const ModelWeights& weights, const CodecConfig& cfg)
    : weights_(weights), cfg_(cfg), cells_(std::move(cells)),
      widths_(cfg.SliceWidths()), offsets_(cfg.SliceOffsets()) {
  const int m = cfg.latent_channels;
  if (hyper.rank() != 3 || hyper.dim(0) != 2 * m) {
    Fail(ErrorCode::kDimension, "hyper features must have 2M channels");
  }
  const int plane = hyper.dim(1) * hyper.dim(2);
  context_ = Tensor({static_cast<int>(cells_.size()), 3 * m});
  for (size_t i = 0; i < cells_.size(); ++i) {
    const int cell = cells_[i];
    if (cell < 0 || cell >= plane) Fail(ErrorCode::kDimension, "cell outside the latent grid");
    for (int c = 0; c < 2 * m; ++c) {
      context_.at(static_cast<int>(i), c) = hyper[static_cast<size_t>(c) * plane + cell];
    }
  }
}

GaussianParams ChannelContext::Params(int slice) const {
  if (slice != next_slice_) {
    Fail(ErrorCode::kSequencing, "slice " + std::to_string(slice) + " requested before slice " +
                                     std::to_string(next_slice_) + " was committed");
  }
  const int m = cfg_.latent_channels;
  const int width = widths_[slice], offset = offsets_[slice];
  const int n = static_cast<int>(cells_.size());
  GaussianParams out;
  out.mean.resize(static_cast<size_t>(n) * width);
  out.scale.resize(static_cast<size_t>(n) * width);
  if (!cfg_.charm_enabled) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < width; ++j) {
        out.mean[static_cast<size_t>(i) * width + j] = context_.at(i, offset + j);
        out.scale[static_cast<size_t>(i) * width + j] =
            ScaleFromRaw(context_.at(i, m + offset + j), cfg_.sigma_min);
      }
    }
    return out;
  }
  const int in = 2 * m + offset;
  Tensor input({n, in});
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < in; ++c) input.at(i, c) = context_.at(i, c);
  }
  const std::string p = "charm.slice" + std::to_string(slice);
  Tensor hidden = nn::Linear(input, AsMatrix(weights_.Get(p + ".conv0.weight")),
                             weights_.Get(p + ".conv0.bias"));
  nn::ReluInPlace(hidden);
  const Tensor raw = nn::Linear(hidden, AsMatrix(weights_.Get(p + ".conv1.weight")),
                                weights_.Get(p + ".conv1.bias"));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < width; ++j) {
      out.mean[static_cast<size_t>(i) * width + j] = raw.at(i, j);
      out.scale[static_cast<size_t>(i) * width + j] =
          ScaleFromRaw(raw.at(i, width + j), cfg_.sigma_min);
    }
  }
  return out;
}

void ChannelContext::Commit(int slice, std::span<const int32_t> values) {
  if (slice != next_slice_) Fail(ErrorCode::kSequencing, "slices must be committed in order");
  const int width = widths_[slice], offset = offsets_[slice];
  if (values.size() != cells_.size() * width) {
    Fail(ErrorCode::kDimension, "committed slice has the wrong length");
  }
  const int m = cfg_.latent_channels;
  for (size_t i = 0; i < cells_.size(); ++i) {
    for (int j = 0; j < width; ++j) {
      context_.at(static_cast<int>(i), 2 * m + offset + j) =
          static_cast<float>(values[i * width + j]);
    }
  }
  ++next_slice_;
}

double SequenceBits(std::span<const int32_t> symbols, std::span<const float> mean,
                    std::span<const float> scale) {
  if (symbols.size() != mean.size() || symbols.size() != scale.size()) {
    Fail(ErrorCode::kDimension, "rate estimate: sequence lengths differ");
  }
  double bits = 0.0;
  for (size_t i = 0; i < symbols.size(); ++i) {
    bits -= std::log2(GaussianLikelihood(symbols[i], mean[i], scale[i]));
  }
  return bits;
}

RateReport EstimateRate(const LatentSymbols& y_hat, const GaussianParams& y_params,
                        const IdGrid& cell_groups, const LatentSymbols& z_hat,
                        const FactorizedPrior& prior) {
  if (y_hat.shape.size() != 3 || y_params.mean.size() != y_hat.values.size() ||
      y_params.scale.size() != y_hat.values.size() || cell_groups.height != y_hat.shape[1] ||
      cell_groups.width != y_hat.shape[2]) {
    Fail(ErrorCode::kDimension, "rate estimate: shapes do not match");
  }
  if (z_hat.shape.size() != 3 || static_cast<size_t>(z_hat.shape[0]) != prior.mean.size()) {
    Fail(ErrorCode::kDimension, "rate estimate: hyper latent does not match the prior");
  }
  RateReport report;
  const size_t plane = cell_groups.cells();
  for (size_t i = 0; i < y_hat.values.size(); ++i) {
    const uint16_t g = cell_groups.ids[i % plane];
    report.group_bits[g] -=
        std::log2(GaussianLikelihood(y_hat.values[i], y_params.mean[i], y_params.scale[i]));
  }
  const size_t zplane = static_cast<size_t>(z_hat.shape[1]) * z_hat.shape[2];
  for (size_t i = 0; i < z_hat.values.size(); ++i) {
    const size_t c = i / zplane;
    report.hyper_bits -=
        std::log2(GaussianLikelihood(z_hat.values[i], prior.mean[c], prior.scale[c]));
  }
  // Fixed group-id order keeps the total reproducible.
  for (const auto& [g, bits] : report.group_bits) report.total_bits += bits;
  report.total_bits += report.hyper_bits;
  return report;
}

}  // namespace ssb
