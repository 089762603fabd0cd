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

#include "ssb/codec.h"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

#include "ssb/error.h"
#include "ssb/permutation.h"

namespace ssb {

namespace {

// Runs fn(0..n-1) on up to `threads` workers; the first exception wins.
template <typename Fn>
void ParallelFor(size_t n, int threads, Fn fn) {
  const size_t workers = std::min<size_t>(n, static_cast<size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  for (size_t t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      for (size_t i; (i = next.fetch_add(1)) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

uint8_t ScaleIndexByte(const CdfTables& tables, float sigma) {
  return static_cast<uint8_t>(tables.ScaleIndex(sigma));
}

uint64_t KeySalt(const Bytes& mask_rle, const Bytes& z_stream, uint16_t group_id) {
  uint64_t h = Fnv1a64(mask_rle);
  h = Fnv1a64(z_stream, h);
  const uint8_t id[2] = {static_cast<uint8_t>(group_id), static_cast<uint8_t>(group_id >> 8)};
  return Fnv1a64(id, h);
}

std::vector<int> HyperShape(const CodecConfig& cfg, int latent_h, int latent_w) {
  return {cfg.hyper_channels, (latent_h + kHyperStride - 1) / kHyperStride,
          (latent_w + kHyperStride - 1) / kHyperStride};
}

}  // namespace

int ThreadsFromEnv() {
  const char* v = std::getenv("SSB_THREADS");
  if (v == nullptr) return 1;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (end == v || *end != '\0' || n < 1) return 1;
  return static_cast<int>(std::min<long>(n, 256));
}

std::vector<int> GroupCells(const IdGrid& cell_groups, uint16_t group_id) {
  std::vector<int> cells;
  for (size_t i = 0; i < cell_groups.ids.size(); ++i) {
    if (cell_groups.ids[i] == group_id) cells.push_back(static_cast<int>(i));
  }
  return cells;
}

GroupStream EncodeGroupLatents(const Tensor& hyper, std::span<const int> cells,
                               LatentSymbols& y, const ModelWeights& weights,
                               const CodecConfig& cfg, const CdfTables& tables,
                               const GroupKey* key) {
  const int plane = y.shape[1] * y.shape[2];
  const int bound = tables.bound();
  const auto widths = cfg.SliceWidths();
  const auto offsets = cfg.SliceOffsets();
  ChannelContext ctx(hyper, std::vector<int>(cells.begin(), cells.end()), weights, cfg);
  std::optional<KeyedPermuter> permuter;
  if (key != nullptr) permuter.emplace(key->key, key->group_id, key->key_salt);

  GroupStream out;
  std::vector<int32_t> residuals;
  std::vector<uint8_t> scales;
  for (int s = 0; s < cfg.slices; ++s) {
    const GaussianParams p = ctx.Params(s);
    const int width = widths[s];
    std::vector<int32_t> coded(cells.size() * width);
    std::vector<int32_t> res(coded.size());
    std::vector<uint8_t> idx(coded.size());
    for (size_t i = 0; i < cells.size(); ++i) {
      for (int j = 0; j < width; ++j) {
        const size_t k = i * width + j;
        int32_t& v = y.values[static_cast<size_t>(offsets[s] + j) * plane + cells[i]];
        const int32_t mu = RoundSymbol(p.mean[k]);
        const int64_t r = static_cast<int64_t>(v) - mu;
        const auto clamped = static_cast<int32_t>(std::clamp<int64_t>(r, -bound, bound));
        if (clamped != r) ++out.clamp_events;
        v = mu + clamped;
        coded[k] = v;
        res[k] = clamped;
        idx[k] = ScaleIndexByte(tables, p.scale[k]);
      }
    }
    ctx.Commit(s, coded);
    if (permuter) {
      const auto perm = permuter->Next(res.size());
      res = ApplyPermutation<int32_t>(res, perm);
      idx = ApplyPermutation<uint8_t>(idx, perm);
    }
    residuals.insert(residuals.end(), res.begin(), res.end());
    scales.insert(scales.end(), idx.begin(), idx.end());
  }
  out.bytes = EncodeSymbols(residuals, scales, tables);
  return out;
}

bool DecodeGroupLatents(std::span<const uint8_t> stream, const Tensor& hyper,
                        std::span<const int> cells, LatentSymbols& y,
                        const ModelWeights& weights, const CodecConfig& cfg,
                        const CdfTables& tables, const GroupKey* key) {
  const int plane = y.shape[1] * y.shape[2];
  const int bound = tables.bound();
  const auto widths = cfg.SliceWidths();
  const auto offsets = cfg.SliceOffsets();
  ChannelContext ctx(hyper, std::vector<int>(cells.begin(), cells.end()), weights, cfg);
  std::optional<KeyedPermuter> permuter;
  if (key != nullptr) permuter.emplace(key->key, key->group_id, key->key_salt);

  RangeDecoder dec(stream);
  for (int s = 0; s < cfg.slices; ++s) {
    const GaussianParams p = ctx.Params(s);
    const int width = widths[s];
    const size_t n = cells.size() * width;
    std::vector<uint8_t> idx(n);
    for (size_t k = 0; k < n; ++k) idx[k] = ScaleIndexByte(tables, p.scale[k]);
    std::vector<uint32_t> perm;
    if (permuter) {
      perm = permuter->Next(n);
      idx = ApplyPermutation<uint8_t>(idx, perm);
    }
    std::vector<int32_t> res(n);
    for (size_t k = 0; k < n; ++k) res[k] = dec.Decode(tables.cdf(idx[k])) - bound;
    if (permuter) res = UndoPermutation<int32_t>(res, perm);
    for (size_t k = 0; k < n; ++k) res[k] += RoundSymbol(p.mean[k]);
    for (size_t i = 0; i < cells.size(); ++i) {
      for (int j = 0; j < width; ++j) {
        y.values[static_cast<size_t>(offsets[s] + j) * plane + cells[i]] = res[i * width + j];
      }
    }
    ctx.Commit(s, res);
  }
  return dec.Verified();
}

Bytes EncodeHyperLatent(LatentSymbols& z, const FactorizedPrior& prior, const CdfTables& tables,
                        size_t* clamp_events) {
  const int channels = z.shape[0];
  if (static_cast<int>(prior.mean.size()) != channels) {
    Fail(ErrorCode::kDimension, "prior does not match the hyper latent");
  }
  const size_t plane = static_cast<size_t>(z.shape[1]) * z.shape[2];
  const int bound = tables.bound();
  std::vector<int32_t> residuals(z.values.size());
  std::vector<uint8_t> scales(z.values.size());
  size_t clamps = 0;
  for (int c = 0; c < channels; ++c) {
    const int32_t mu = RoundSymbol(prior.mean[c]);
    const uint8_t idx = ScaleIndexByte(tables, prior.scale[c]);
    for (size_t i = 0; i < plane; ++i) {
      int32_t& v = z.values[c * plane + i];
      const int64_t r = static_cast<int64_t>(v) - mu;
      const auto clamped = static_cast<int32_t>(std::clamp<int64_t>(r, -bound, bound));
      if (clamped != r) ++clamps;
      v = mu + clamped;
      residuals[c * plane + i] = clamped;
      scales[c * plane + i] = idx;
    }
  }
  if (clamp_events != nullptr) *clamp_events += clamps;
  return EncodeSymbols(residuals, scales, tables);
}

LatentSymbols DecodeHyperLatent(std::span<const uint8_t> stream, std::vector<int> shape,
                                const FactorizedPrior& prior, const CdfTables& tables,
                                bool* verified) {
  LatentSymbols z(std::move(shape));
  const int channels = z.shape[0];
  if (static_cast<int>(prior.mean.size()) != channels) {
    Fail(ErrorCode::kDimension, "prior does not match the hyper latent");
  }
  const size_t plane = static_cast<size_t>(z.shape[1]) * z.shape[2];
  RangeDecoder dec(stream);
  for (int c = 0; c < channels; ++c) {
    const int32_t mu = RoundSymbol(prior.mean[c]);
    const auto cdf = tables.cdf(ScaleIndexByte(tables, prior.scale[c]));
    for (size_t i = 0; i < plane; ++i) {
      z.values[c * plane + i] = mu + dec.Decode(cdf) - tables.bound();
    }
  }
  if (verified != nullptr) *verified = dec.Verified();
  return z;
}

EncodeResult EncodeImage(const Tensor& image, const GroupMask& mask, const ModelWeights& weights,
                         const CodecConfig& cfg, const EncodeOptions& options) {
  cfg.Validate();
  weights.CheckMatches(cfg);
  if (image.rank() != 3 || image.dim(0) != 3 || image.dim(1) != mask.image_h() ||
      image.dim(2) != mask.image_w()) {
    Fail(ErrorCode::kDimension, "image " + image.ShapeString() + " does not match the mask extent");
  }
  if (mask.block_size() % kTotalStride != 0) {
    Fail(ErrorCode::kConfig, "mask block size must be a multiple of 16");
  }
  if (mask.n_groups() > 0xffff || mask.image_h() < 1 || mask.image_w() < 1) {
    Fail(ErrorCode::kCapacity, "mask does not fit the container header");
  }
  for (const auto& [id, key] : options.keys) {
    if (id >= mask.n_groups()) Fail(ErrorCode::kSelection, "encryption key for unknown group");
  }

  const Tensor x = PadToMask(image, mask);
  const Tensor y = AnalysisTransform(x, mask, weights, cfg, options.mode);
  EncodeResult res;
  res.y_quantized = Quantize(y);
  res.y_hat = res.y_quantized;
  const int lh = y.dim(1), lw = y.dim(2);

  const CdfTables tables = CdfTables::Build(cfg.sigma_min, cfg.symbol_bound);
  const FactorizedPrior prior = FactorizedPrior::FromWeights(weights, cfg);
  res.z_hat = Quantize(HyperAnalysis(y, weights, cfg));
  Bytes z_stream = EncodeHyperLatent(res.z_hat, prior, tables, &res.clamp_events);
  const Tensor hyper = HyperSynthesis(res.z_hat.ToTensor(), lh, lw, weights, cfg);

  Bytes mask_rle = SerializeRle(mask);
  const IdGrid cell_groups = Downsample(mask, kTotalStride);
  const int n_groups = mask.n_groups();
  std::vector<GroupPayload> payloads(n_groups);
  std::vector<size_t> clamps(n_groups, 0);
  ParallelFor(n_groups, options.threads, [&](size_t g) {
    const auto id = static_cast<uint16_t>(g);
    const std::vector<int> cells = GroupCells(cell_groups, id);
    GroupPayload& p = payloads[g];
    p.group_id = id;
    const auto it = options.keys.find(id);
    GroupStream gs;
    if (it != options.keys.end()) {
      p.encrypted = true;
      p.key_salt = KeySalt(mask_rle, z_stream, id);
      const GroupKey key{it->second, id, p.key_salt};
      gs = EncodeGroupLatents(hyper, cells, res.y_hat, weights, cfg, tables, &key);
    } else {
      gs = EncodeGroupLatents(hyper, cells, res.y_hat, weights, cfg, tables);
    }
    p.data = std::move(gs.bytes);
    clamps[g] = gs.clamp_events;
  });
  for (size_t c : clamps) res.clamp_events += c;
  for (const auto& p : payloads) res.group_bytes[p.group_id] = p.data.size();

  SsbHeader header;
  header.flags = static_cast<uint8_t>(
      (options.mode == AttentionMode::kPlain ? kFlagPlainAttention : 0) |
      (cfg.charm_enabled ? 0 : kFlagHyperOnly));
  header.image_h = static_cast<uint32_t>(mask.image_h());
  header.image_w = static_cast<uint32_t>(mask.image_w());
  header.block_size = static_cast<uint16_t>(mask.block_size());
  header.n_groups = static_cast<uint16_t>(n_groups);
  header.latent_channels = static_cast<uint16_t>(cfg.latent_channels);
  header.slices = static_cast<uint8_t>(cfg.slices);
  header.weights_digest = weights.Digest();
  const SsbFile file =
      AssembleSsb(header, std::move(mask_rle), std::move(z_stream), std::move(payloads));
  res.overhead_bytes = file.OverheadBytes();
  res.ssb = WriteSsb(file);
  return res;
}

DecodeResult DecodeGroups(std::span<const uint8_t> ssb,
                          const std::optional<std::set<uint16_t>>& groups,
                          const ModelWeights& weights, const CodecConfig& cfg,
                          const DecodeOptions& options) {
  cfg.Validate();
  const SsbFile file = ReadSsb(ssb);
  const SsbHeader& h = file.header;
  if (h.weights_digest != weights.Digest()) {
    Fail(ErrorCode::kCompatibility, "file was encoded with different weights");
  }
  weights.CheckMatches(cfg);
  if (h.latent_channels != cfg.latent_channels || h.slices != cfg.slices ||
      ((h.flags & kFlagHyperOnly) != 0) == cfg.charm_enabled) {
    Fail(ErrorCode::kCompatibility, "file was encoded with a different configuration");
  }
  if (h.block_size % kTotalStride != 0) {
    Fail(ErrorCode::kFormat, "block size is not a multiple of 16");
  }

  DecodeResult res;
  res.mask = FileMask(file);
  res.groups = groups ? *groups : file.PresentGroups();
  if (res.groups.empty()) Fail(ErrorCode::kSelection, "no groups selected");
  for (uint16_t id : res.groups) {
    if (id >= h.n_groups) Fail(ErrorCode::kSelection, "unknown group id " + std::to_string(id));
    if (file.Find(id) == nullptr) {
      Fail(ErrorCode::kAvailability, "group " + std::to_string(id) + " is not in the file");
    }
  }
  for (uint16_t id : res.groups) {
    const GroupRecord& r = *file.Find(id);
    if (r.encrypted && !options.keys.count(id)) {
      const std::string msg = "group " + std::to_string(id) + " is encrypted and no key was given";
      if (options.strict) Fail(ErrorCode::kKeyRequired, msg);
      res.warnings.push_back(msg);
    }
  }

  const int lh = res.mask.padded_h() / kTotalStride, lw = res.mask.padded_w() / kTotalStride;
  const CdfTables tables = CdfTables::Build(cfg.sigma_min, cfg.symbol_bound);
  const FactorizedPrior prior = FactorizedPrior::FromWeights(weights, cfg);
  bool z_ok = false;
  const LatentSymbols z_hat =
      DecodeHyperLatent(file.z_stream, HyperShape(cfg, lh, lw), prior, tables, &z_ok);
  if (!z_ok) {
    if (options.strict) Fail(ErrorCode::kDecode, "hyper latent stream is corrupt");
    res.warnings.push_back("hyper latent stream did not verify");
  }
  const Tensor hyper = HyperSynthesis(z_hat.ToTensor(), lh, lw, weights, cfg);

  const IdGrid cell_groups = Downsample(res.mask, kTotalStride);
  res.y_hat = LatentSymbols({cfg.latent_channels, lh, lw});
  const std::vector<uint16_t> ids(res.groups.begin(), res.groups.end());
  std::vector<uint8_t> verified(ids.size(), 0);
  ParallelFor(ids.size(), options.threads, [&](size_t i) {
    const uint16_t id = ids[i];
    const GroupRecord& r = *file.Find(id);
    const std::vector<int> cells = GroupCells(cell_groups, id);
    const auto it = options.keys.find(id);
    bool ok;
    if (r.encrypted && it != options.keys.end()) {
      const GroupKey key{it->second, id, r.key_salt};
      ok = DecodeGroupLatents(file.Substream(r), hyper, cells, res.y_hat, weights, cfg, tables,
                              &key);
    } else {
      ok = DecodeGroupLatents(file.Substream(r), hyper, cells, res.y_hat, weights, cfg, tables);
    }
    verified[i] = ok ? 1 : 0;
  });
  for (size_t i = 0; i < ids.size(); ++i) {
    res.group_bits[ids[i]] = static_cast<size_t>(file.Find(ids[i])->length) * 8;
    if (verified[i]) continue;
    const std::string msg = "group " + std::to_string(ids[i]) +
                            " did not verify (wrong key or corrupt substream)";
    if (options.strict) Fail(ErrorCode::kDecode, msg);
    res.warnings.push_back(msg);
  }
  res.overhead_bits = file.OverheadBytes() * 8;

  if (options.synthesize) {
    const AttentionMode mode = (h.flags & kFlagPlainAttention) ? AttentionMode::kPlain
                                                               : AttentionMode::kGroupIndependent;
    res.image = SynthesisTransform(res.y_hat.ToTensor(), res.mask, weights, cfg, mode);
  }
  return res;
}

}  // namespace ssb
