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

#include "ssb/weights.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

#include "ssb/error.h"
#include "ssb/rng.h"

namespace ssb {

namespace {

constexpr char kMagic[4] = {'S', 'S', 'W', 'T'};
constexpr uint8_t kVersion = 1;

void AddBlockSpecs(std::vector<WeightSpec>& out, const std::string& p, int c, int heads,
                   int window) {
  const int table = (2 * window - 1) * (2 * window - 1);
  out.push_back({p + "norm1.weight", {c}});
  out.push_back({p + "norm1.bias", {c}});
  out.push_back({p + "attn.qkv.weight", {3 * c, c}});
  out.push_back({p + "attn.qkv.bias", {3 * c}});
  out.push_back({p + "attn.proj.weight", {c, c}});
  out.push_back({p + "attn.proj.bias", {c}});
  out.push_back({p + "attn.rel_pos", {table, heads}});
  out.push_back({p + "norm2.weight", {c}});
  out.push_back({p + "norm2.bias", {c}});
  out.push_back({p + "mlp.fc1.weight", {kMlpRatio * c, c}});
  out.push_back({p + "mlp.fc1.bias", {kMlpRatio * c}});
  out.push_back({p + "mlp.fc2.weight", {c, kMlpRatio * c}});
  out.push_back({p + "mlp.fc2.bias", {c}});
}

bool EndsWith(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

std::vector<WeightSpec> WeightManifest(const CodecConfig& cfg) {
  cfg.Validate();
  const auto& ch = cfg.stage_channels;
  const int m = cfg.latent_channels, hc = cfg.hyper_channels;
  std::vector<WeightSpec> out;
  auto block_prefix = [](const char* net, int s, int b) {
    return std::string(net) + ".stage" + std::to_string(s) + ".block" + std::to_string(b) + ".";
  };

  for (int s = 0; s < kNumStages; ++s) {
    const int in = (s == 0 ? 3 : ch[s - 1]) * 4;
    const std::string d = "g_a.down" + std::to_string(s);
    out.push_back({d + ".weight", {ch[s], in, 1, 1}});
    out.push_back({d + ".bias", {ch[s]}});
    for (int b = 0; b < cfg.depths[s]; ++b) {
      AddBlockSpecs(out, block_prefix("g_a", s, b), ch[s], cfg.heads[s], cfg.window);
    }
  }
  out.push_back({"g_a.out.weight", {m, ch[3], 1, 1}});
  out.push_back({"g_a.out.bias", {m}});

  out.push_back({"g_s.in.weight", {ch[3], m, 1, 1}});
  out.push_back({"g_s.in.bias", {ch[3]}});
  for (int s = kNumStages - 1; s >= 0; --s) {
    for (int b = 0; b < cfg.depths[s]; ++b) {
      AddBlockSpecs(out, block_prefix("g_s", s, b), ch[s], cfg.heads[s], cfg.window);
    }
    const int next = s == 0 ? 3 : ch[s - 1];
    const std::string u = "g_s.up" + std::to_string(s);
    out.push_back({u + ".weight", {next * 4, ch[s], 1, 1}});
    out.push_back({u + ".bias", {next * 4}});
  }

  out.push_back({"h_a.conv0.weight", {hc, m, 3, 3}});
  out.push_back({"h_a.conv0.bias", {hc}});
  out.push_back({"h_a.conv1.weight", {hc, hc, 3, 3}});
  out.push_back({"h_a.conv1.bias", {hc}});
  out.push_back({"h_s.deconv0.weight", {hc, hc, 4, 4}});
  out.push_back({"h_s.deconv0.bias", {hc}});
  out.push_back({"h_s.deconv1.weight", {hc, 2 * m, 4, 4}});
  out.push_back({"h_s.deconv1.bias", {2 * m}});

  if (cfg.charm_enabled) {
    const auto widths = cfg.SliceWidths();
    const auto offsets = cfg.SliceOffsets();
    for (int s = 0; s < cfg.slices; ++s) {
      const std::string p = "charm.slice" + std::to_string(s);
      out.push_back({p + ".conv0.weight", {hc, 2 * m + offsets[s], 1, 1}});
      out.push_back({p + ".conv0.bias", {hc}});
      out.push_back({p + ".conv1.weight", {2 * widths[s], hc, 1, 1}});
      out.push_back({p + ".conv1.bias", {2 * widths[s]}});
    }
  }

  out.push_back({"prior.mean", {hc}});
  out.push_back({"prior.scale", {hc}});
  return out;
}

ModelWeights ModelWeights::Zeros(const CodecConfig& cfg) {
  ModelWeights w;
  for (auto& spec : WeightManifest(cfg)) w.Add(spec.name, Tensor(spec.shape));
  return w;
}

ModelWeights ModelWeights::Random(const CodecConfig& cfg, uint64_t seed) {
  SplitMix64 rng(seed);
  ModelWeights w;
  for (auto& spec : WeightManifest(cfg)) {
    Tensor t(spec.shape);
    const std::string& n = spec.name;
    if (EndsWith(n, "norm1.weight") || EndsWith(n, "norm2.weight")) {
      for (float& v : t.values()) v = 1.0f;
    } else if (EndsWith(n, "rel_pos")) {
      for (float& v : t.values()) v = static_cast<float>(0.04 * (rng.NextDouble() - 0.5));
    } else if (n == "prior.scale") {
      for (float& v : t.values()) v = 1.0f;
    } else if (n == "g_s.up0.bias") {
      for (float& v : t.values()) v = 0.5f;
    } else if (EndsWith(n, ".weight")) {
      int fan_in = 1;
      for (size_t i = 1; i < spec.shape.size(); ++i) fan_in *= spec.shape[i];
      // ConvTranspose weights are [Ci, Co, k, k]; each output sees Ci * k * k / 4 inputs.
      if (n.rfind("h_s.", 0) == 0) fan_in = spec.shape[0] * spec.shape[2] * spec.shape[3] / 4;
      double gain = 1.0;
      if (n == "g_a.out.weight") gain = 2.0;
      const double a = gain * std::sqrt(3.0 / fan_in);
      for (float& v : t.values()) v = static_cast<float>(a * (2.0 * rng.NextDouble() - 1.0));
    }
    w.Add(n, std::move(t));
  }
  return w;
}

void ModelWeights::Add(std::string name, Tensor t) {
  if (index_.count(name)) Fail(ErrorCode::kCompatibility, "duplicate weight " + name);
  index_[name] = entries_.size();
  entries_.emplace_back(std::move(name), std::move(t));
}

const Tensor& ModelWeights::Get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) Fail(ErrorCode::kCompatibility, "missing weight " + name);
  return entries_[it->second].second;
}

Tensor& ModelWeights::Mutable(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) Fail(ErrorCode::kCompatibility, "missing weight " + name);
  return entries_[it->second].second;
}

void ModelWeights::CheckMatches(const CodecConfig& cfg) const {
  const auto manifest = WeightManifest(cfg);
  if (manifest.size() != entries_.size()) {
    Fail(ErrorCode::kCompatibility, "weight count " + std::to_string(entries_.size()) +
                                        " does not match config (" +
                                        std::to_string(manifest.size()) + ")");
  }
  for (size_t i = 0; i < manifest.size(); ++i) {
    if (manifest[i].name != entries_[i].first || manifest[i].shape != entries_[i].second.shape()) {
      Fail(ErrorCode::kCompatibility, "weight " + entries_[i].first + " " +
                                          entries_[i].second.ShapeString() +
                                          " does not match config entry " + manifest[i].name);
    }
  }
}

Bytes ModelWeights::Serialize() const {
  ByteWriter w;
  w.Append(std::string_view(kMagic, 4));
  w.U8(kVersion);
  w.U32(static_cast<uint32_t>(entries_.size()));
  for (const auto& [name, t] : entries_) {
    if (name.size() > 0xffff) Fail(ErrorCode::kCapacity, "weight name too long");
    w.U16(static_cast<uint16_t>(name.size()));
    w.Append(name);
    w.U8(static_cast<uint8_t>(t.rank()));
    for (int d : t.shape()) w.U32(static_cast<uint32_t>(d));
    for (float v : t.values()) w.F32(v);
  }
  const uint64_t digest = Fnv1a64(w.bytes());
  w.U64(digest);
  return w.Take();
}

uint64_t ModelWeights::Digest() const {
  const Bytes b = Serialize();
  ByteReader r(std::span<const uint8_t>(b).subspan(b.size() - 8));
  return r.U64();
}

ModelWeights ModelWeights::Deserialize(std::span<const uint8_t> bytes) {
  if (bytes.size() < 4 + 1 + 4 + 8) Fail(ErrorCode::kFormat, "weight file too short");
  const auto body = bytes.first(bytes.size() - 8);
  ByteReader tail(bytes.subspan(bytes.size() - 8));
  if (tail.U64() != Fnv1a64(body)) Fail(ErrorCode::kCompatibility, "weight file digest mismatch");
  ByteReader r(body);
  const auto magic = r.Take(4);
  if (!std::equal(magic.begin(), magic.end(), kMagic)) Fail(ErrorCode::kFormat, "not an SSWT file");
  if (r.U8() != kVersion) Fail(ErrorCode::kCompatibility, "unsupported SSWT version");
  const uint32_t count = r.U32();
  ModelWeights w;
  for (uint32_t i = 0; i < count; ++i) {
    const uint16_t name_len = r.U16();
    const auto name = r.Take(name_len);
    const uint8_t ndim = r.U8();
    std::vector<int> shape;
    uint64_t n = 1;
    for (int d = 0; d < ndim; ++d) {
      const uint32_t e = r.U32();
      if (e > (1u << 28)) Fail(ErrorCode::kFormat, "tensor extent too large");
      shape.push_back(static_cast<int>(e));
      n *= e;
      if (n > r.remaining()) Fail(ErrorCode::kFormat, "tensor data truncated");
    }
    if (n * 4 > r.remaining()) Fail(ErrorCode::kFormat, "tensor data truncated");
    std::vector<float> data(n);
    for (auto& v : data) v = r.F32();
    w.Add(std::string(name.begin(), name.end()), Tensor(std::move(shape), std::move(data)));
  }
  if (!r.done()) Fail(ErrorCode::kFormat, "trailing bytes in weight file");
  return w;
}

ModelWeights LoadWeights(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) Fail(ErrorCode::kIo, "cannot open weights " + path);
  const Bytes b((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return ModelWeights::Deserialize(b);
}

}  // namespace ssb
