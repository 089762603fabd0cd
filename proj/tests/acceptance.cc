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

// Acceptance checks for the codec. Prints one PASS/FAIL line per criterion
// and exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ssb/codec.h"
#include "ssb/container.h"
#include "ssb/error.h"
#include "ssb/group_mask.h"
#include "ssb/image.h"
#include "ssb/metrics.h"
#include "ssb/range_coder.h"
#include "ssb/rng.h"
#include "test_util.h"

namespace {

using ssb::Bytes;
using ssb::Tensor;
using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

int failures = 0;

void Report(bool pass, const char* name, const std::string& detail) {
  std::printf("%s %s: %s\n", pass ? "PASS" : "FAIL", name, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string Format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), fmt, args...);
  return buf;
}

struct Fixture {
  Tensor image;
  ssb::GroupMask mask;
};

// Image at most 128x128 with a random 2-4 group block mask.
Fixture RandomFixture(uint64_t seed) {
  ssb::SplitMix64 rng(seed);
  const int h = 48 + static_cast<int>(rng.Below(81));
  const int w = 48 + static_cast<int>(rng.Below(81));
  const int block = rng.Below(2) ? 32 : 16;
  const int groups = 2 + static_cast<int>(rng.Below(3));
  Fixture f;
  f.image = ssb::testing::RandomImage(h, w, seed * 31 + 7);
  f.mask = ssb::testing::RandomMask(h, w, block, groups, rng);
  return f;
}

ssb::LatentSymbols QuantizedLatents(const Tensor& image, const ssb::GroupMask& mask,
                                    const ssb::ModelWeights& weights, const ssb::CodecConfig& cfg,
                                    ssb::AttentionMode mode) {
  return ssb::Quantize(
      ssb::AnalysisTransform(ssb::PadToMask(image, mask), mask, weights, cfg, mode));
}

// Number of latent cells of `group` whose symbols differ in any channel.
int DifferingCells(const ssb::LatentSymbols& a, const ssb::LatentSymbols& b,
                   const std::vector<int>& cells) {
  const size_t plane = static_cast<size_t>(a.shape[1]) * a.shape[2];
  int differ = 0;
  for (int cell : cells) {
    for (int c = 0; c < a.shape[0]; ++c) {
      if (a.values[c * plane + cell] != b.values[c * plane + cell]) {
        ++differ;
        break;
      }
    }
  }
  return differ;
}

// For every group g, re-randomizing all pixels outside g leaves the
// quantized latents at g's cells unchanged.
bool IndependenceHolds(const Fixture& f, const ssb::ModelWeights& weights,
                       const ssb::CodecConfig& cfg, ssb::AttentionMode mode, uint64_t seed) {
  const auto base = QuantizedLatents(f.image, f.mask, weights, cfg, mode);
  const ssb::IdGrid cell_groups = ssb::Downsample(f.mask, 16);
  bool holds = true;
  for (int g = 0; g < f.mask.n_groups(); ++g) {
    Tensor other = f.image;
    ssb::SplitMix64 rng(seed * 17 + g);
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < f.mask.image_h(); ++y)
        for (int x = 0; x < f.mask.image_w(); ++x)
          if (f.mask.PixelId(y, x) != g) other.at(c, y, x) = static_cast<float>(rng.NextDouble());
    const auto pert = QuantizedLatents(other, f.mask, weights, cfg, mode);
    const auto cells = ssb::GroupCells(cell_groups, static_cast<uint16_t>(g));
    if (DifferingCells(base, pert, cells) != 0) holds = false;
  }
  return holds;
}

bool SameOnGroups(const Tensor& a, const Tensor& b, const ssb::GroupMask& mask,
                  const std::set<uint16_t>& groups) {
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < mask.image_h(); ++y)
      for (int x = 0; x < mask.image_w(); ++x)
        if (groups.count(mask.PixelId(y, x)) && a.at(c, y, x) != b.at(c, y, x)) return false;
  return true;
}

constexpr int kFixtures = 50;

void EncodeIndependence(const ssb::ModelWeights& weights, const ssb::CodecConfig& cfg) {
  const auto start = Clock::now();
  int held = 0;
  for (int i = 0; i < kFixtures; ++i) {
    held += IndependenceHolds(RandomFixture(1000 + i), weights, cfg,
                              ssb::AttentionMode::kGroupIndependent, i)
                ? 1
                : 0;
  }
  const double t = Seconds(start);
  Report(held == kFixtures && t < 120.0, "encode_independence",
         Format("%d/%d fixtures bit-identical, %.1f s (limit 120 s)", held, kFixtures, t));
}

void SelectiveDecode(const ssb::ModelWeights& weights, const ssb::CodecConfig& cfg) {
  const auto start = Clock::now();
  int checked = 0, matched = 0;
  for (int i = 0; i < kFixtures; ++i) {
    const Fixture f = RandomFixture(1000 + i);
    const auto enc = ssb::EncodeImage(f.image, f.mask, weights, cfg);
    const auto full = ssb::DecodeGroups(enc.ssb, std::nullopt, weights, cfg);
    const int n = f.mask.n_groups();
    std::vector<std::set<uint16_t>> selections;
    for (int a = 0; a < n; ++a) {
      selections.push_back({static_cast<uint16_t>(a)});
      for (int b = a + 1; b < n; ++b)
        selections.push_back({static_cast<uint16_t>(a), static_cast<uint16_t>(b)});
    }
    for (const auto& sel : selections) {
      const auto part = ssb::DecodeGroups(ssb::ExtractGroups(enc.ssb, sel), sel, weights, cfg);
      ++checked;
      if (part.warnings.empty() && SameOnGroups(part.image, full.image, f.mask, sel)) ++matched;
    }
  }
  const double t = Seconds(start);
  Report(matched == checked && t < 180.0, "selective_decode",
         Format("%d/%d singleton and pair selections bit-exact, %.1f s (limit 180 s)", matched,
                checked, t));
}

void NegativeControl(const ssb::ModelWeights& weights, const ssb::CodecConfig& cfg) {
  // Checkerboard of two groups over 32 px blocks.
  Fixture f;
  f.image = ssb::testing::RandomImage(128, 128, 99);
  std::vector<uint16_t> grid(16);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) grid[r * 4 + c] = static_cast<uint16_t>((r + c) % 2);
  f.mask = ssb::GroupMask::Create(128, 128, 32, 2, grid);
  const bool gi = IndependenceHolds(f, weights, cfg, ssb::AttentionMode::kGroupIndependent, 5);
  const bool plain = IndependenceHolds(f, weights, cfg, ssb::AttentionMode::kPlain, 5);
  Report(gi && !plain, "negative_control",
         Format("independence with group masking %s, with --no-gi %s",
                gi ? "holds" : "violated", plain ? "holds (undetected)" : "violated (detected)"));
}

void EntropyRoundTrip() {
  const auto start = Clock::now();
  const ssb::CdfTables tables = ssb::CdfTables::Build(0.11, 64);
  ssb::SplitMix64 rng(4242);
  int lossless = 0, within = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const size_t n = 1 + rng.Below(4000);
    const bool mixed = rng.Below(2) != 0;
    const double fixed_sigma = 0.11 * std::pow(64.0 / 0.11, rng.NextDouble());
    std::vector<int32_t> symbols(n);
    std::vector<uint8_t> scales(n);
    double ideal = 0.0;
    for (size_t i = 0; i < n; ++i) {
      const double sigma = mixed ? 0.11 * std::pow(64.0 / 0.11, rng.NextDouble()) : fixed_sigma;
      const double u1 = rng.NextDouble() + 1e-300, u2 = rng.NextDouble();
      const double g = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
      symbols[i] = static_cast<int32_t>(std::clamp<long>(std::lround(g * sigma), -64, 64));
      scales[i] = static_cast<uint8_t>(tables.ScaleIndex(sigma));
      const auto cdf = tables.cdf(scales[i]);
      ideal -= std::log2((cdf[symbols[i] + 65] - cdf[symbols[i] + 64]) / 65536.0);
    }
    const Bytes coded = ssb::EncodeSymbols(symbols, scales, tables);
    if (ssb::DecodeSymbols(coded, scales, tables) == symbols) ++lossless;
    const double excess = std::fabs(8.0 * coded.size() - ideal) - (0.01 * ideal + 32.0);
    if (excess <= 0.0) ++within;
  }
  const double t = Seconds(start);
  Report(lossless == 500 && within == 500 && t < 60.0, "entropy_round_trip",
         Format("%d/500 lossless, %d/500 within 1%% + 32 bits, %.2f s (limit 60 s)", lossless,
                within, t));
}

void ContainerIntegrity(const ssb::ModelWeights& weights, const ssb::CodecConfig& cfg) {
  ssb::SplitMix64 rng(777);
  Fixture f;
  f.image = ssb::testing::RandomImage(96, 128, 8);
  f.mask = ssb::testing::RandomMask(96, 128, 16, 6, rng);
  ssb::EncodeOptions eo;
  const Bytes key{'k', 'e', 'y'};
  eo.keys[2] = key;
  const Bytes golden = ssb::EncodeImage(f.image, f.mask, weights, cfg, eo).ssb;
  ssb::DecodeOptions dopt;
  dopt.keys[2] = key;

  int structured = 0, accepted = 0, panics = 0, truncation_accepted = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    Bytes b = golden;
    const bool truncate = trial % 2 == 0;
    if (truncate) {
      b.resize(rng.Below(golden.size()));
    } else {
      const size_t bit = rng.Below(b.size() * 8);
      b[bit / 8] ^= static_cast<uint8_t>(1u << (bit % 8));
    }
    try {
      ssb::ReadSsb(b);
      ssb::DecodeOptions o = dopt;
      o.synthesize = trial % 25 == 1;
      ssb::DecodeGroups(b, std::nullopt, weights, cfg, o);
      ssb::ExtractGroups(b, {0, 2, 5});
      ++accepted;  // payload bit flips decode to other symbols
      if (truncate) ++truncation_accepted;
    } catch (const ssb::Error&) {
      ++structured;
    } catch (const std::exception&) {
      ++panics;
    }
  }

  int law_ok = 0;
  for (int trial = 0; trial < 200; ++trial) {
    std::set<uint16_t> p, q, both;
    for (uint16_t g = 0; g < 6; ++g) {
      if (rng.Below(2)) p.insert(g);
      if (rng.Below(2)) q.insert(g);
      if (p.count(g) && q.count(g)) both.insert(g);
    }
    if (ssb::ExtractGroups(ssb::ExtractGroups(golden, p), q) == ssb::ExtractGroups(golden, both))
      ++law_ok;
  }
  Report(panics == 0 && truncation_accepted == 0 && law_ok == 200, "container_integrity",
         Format("1000 mutations: %d structured errors, %d accepted payload flips, %d panics, "
                "%d truncations accepted; extract-compose law %d/200",
                structured, accepted, panics, truncation_accepted, law_ok));
}

void Encryption(const ssb::ModelWeights& weights, const ssb::CodecConfig& cfg) {
  const auto start = Clock::now();
  int identity = 0, scrambled = 0, others_exact = 0, length_ok = 0;
  double min_fraction = 1.0;
  long max_delta = 0;
  for (int i = 0; i < 100; ++i) {
    ssb::SplitMix64 rng(5000 + i);
    const int h = 48 + static_cast<int>(rng.Below(49)), w = 48 + static_cast<int>(rng.Below(49));
    Fixture f;
    f.image = ssb::testing::RandomImage(h, w, 6000 + i);
    f.mask = ssb::testing::RandomMask(h, w, 16, 2 + static_cast<int>(rng.Below(3)), rng);
    const auto target = static_cast<uint16_t>(rng.Below(f.mask.n_groups()));
    Bytes key(16), wrong(16);
    for (auto& k : key) k = static_cast<uint8_t>(rng.Next());
    for (auto& k : wrong) k = static_cast<uint8_t>(rng.Next());

    const auto plain = ssb::EncodeImage(f.image, f.mask, weights, cfg);
    ssb::EncodeOptions eo;
    eo.keys[target] = key;
    const auto enc = ssb::EncodeImage(f.image, f.mask, weights, cfg, eo);
    const long delta = std::labs(static_cast<long>(enc.ssb.size()) -
                                 static_cast<long>(plain.ssb.size()));
    max_delta = std::max(max_delta, delta);
    if (delta <= 1) ++length_ok;

    ssb::DecodeOptions right, bad;
    right.synthesize = bad.synthesize = false;
    right.keys[target] = key;
    bad.keys[target] = wrong;
    const auto ok = ssb::DecodeGroups(enc.ssb, std::nullopt, weights, cfg, right);
    if (ok.y_hat == plain.y_hat && ok.warnings.empty()) ++identity;

    const auto garbled = ssb::DecodeGroups(enc.ssb, std::nullopt, weights, cfg, bad);
    const ssb::IdGrid cell_groups = ssb::Downsample(f.mask, 16);
    const auto cells = ssb::GroupCells(cell_groups, target);
    const double fraction =
        static_cast<double>(DifferingCells(garbled.y_hat, plain.y_hat, cells)) / cells.size();
    min_fraction = std::min(min_fraction, fraction);
    if (fraction >= 0.5) ++scrambled;
    bool rest = true;
    for (int g = 0; g < f.mask.n_groups(); ++g) {
      if (g == target) continue;
      if (DifferingCells(garbled.y_hat, plain.y_hat,
                         ssb::GroupCells(cell_groups, static_cast<uint16_t>(g))) != 0)
        rest = false;
    }
    if (rest) ++others_exact;
  }
  Report(identity == 100 && scrambled == 100 && others_exact == 100 && length_ok == 100,
         "encryption",
         Format("identity %d/100, wrong key alters >= 50%% of cells %d/100 (min %.2f), other "
                "groups exact %d/100, length change <= 1 byte %d/100 (max %ld), %.1f s",
                identity, scrambled, min_fraction, others_exact, length_ok, max_delta,
                Seconds(start)));
}

void Metrics() {
  ssb::Image a(64, 64, 100), b(64, 64, 101);
  const double psnr = ssb::Psnr(a, b, ssb::RegionSpec::Full());
  const double bpp = ssb::Bpp(1000, 50 * 50);
  Report(std::fabs(psnr - 48.13) <= 0.01 && bpp == 0.4, "metrics",
         Format("uniform error 1 psnr %.4f dB (48.13 +- 0.01), bpp %.4f (0.4000)", psnr, bpp));
}

ssb::GroupMask GoldenMask() {
  const auto ann = ssb::ParseAnnotations(
      R"({"width": 256, "height": 256, "regions": [
           {"region_id": 1, "label": "person", "bbox": [40, 40, 70, 90]},
           {"region_id": 2, "label": "dog", "bbox": [150, 120, 60, 60]}]})");
  return ssb::BuildMask(ann, 32, ssb::GroupPolicy::kMergeOverlaps);
}

void Overhead(const ssb::ModelWeights& weights, const ssb::CodecConfig& cfg) {
  const ssb::GroupMask mask = GoldenMask();
  const auto enc =
      ssb::EncodeImage(ssb::testing::RandomImage(256, 256, 3), mask, weights, cfg);
  const ssb::SsbFile f = ssb::ReadSsb(enc.ssb);
  const size_t mask_bytes = 4 + f.mask_rle.size();
  const size_t table = f.groups.size() * ssb::kRecordBytes;
  const size_t total = ssb::kHeaderBytes + f.presence.size() + mask_bytes + table;
  Report(f.header.n_groups == 3 && total <= 600, "overhead",
         Format("%d groups: header %zu + mask %zu + table %zu = %zu bytes (limit 600); "
                "hyper latent %zu bytes not included",
                f.header.n_groups, ssb::kHeaderBytes, mask_bytes, table, total,
                4 + f.z_stream.size()));
}

void Throughput(const ssb::ModelWeights& weights, const ssb::CodecConfig& cfg) {
  const ssb::GroupMask mask = GoldenMask();
  const Tensor image = ssb::testing::RandomImage(256, 256, 4);
  const auto start = Clock::now();
  const auto enc = ssb::EncodeImage(image, mask, weights, cfg);
  const double t_enc = Seconds(start);
  const auto dec = ssb::DecodeGroups(enc.ssb, std::nullopt, weights, cfg);
  const double t = Seconds(start);
  Report(t < 10.0 && dec.warnings.empty(), "throughput",
         Format("256x256 encode %.2f s + decode %.2f s = %.2f s single-threaded (limit 10 s)",
                t_enc, t - t_enc, t));
}

}  // namespace

int main() {
  try {
    const ssb::CodecConfig cfg;  // default configuration
    const ssb::ModelWeights weights = ssb::ModelWeights::Random(cfg, 2024);
    EncodeIndependence(weights, cfg);
    SelectiveDecode(weights, cfg);
    NegativeControl(weights, cfg);
    EntropyRoundTrip();
    ContainerIntegrity(weights, cfg);
    Encryption(weights, cfg);
    Metrics();
    Overhead(weights, cfg);
    Throughput(weights, cfg);
  } catch (const std::exception& e) {
    std::printf("FAIL harness: %s\n", e.what());
    return 1;
  }
  return failures == 0 ? 0 : 1;
}
