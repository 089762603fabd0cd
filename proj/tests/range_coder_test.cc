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

#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "ssb/error.h"
#include "ssb/range_coder.h"
#include "ssb/rng.h"

namespace {

using ssb::CdfTables;

struct Sequence {
  std::vector<int32_t> residuals;
  std::vector<uint8_t> scales;
};

// Residuals drawn from a discretized Gaussian of scale sigma, clamped.
Sequence RandomSequence(ssb::SplitMix64& rng, const CdfTables& t, size_t n, double sigma) {
  Sequence s;
  const uint8_t idx = static_cast<uint8_t>(t.ScaleIndex(sigma));
  for (size_t i = 0; i < n; ++i) {
    const double u1 = rng.NextDouble() + 1e-300, u2 = rng.NextDouble();
    const double g = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    s.residuals.push_back(static_cast<int32_t>(
        std::clamp<long>(std::lround(g * sigma), -t.bound(), t.bound())));
    s.scales.push_back(idx);
  }
  return s;
}

// Code length implied directly by the table frequencies.
double IdealBits(const Sequence& s, const CdfTables& t) {
  double bits = 0.0;
  for (size_t i = 0; i < s.residuals.size(); ++i) {
    const auto cdf = t.cdf(s.scales[i]);
    const uint32_t f = cdf[s.residuals[i] + t.bound() + 1] - cdf[s.residuals[i] + t.bound()];
    bits -= std::log2(f / 65536.0);
  }
  return bits;
}

}  // namespace

TEST_CASE("cdf tables") {
  const CdfTables t = CdfTables::Build(0.11, 64);
  CHECK(t.scale(0) == 0.11);
  CHECK(t.scale(ssb::kNumScales - 1) == 64.0);
  for (int i = 1; i < ssb::kNumScales; ++i) {
    CHECK(t.scale(i) > t.scale(i - 1));
    CHECK(t.scale(i) / t.scale(i - 1) == doctest::Approx(std::pow(64.0 / 0.11, 1.0 / 63)));
  }
  for (int i = 0; i < ssb::kNumScales; ++i) {
    const auto cdf = t.cdf(i);
    REQUIRE(cdf.size() == 130);
    CHECK(cdf.front() == 0);
    CHECK(cdf.back() == 65536);
    for (size_t k = 1; k < cdf.size(); ++k) REQUIRE(cdf[k] > cdf[k - 1]);
    for (int r = 1; r <= 64; ++r) REQUIRE(t.freq(i, r) == t.freq(i, -r));
  }
  // Erf oracle: at sigma_min the zero bin holds erf(0.5 / (0.11 * sqrt 2)) of the mass.
  const double centre = std::erf(0.5 / (0.11 * std::sqrt(2.0)));
  CHECK(centre >= 0.99);
  CHECK(t.freq(0, 0) / 65536.0 >= 0.99);
  CHECK(t.freq(0, 0) / 65536.0 == doctest::Approx(centre).epsilon(1e-3));
  // A wide table tracks the Gaussian bin mass.
  const double p3 = 0.5 * (std::erfc(2.5 / (64 * std::sqrt(2.0))) - std::erfc(3.5 / (64 * std::sqrt(2.0))));
  CHECK(t.freq(63, 3) == std::lround(p3 * 65536));
}

TEST_CASE("scale index is a ceiling match") {
  const CdfTables t = CdfTables::Build(0.11, 64);
  CHECK(t.ScaleIndex(0.0) == 0);
  CHECK(t.ScaleIndex(0.11) == 0);
  CHECK(t.ScaleIndex(t.scale(5)) == 5);
  CHECK(t.ScaleIndex(std::nextafter(t.scale(5), 100.0)) == 6);
  CHECK(t.ScaleIndex(1e6) == ssb::kNumScales - 1);
  CHECK(t.scale(t.ScaleIndex(3.3)) >= 3.3);
  CHECK(t.scale(t.ScaleIndex(3.3) - 1) < 3.3);
}

TEST_CASE("empty sequence") {
  const CdfTables t = CdfTables::Build(0.11, 64);
  const auto bytes = ssb::EncodeSymbols({}, {}, t);
  CHECK(bytes.size() <= 4);
  CHECK(ssb::DecodeSymbols(bytes, {}, t).empty());
}

TEST_CASE("round trips") {
  const CdfTables t = CdfTables::Build(0.11, 64);
  ssb::SplitMix64 rng(77);
  Sequence big;
  for (int i = 0; i < 10000; ++i) {
    const uint8_t idx = static_cast<uint8_t>(rng.Below(ssb::kNumScales));
    big.scales.push_back(idx);
    big.residuals.push_back(static_cast<int32_t>(rng.Below(129)) - 64);
  }
  const auto bytes = ssb::EncodeSymbols(big.residuals, big.scales, t);
  CHECK(ssb::DecodeSymbols(bytes, big.scales, t) == big.residuals);
  CHECK(ssb::EncodeSymbols(big.residuals, big.scales, t) == bytes);

  for (int trial = 0; trial < 200; ++trial) {
    const double sigma = 0.11 * std::pow(64 / 0.11, rng.NextDouble());
    const Sequence s = RandomSequence(rng, t, rng.Below(3000), sigma);
    const auto b = ssb::EncodeSymbols(s.residuals, s.scales, t);
    REQUIRE(ssb::DecodeSymbols(b, s.scales, t) == s.residuals);
  }
}

TEST_CASE("carry propagation") {
  const CdfTables t = CdfTables::Build(0.11, 64);
  ssb::SplitMix64 rng(5);
  // Long runs of near-certain symbols followed by rare ones push 0xff bytes
  // through the cache.
  for (int trial = 0; trial < 50; ++trial) {
    Sequence s;
    for (int i = 0; i < 5000; ++i) {
      const bool rare = rng.Below(200) == 0;
      s.scales.push_back(0);
      s.residuals.push_back(rare ? (rng.Below(2) ? 64 : -64) : 0);
    }
    const auto b = ssb::EncodeSymbols(s.residuals, s.scales, t);
    REQUIRE(ssb::DecodeSymbols(b, s.scales, t) == s.residuals);
  }
}

TEST_CASE("coded length tracks the table entropy at sigma 1") {
  const CdfTables t = CdfTables::Build(0.11, 64);
  ssb::SplitMix64 rng(31);
  for (size_t n : {100u, 1000u, 20000u}) {
    const Sequence s = RandomSequence(rng, t, n, 1.0);
    const double ideal = IdealBits(s, t);
    CHECK(ideal == doctest::Approx(ssb::TableBits(s.residuals, s.scales, t)));
    const double actual = 8.0 * ssb::EncodeSymbols(s.residuals, s.scales, t).size();
    CHECK(std::fabs(actual - ideal) <= 0.01 * ideal + 32);
  }
}

TEST_CASE("decoder verification") {
  const CdfTables t = CdfTables::Build(0.11, 64);
  ssb::SplitMix64 rng(8);
  int detected = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Sequence s = RandomSequence(rng, t, 500, 4.0);
    const auto b = ssb::EncodeSymbols(s.residuals, s.scales, t);
    ssb::RangeDecoder ok(b);
    for (auto idx : s.scales) ok.Decode(t.cdf(idx));
    CHECK(ok.Verified());
    // Decoding against other tables.
    ssb::RangeDecoder wrong(b);
    for (size_t i = 0; i < s.scales.size(); ++i) wrong.Decode(t.cdf(i % 2 ? 10 : 50));
    detected += wrong.Verified() ? 0 : 1;
  }
  CHECK(detected >= 99);

  const ssb::Bytes junk{0xff, 0xff, 0xff, 0xff};
  const std::vector<uint8_t> one{0};
  CHECK_THROWS_AS(ssb::DecodeSymbols(junk, one, t), ssb::Error);
  const Sequence s = RandomSequence(rng, t, 50, 2.0);
  auto b = ssb::EncodeSymbols(s.residuals, s.scales, t);
  b.push_back(0x42);
  CHECK_THROWS_AS(ssb::DecodeSymbols(b, s.scales, t), ssb::Error);
  CHECK(ssb::DecodeSymbols(b, s.scales, t, false).size() == s.scales.size());
}

TEST_CASE("encode rejects invalid symbols") {
  const CdfTables t = CdfTables::Build(0.11, 64);
  const std::vector<int32_t> r{65};
  const std::vector<uint8_t> idx{0};
  CHECK_THROWS_AS(ssb::EncodeSymbols(r, idx, t), ssb::Error);
  const std::vector<int32_t> r0{0};
  const std::vector<uint8_t> bad{64};
  CHECK_THROWS_AS(ssb::EncodeSymbols(r0, bad, t), ssb::Error);
  CHECK_THROWS_AS(CdfTables::Build(0.0, 64), ssb::Error);
}
