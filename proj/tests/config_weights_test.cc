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

#include <string>
#include <vector>

#include "doctest.h"
#include "ssb/byte_io.h"
#include "ssb/config.h"
#include "ssb/error.h"
#include "ssb/weights.h"
#include "test_util.h"

namespace {

ssb::ErrorCode CodeOf(auto&& fn) {
  try {
    fn();
  } catch (const ssb::Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ssb::ErrorCode::kIo;
}

// Hand-built single-tensor SSWT file.
ssb::Bytes OneTensorFile() {
  ssb::ByteWriter w;
  w.Append(std::string_view("SSWT"));
  w.U8(1);
  w.U32(1);
  w.U16(3);
  w.Append(std::string_view("abc"));
  w.U8(2);
  w.U32(1);
  w.U32(2);
  w.F32(1.5f);
  w.F32(-2.0f);
  const uint64_t digest = ssb::Fnv1a64(w.bytes());
  w.U64(digest);
  return w.Take();
}

}  // namespace

TEST_CASE("default config and slice widths") {
  const ssb::CodecConfig cfg;
  cfg.Validate();
  CHECK(cfg.SliceWidths() == std::vector<int>{3, 3, 3, 3, 3, 3, 3, 3, 3, 5});
  CHECK(cfg.SliceOffsets() == std::vector<int>{0, 3, 6, 9, 12, 15, 18, 21, 24, 27});
  CHECK(cfg.sigma_min == doctest::Approx(0.11));
}

TEST_CASE("config text round trip") {
  ssb::CodecConfig cfg = ssb::testing::TinyConfig();
  cfg.charm_enabled = false;
  cfg.sigma_min = 0.2f;
  CHECK(ssb::CodecConfig::Parse(cfg.Serialize()) == cfg);

  const auto parsed = ssb::CodecConfig::Parse(
      "# comment\nslices = 4   # trailing\n\nlatent_channels=16\ncharm_enabled = false\n");
  CHECK(parsed.slices == 4);
  CHECK(parsed.latent_channels == 16);
  CHECK_FALSE(parsed.charm_enabled);
  CHECK(parsed.window == 4);
}

TEST_CASE("config errors") {
  CHECK(CodeOf([] { ssb::CodecConfig::Parse("bogus = 1\n"); }) == ssb::ErrorCode::kConfig);
  CHECK(CodeOf([] { ssb::CodecConfig::Parse("slices = 2\nslices = 3\n"); }) ==
        ssb::ErrorCode::kConfig);
  CHECK(CodeOf([] { ssb::CodecConfig::Parse("slices 3\n"); }) == ssb::ErrorCode::kConfig);
  CHECK(CodeOf([] { ssb::CodecConfig::Parse("window = x\n"); }) == ssb::ErrorCode::kConfig);
  ssb::CodecConfig bad;
  bad.slices = 40;
  CHECK(CodeOf([&] { bad.Validate(); }) == ssb::ErrorCode::kConfig);
  bad = ssb::CodecConfig();
  bad.heads = {2, 2, 5, 4};
  CHECK(CodeOf([&] { bad.Validate(); }) == ssb::ErrorCode::kConfig);
  bad = ssb::CodecConfig();
  bad.block_size = 24;
  CHECK(CodeOf([&] { bad.Validate(); }) == ssb::ErrorCode::kConfig);
  CHECK(CodeOf([] { ssb::LoadConfig("/nonexistent/cfg.txt"); }) == ssb::ErrorCode::kIo);
}

TEST_CASE("weight manifest") {
  const ssb::CodecConfig cfg;
  const auto manifest = ssb::WeightManifest(cfg);
  auto find = [&](const std::string& name) {
    for (const auto& s : manifest) {
      if (s.name == name) return s.shape;
    }
    return std::vector<int>{};
  };
  CHECK(manifest.front().name == "g_a.down0.weight");
  CHECK(find("g_a.down0.weight") == std::vector<int>{48, 12, 1, 1});
  CHECK(find("g_a.stage2.block1.attn.qkv.weight") == std::vector<int>{288, 96});
  CHECK(find("g_a.stage2.block1.attn.rel_pos") == std::vector<int>{49, 4});
  CHECK(find("g_a.stage3.block0.mlp.fc1.weight") == std::vector<int>{512, 128});
  CHECK(find("g_a.out.weight") == std::vector<int>{32, 128, 1, 1});
  CHECK(find("g_s.up0.weight") == std::vector<int>{12, 48, 1, 1});
  CHECK(find("h_a.conv0.weight") == std::vector<int>{48, 32, 3, 3});
  CHECK(find("h_s.deconv1.weight") == std::vector<int>{48, 64, 4, 4});
  CHECK(find("charm.slice9.conv0.weight") == std::vector<int>{48, 64 + 27, 1, 1});
  CHECK(find("charm.slice9.conv1.weight") == std::vector<int>{10, 48, 1, 1});
  CHECK(find("prior.scale") == std::vector<int>{48});

  ssb::CodecConfig hyper_only;
  hyper_only.charm_enabled = false;
  for (const auto& s : ssb::WeightManifest(hyper_only)) {
    CHECK(s.name.rfind("charm.", 0) == std::string::npos);
  }
}

TEST_CASE("seeded weights are deterministic and serialize losslessly") {
  const auto cfg = ssb::testing::TinyConfig();
  const auto a = ssb::ModelWeights::Random(cfg, 5);
  const auto b = ssb::ModelWeights::Random(cfg, 5);
  const auto c = ssb::ModelWeights::Random(cfg, 6);
  a.CheckMatches(cfg);
  CHECK(a.Serialize() == b.Serialize());
  CHECK(a.Digest() != c.Digest());
  const auto bytes = a.Serialize();
  const auto back = ssb::ModelWeights::Deserialize(bytes);
  CHECK(back.Serialize() == bytes);
  CHECK(back.Digest() == a.Digest());
  // The trailing digest is FNV-1a-64 of everything before it.
  ssb::ByteReader r{std::span<const uint8_t>(bytes).last(8)};
  CHECK(r.U64() == ssb::Fnv1a64(std::span(bytes).first(bytes.size() - 8)));
  CHECK(a.Digest() == ssb::Fnv1a64(std::span(bytes).first(bytes.size() - 8)));
}

TEST_CASE("hand-built SSWT file") {
  const auto w = ssb::ModelWeights::Deserialize(OneTensorFile());
  REQUIRE(w.entries().size() == 1);
  const ssb::Tensor& t = w.Get("abc");
  CHECK(t.shape() == std::vector<int>{1, 2});
  CHECK(t[0] == 1.5f);
  CHECK(t[1] == -2.0f);
  CHECK(w.Serialize() == OneTensorFile());
}

TEST_CASE("corrupt weight files are rejected") {
  const auto good = OneTensorFile();
  auto flipped = good;
  flipped[10] ^= 1;
  CHECK(CodeOf([&] { ssb::ModelWeights::Deserialize(flipped); }) ==
        ssb::ErrorCode::kCompatibility);
  for (size_t cut = 0; cut < good.size(); ++cut) {
    CHECK_THROWS_AS(ssb::ModelWeights::Deserialize(std::span(good).first(cut)), ssb::Error);
  }
  const auto cfg = ssb::testing::TinyConfig();
  CHECK(CodeOf([&] { ssb::ModelWeights::Deserialize(good).CheckMatches(cfg); }) ==
        ssb::ErrorCode::kCompatibility);
  auto other = cfg;
  other.latent_channels = 12;
  CHECK(CodeOf([&] { ssb::ModelWeights::Random(cfg, 1).CheckMatches(other); }) ==
        ssb::ErrorCode::kCompatibility);
}
