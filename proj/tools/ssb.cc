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

// ssb: command-line front end for the semantically structured codec.

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ssb/codec.h"
#include "ssb/config.h"
#include "ssb/container.h"
#include "ssb/error.h"
#include "ssb/group_mask.h"
#include "ssb/image.h"
#include "ssb/metrics.h"
#include "ssb/weights.h"

namespace {

using ssb::Bytes;
using ssb::ErrorCode;
using ssb::Fail;

std::set<uint16_t> ParseGroupList(const std::string& text) {
  std::set<uint16_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    size_t used = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size() || v > 0xffff) {
      Fail(ErrorCode::kSelection, "bad group id '" + item + "'");
    }
    out.insert(static_cast<uint16_t>(v));
  }
  if (out.empty()) Fail(ErrorCode::kSelection, "empty group list");
  return out;
}

// "group=path" pairs; the file contents are the key bytes.
std::map<uint16_t, Bytes> LoadKeys(const std::vector<std::string>& specs) {
  std::map<uint16_t, Bytes> keys;
  for (const auto& spec : specs) {
    const size_t eq = spec.find('=');
    if (eq == std::string::npos) Fail(ErrorCode::kSelection, "expected group=keyfile, got " + spec);
    const auto ids = ParseGroupList(spec.substr(0, eq));
    Bytes key = ssb::ReadFile(spec.substr(eq + 1));
    if (key.empty()) Fail(ErrorCode::kIo, "key file is empty: " + spec.substr(eq + 1));
    for (uint16_t id : ids) keys[id] = key;
  }
  return keys;
}

ssb::CodecConfig LoadConfigOrDefault(const std::string& path) {
  ssb::CodecConfig cfg = path.empty() ? ssb::CodecConfig() : ssb::LoadConfig(path);
  cfg.Validate();
  return cfg;
}

ssb::BBox ParseBox(const std::string& text) {
  std::vector<int> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      v.push_back(std::stoi(item));
    } catch (const std::exception&) {
      Fail(ErrorCode::kDimension, "bad box '" + text + "'");
    }
  }
  if (v.size() != 4 || v[2] <= 0 || v[3] <= 0) Fail(ErrorCode::kDimension, "box must be x,y,w,h");
  return {v[0], v[1], v[2], v[3]};
}

void PrintDouble(const char* key, double v) {
  if (std::isinf(v)) {
    std::printf("%s=inf\n", key);
  } else {
    std::printf("%s=%.6f\n", key, v);
  }
}

// ---------------------------------------------------------------------------

struct InitArgs {
  std::string config, config_out, out;
  uint64_t seed = 1;
};

void RunInit(const InitArgs& a) {
  const auto cfg = LoadConfigOrDefault(a.config);
  const auto weights = ssb::ModelWeights::Random(cfg, a.seed);
  if (!a.config_out.empty()) {
    const std::string text = cfg.Serialize();
    ssb::WriteFileAtomic(a.config_out, Bytes(text.begin(), text.end()));
  }
  ssb::WriteFileAtomic(a.out, weights.Serialize());
  std::printf("tensors=%zu\nweights_digest=0x%016" PRIx64 "\n", weights.entries().size(),
              weights.Digest());
}

struct GenmaskArgs {
  std::string annotations, policy = "merge", out;
  int block = 32;
};

void RunGenmask(const GenmaskArgs& a) {
  const Bytes text = ssb::ReadFile(a.annotations);
  const auto ann = ssb::ParseAnnotations(std::string(text.begin(), text.end()));
  const auto policy =
      a.policy == "separate" ? ssb::GroupPolicy::kSeparate : ssb::GroupPolicy::kMergeOverlaps;
  const auto mask = ssb::BuildMask(ann, a.block, policy);
  ssb::WriteFileAtomic(a.out, ssb::SerializeRle(mask));
  std::printf("image_h=%d\nimage_w=%d\nblock_size=%d\nn_groups=%d\n", mask.image_h(),
              mask.image_w(), mask.block_size(), mask.n_groups());
  const auto counts = mask.BlockCounts();
  for (size_t g = 0; g < counts.size(); ++g) std::printf("group.%zu.blocks=%zu\n", g, counts[g]);
}

struct EncodeArgs {
  std::string image, mask, weights, config, out;
  std::vector<std::string> encrypt;
  bool no_gi = false, no_mask = false;
};

void RunEncode(const EncodeArgs& a) {
  const auto cfg = LoadConfigOrDefault(a.config);
  const auto weights = ssb::LoadWeights(a.weights);
  const ssb::Image img = ssb::ReadImage(a.image);
  ssb::GroupMask mask;
  if (a.no_mask) {
    mask = ssb::GroupMask::Uniform(img.height, img.width, cfg.block_size);
  } else {
    if (a.mask.empty()) Fail(ErrorCode::kConfig, "--mask is required unless --no-mask is given");
    mask = ssb::DeserializeRle(ssb::ReadFile(a.mask));
  }
  if (mask.image_h() != img.height || mask.image_w() != img.width) {
    Fail(ErrorCode::kDimension, "mask is for a " + std::to_string(mask.image_w()) + "x" +
                                    std::to_string(mask.image_h()) + " image, input is " +
                                    std::to_string(img.width) + "x" + std::to_string(img.height));
  }
  ssb::EncodeOptions opt;
  opt.mode = a.no_gi ? ssb::AttentionMode::kPlain : ssb::AttentionMode::kGroupIndependent;
  opt.keys = LoadKeys(a.encrypt);
  opt.threads = ssb::ThreadsFromEnv();
  const auto res = ssb::EncodeImage(ssb::ImageToTensor(img), mask, weights, cfg, opt);
  ssb::WriteFileAtomic(a.out, res.ssb);

  const size_t pixels = static_cast<size_t>(img.width) * img.height;
  std::printf("image_h=%d\nimage_w=%d\nn_groups=%d\n", img.height, img.width, mask.n_groups());
  for (const auto& [id, bytes] : res.group_bytes) {
    std::printf("group.%u.bits=%zu\n", id, bytes * 8);
  }
  std::printf("overhead_bits=%zu\ntotal_bits=%zu\n", res.overhead_bytes * 8, res.ssb.size() * 8);
  PrintDouble("bpp", ssb::Bpp(res.ssb.size() * 8, pixels));
  std::printf("clamp_events=%zu\n", res.clamp_events);
}

struct ExtractArgs {
  std::string in, groups, out;
};

void RunExtract(const ExtractArgs& a) {
  const Bytes out = ssb::ExtractGroups(ssb::ReadFile(a.in), ParseGroupList(a.groups));
  ssb::WriteFileAtomic(a.out, out);
  std::printf("bytes=%zu\n", out.size());
}

struct DecodeArgs {
  std::string in, groups = "all", weights, config, out;
  std::vector<std::string> keys;
  bool strict = false;
};

void RunDecode(const DecodeArgs& a) {
  const auto cfg = LoadConfigOrDefault(a.config);
  const auto weights = ssb::LoadWeights(a.weights);
  const Bytes file = ssb::ReadFile(a.in);
  std::optional<std::set<uint16_t>> groups;
  if (a.groups != "all") groups = ParseGroupList(a.groups);
  ssb::DecodeOptions opt;
  opt.keys = LoadKeys(a.keys);
  opt.strict = a.strict;
  opt.threads = ssb::ThreadsFromEnv();
  const auto res = ssb::DecodeGroups(file, groups, weights, cfg, opt);
  for (const auto& w : res.warnings) std::fprintf(stderr, "ssb: warning: %s\n", w.c_str());
  const ssb::Image img = ssb::TensorToImage(res.image);
  ssb::WriteImage(a.out, img);

  for (const auto& [id, bits] : res.group_bits) std::printf("group.%u.bits=%zu\n", id, bits);
  std::printf("overhead_bits=%zu\nfile_bits=%zu\n", res.overhead_bits, file.size() * 8);
  const auto roi = ssb::RegionSpec::Groups(res.mask, res.groups);
  const size_t roi_pixels = roi.PixelCount(img.width, img.height);
  std::printf("roi_pixels=%zu\n", roi_pixels);
  PrintDouble("roi_bpp", ssb::Bpp(file.size() * 8, roi_pixels));
  PrintDouble("bpp", ssb::Bpp(file.size() * 8, static_cast<size_t>(img.width) * img.height));
  std::printf("warnings=%zu\n", res.warnings.size());
}

void RunInspect(const std::string& path) {
  const Bytes bytes = ssb::ReadFile(path);
  const ssb::SsbFile f = ssb::ReadSsb(bytes);
  const auto& h = f.header;
  std::printf("file_bytes=%zu\n", bytes.size());
  std::printf("magic=SSB1\nversion=%u\nflags=0x%02x\n", h.version, h.flags);
  std::printf("image_h=%u\nimage_w=%u\nblock_size=%u\nn_groups=%u\n", h.image_h, h.image_w,
              h.block_size, h.n_groups);
  std::printf("latent_channels=%u\nslices=%u\nweights_digest=0x%016" PRIx64 "\n",
              h.latent_channels, h.slices, h.weights_digest);
  std::printf("header_bytes=%zu\npresence_bytes=%zu\n", ssb::kHeaderBytes, f.presence.size());
  std::printf("mask_bytes=%zu\nz_bytes=%zu\n", f.mask_rle.size() + 4, f.z_stream.size() + 4);
  std::printf("table_bytes=%zu\nblob_bytes=%zu\n", f.groups.size() * ssb::kRecordBytes,
              f.blob.size());
  const auto mask = ssb::FileMask(f);
  std::printf("mask_grid=%dx%d\n", mask.grid().height, mask.grid().width);
  const auto counts = mask.BlockCounts();
  for (size_t g = 0; g < counts.size(); ++g) {
    std::printf("mask.group.%zu.blocks=%zu\n", g, counts[g]);
  }
  std::printf("present_groups=%zu\n", f.groups.size());
  for (const auto& r : f.groups) {
    std::printf("group.%u.encrypted=%u\ngroup.%u.key_salt=0x%016" PRIx64
                "\ngroup.%u.offset=%" PRIu64 "\ngroup.%u.length=%u\n",
                r.group_id, r.encrypted, r.group_id, r.key_salt, r.group_id, r.offset,
                r.group_id, r.length);
  }
  std::printf("overhead_bytes=%zu\n", f.OverheadBytes());
}

struct MetricsArgs {
  std::string ref, rec, ssb_file, mask, groups;
  std::vector<std::string> boxes;
  int64_t bits = -1;
  bool csv = false;
};

void RunMetrics(const MetricsArgs& a) {
  const ssb::Image ref = ssb::ReadImage(a.ref);
  const ssb::Image rec = ssb::ReadImage(a.rec);
  ssb::GroupMask mask;
  uint64_t bits = 0;
  bool have_bits = false;
  if (!a.ssb_file.empty()) {
    const Bytes file = ssb::ReadFile(a.ssb_file);
    bits = file.size() * 8;
    have_bits = true;
    mask = ssb::FileMask(ssb::ReadSsb(file));
  }
  if (!a.mask.empty()) mask = ssb::DeserializeRle(ssb::ReadFile(a.mask));
  if (a.bits >= 0) {
    bits = static_cast<uint64_t>(a.bits);
    have_bits = true;
  }

  ssb::RegionSpec region = ssb::RegionSpec::Full();
  std::string region_name = "full";
  if (!a.boxes.empty()) {
    std::vector<ssb::BBox> boxes;
    for (const auto& b : a.boxes) boxes.push_back(ParseBox(b));
    region = ssb::RegionSpec::Boxes(std::move(boxes));
    region_name = "boxes";
  } else if (!a.groups.empty()) {
    if (mask.block_size() == 0) Fail(ErrorCode::kConfig, "--groups needs --mask or --ssb");
    region = ssb::RegionSpec::Groups(mask, ParseGroupList(a.groups));
    region_name = "groups";
  }
  const size_t pixels = region.PixelCount(ref.width, ref.height);
  const double mse = ssb::Mse(ref, rec, region);
  const double psnr = ssb::PsnrFromMse(mse);
  const double bpp = have_bits ? ssb::Bpp(bits, pixels) : 0.0;
  if (a.csv) {
    std::printf("region,pixels,mse,psnr,bits,bpp\n");
    std::printf("%s,%zu,%.6f,%s,%s,%s\n", region_name.c_str(), pixels, mse,
                std::isinf(psnr) ? "inf" : std::to_string(psnr).c_str(),
                have_bits ? std::to_string(bits).c_str() : "",
                have_bits ? std::to_string(bpp).c_str() : "");
    return;
  }
  std::printf("region=%s\npixels=%zu\n", region_name.c_str(), pixels);
  PrintDouble("mse", mse);
  PrintDouble("psnr", psnr);
  if (have_bits) {
    std::printf("bits=%" PRIu64 "\n", bits);
    PrintDouble("bpp", bpp);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semantically structured image codec"};
  app.require_subcommand(1);

  InitArgs init;
  auto* c_init = app.add_subcommand("init", "Write seeded random weights");
  c_init->add_option("--config", init.config, "Codec config file (defaults if omitted)");
  c_init->add_option("--seed", init.seed, "Initialization seed");
  c_init->add_option("--config-out", init.config_out, "Also write the effective config here");
  c_init->add_option("-o,--out", init.out, "Weights output (SSWT)")->required();

  GenmaskArgs gm;
  auto* c_gm = app.add_subcommand("genmask", "Build a group mask from annotations");
  c_gm->add_option("annotations,--annotations", gm.annotations, "Annotation JSON")->required();
  c_gm->add_option("--block", gm.block, "Block size in pixels (multiple of 16)");
  c_gm->add_option("--policy", gm.policy, "Overlap policy")
      ->check(CLI::IsMember({"merge", "separate"}));
  c_gm->add_option("-o,--out", gm.out, "Mask output")->required();

  EncodeArgs enc;
  auto* c_enc = app.add_subcommand("encode", "Encode an image into an SSB file");
  c_enc->add_option("--image", enc.image, "Input PPM or PNG")->required();
  c_enc->add_option("--mask", enc.mask, "Group mask file");
  c_enc->add_option("--weights", enc.weights, "Weights (SSWT)")->required();
  c_enc->add_option("--config", enc.config, "Codec config file");
  c_enc->add_option("--encrypt", enc.encrypt, "group=keyfile, repeatable");
  c_enc->add_flag("--no-gi", enc.no_gi, "Plain window attention (ablation)");
  c_enc->add_flag("--no-mask", enc.no_mask, "Single background group (ablation)");
  c_enc->add_option("-o,--out", enc.out, "SSB output")->required();

  ExtractArgs ext;
  auto* c_ext = app.add_subcommand("extract", "Keep only some groups of an SSB file");
  c_ext->add_option("--in", ext.in, "Input SSB")->required();
  c_ext->add_option("--groups", ext.groups, "Comma-separated group ids")->required();
  c_ext->add_option("-o,--out", ext.out, "Output SSB")->required();

  DecodeArgs dec;
  auto* c_dec = app.add_subcommand("decode", "Reconstruct the selected groups");
  c_dec->add_option("--in", dec.in, "Input SSB")->required();
  c_dec->add_option("--groups", dec.groups, "'all' or comma-separated group ids");
  c_dec->add_option("--key", dec.keys, "group=keyfile, repeatable");
  c_dec->add_option("--weights", dec.weights, "Weights (SSWT)")->required();
  c_dec->add_option("--config", dec.config, "Codec config file");
  c_dec->add_flag("--strict", dec.strict, "Fail on missing keys or unverified streams");
  c_dec->add_option("-o,--out", dec.out, "Output image (.ppm or .png)")->required();

  std::string inspect_in;
  auto* c_ins = app.add_subcommand("inspect", "Dump the structure of an SSB file");
  c_ins->add_option("--in,in", inspect_in, "Input SSB")->required();

  MetricsArgs met;
  auto* c_met = app.add_subcommand("metrics", "PSNR and bpp over a region");
  c_met->add_option("--ref", met.ref, "Reference image")->required();
  c_met->add_option("--rec", met.rec, "Reconstructed image")->required();
  c_met->add_option("--ssb", met.ssb_file, "SSB file: bit count and mask");
  c_met->add_option("--mask", met.mask, "Mask file for --groups");
  c_met->add_option("--bits", met.bits, "Bit count (overrides --ssb)");
  c_met->add_option("--bbox", met.boxes, "x,y,w,h region box, repeatable");
  c_met->add_option("--groups", met.groups, "Region of these group ids");
  c_met->add_flag("--csv", met.csv, "Emit a CSV header and row");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*c_init) RunInit(init);
    if (*c_gm) RunGenmask(gm);
    if (*c_enc) RunEncode(enc);
    if (*c_ext) RunExtract(ext);
    if (*c_dec) RunDecode(dec);
    if (*c_ins) RunInspect(inspect_in);
    if (*c_met) RunMetrics(met);
  } catch (const ssb::Error& e) {
    std::fprintf(stderr, "ssb: error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "ssb: error: %s\n", e.what());
    return 1;
  }
  return 0;
}
