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

#include "ssb/metrics.h"

#include <algorithm>
#include <cmath>

#include "ssb/error.h"

namespace ssb {

RegionSpec RegionSpec::Full() { return RegionSpec(); }

RegionSpec RegionSpec::Boxes(std::vector<BBox> boxes) {
  RegionSpec r;
  r.kind_ = Kind::kBoxes;
  r.boxes_ = std::move(boxes);
  return r;
}

RegionSpec RegionSpec::Groups(const GroupMask& mask, std::set<uint16_t> groups) {
  RegionSpec r;
  r.kind_ = Kind::kGroups;
  r.mask_ = &mask;
  r.groups_ = std::move(groups);
  return r;
}

std::vector<uint8_t> RegionSpec::Resolve(int width, int height) const {
  std::vector<uint8_t> in(static_cast<size_t>(width) * height, 0);
  switch (kind_) {
    case Kind::kFull:
      std::fill(in.begin(), in.end(), 1);
      break;
    case Kind::kBoxes:
      for (const BBox& b : boxes_) {
        const int x0 = std::max(b.x, 0), y0 = std::max(b.y, 0);
        const int x1 = std::min(b.x + b.w, width), y1 = std::min(b.y + b.h, height);
        for (int y = y0; y < y1; ++y) {
          for (int x = x0; x < x1; ++x) in[static_cast<size_t>(y) * width + x] = 1;
        }
      }
      break;
    case Kind::kGroups:
      if (mask_->image_w() != width || mask_->image_h() != height) {
        Fail(ErrorCode::kDimension, "mask extent does not match the image");
      }
      for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
          in[static_cast<size_t>(y) * width + x] = groups_.count(mask_->PixelId(y, x)) ? 1 : 0;
        }
      }
      break;
  }
  if (std::find(in.begin(), in.end(), 1) == in.end()) Fail(ErrorCode::kDimension, "empty region");
  return in;
}

size_t RegionSpec::PixelCount(int width, int height) const {
  const auto in = Resolve(width, height);
  return static_cast<size_t>(std::count(in.begin(), in.end(), 1));
}

double Mse(const Image& ref, const Image& rec, const RegionSpec& region) {
  if (ref.width != rec.width || ref.height != rec.height) {
    Fail(ErrorCode::kDimension, "images differ in size");
  }
  const auto in = region.Resolve(ref.width, ref.height);
  uint64_t sum = 0, count = 0;
  for (size_t p = 0; p < in.size(); ++p) {
    if (!in[p]) continue;
    for (int c = 0; c < 3; ++c) {
      const int d = static_cast<int>(ref.rgb[p * 3 + c]) - rec.rgb[p * 3 + c];
      sum += static_cast<uint64_t>(d * d);
    }
    count += 3;
  }
  return static_cast<double>(sum) / static_cast<double>(count);
}

double PsnrFromMse(double mse) {
  if (mse == 0.0) return kPsnrIdentical;
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

double Psnr(const Image& ref, const Image& rec, const RegionSpec& region) {
  return PsnrFromMse(Mse(ref, rec, region));
}

double Bpp(uint64_t bits, size_t pixels) {
  if (pixels == 0) Fail(ErrorCode::kDimension, "empty region");
  return static_cast<double>(bits) / static_cast<double>(pixels);
}

}  // namespace ssb
