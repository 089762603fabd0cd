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

// Distortion and rate metrics over a region of interest.

#ifndef SSB_METRICS_H_
#define SSB_METRICS_H_

#include <cstdint>
#include <limits>
#include <set>
#include <vector>

#include "ssb/group_mask.h"
#include "ssb/image.h"

namespace ssb {

// A pixel set: the full image, a union of boxes, or the blocks of a set of
// groups (block granularity).
class RegionSpec {
 public:
  static RegionSpec Full();
  static RegionSpec Boxes(std::vector<BBox> boxes);
  static RegionSpec Groups(const GroupMask& mask, std::set<uint16_t> groups);

  // Membership over an image of the given extent; throws kDimension when the
  // region is empty.
  std::vector<uint8_t> Resolve(int width, int height) const;
  size_t PixelCount(int width, int height) const;

 private:
  enum class Kind { kFull, kBoxes, kGroups };
  Kind kind_ = Kind::kFull;
  std::vector<BBox> boxes_;
  const GroupMask* mask_ = nullptr;
  std::set<uint16_t> groups_;
};

// Reported for identical images.
inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

double Mse(const Image& ref, const Image& rec, const RegionSpec& region);
double Psnr(const Image& ref, const Image& rec, const RegionSpec& region);
double PsnrFromMse(double mse);
double Bpp(uint64_t bits, size_t pixels);

}  // namespace ssb

#endif  // SSB_METRICS_H_
