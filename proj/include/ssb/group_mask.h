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

// Block-wise group masks: construction from annotations, downsampling to
// feature resolutions, and run-length serialization.

#ifndef SSB_GROUP_MASK_H_
#define SSB_GROUP_MASK_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ssb/byte_io.h"

namespace ssb {

// Row-major grid of group ids at some resolution (block grid or feature grid).
struct IdGrid {
  int height = 0;
  int width = 0;
  std::vector<uint16_t> ids;

  IdGrid() = default;
  IdGrid(int h, int w, uint16_t fill = 0)
      : height(h), width(w), ids(static_cast<size_t>(h) * w, fill) {}

  uint16_t at(int r, int c) const { return ids[static_cast<size_t>(r) * width + c]; }
  uint16_t& at(int r, int c) { return ids[static_cast<size_t>(r) * width + c]; }
  size_t cells() const { return ids.size(); }

  friend bool operator==(const IdGrid&, const IdGrid&) = default;
};

// The positions of one group (m_i) on a grid.
struct GroupIndicator {
  uint16_t group_id = 0;
  int height = 0;
  int width = 0;
  std::vector<uint8_t> selected;

  bool at(int r, int c) const { return selected[static_cast<size_t>(r) * width + c] != 0; }
};

class GroupMask {
 public:
  GroupMask() = default;

  // Validates the invariants: block > 0, grid extent matches the padded image,
  // ids < n_groups, and every id in [1, n_groups) present. Group 0 is the
  // background and may be empty when annotations cover every block.
  static GroupMask Create(int image_h, int image_w, int block_size, int n_groups,
                          std::vector<uint16_t> grid);
  // Single background group.
  static GroupMask Uniform(int image_h, int image_w, int block_size);

  int image_h() const { return image_h_; }
  int image_w() const { return image_w_; }
  int padded_h() const { return grid_.height * block_; }
  int padded_w() const { return grid_.width * block_; }
  int block_size() const { return block_; }
  int n_groups() const { return n_groups_; }
  const IdGrid& grid() const { return grid_; }

  uint16_t BlockId(int block_row, int block_col) const { return grid_.at(block_row, block_col); }
  // Pixel coordinates may fall in the padding; padded pixels belong to the
  // block that contains them (the nearest in-image block).
  uint16_t PixelId(int y, int x) const { return grid_.at(y / block_, x / block_); }

  GroupIndicator Indicator(uint16_t group_id) const;
  // Number of blocks assigned to each group.
  std::vector<size_t> BlockCounts() const;

  friend bool operator==(const GroupMask&, const GroupMask&) = default;

 private:
  int image_h_ = 0;
  int image_w_ = 0;
  int block_ = 0;
  int n_groups_ = 0;
  IdGrid grid_;
};

// Smallest multiple of block >= extent.
int PaddedExtent(int extent, int block);

struct BBox {
  int x = 0, y = 0, w = 0, h = 0;
};

// Binary raster in row-major order at annotation resolution.
struct Bitmap {
  int height = 0, width = 0;
  std::vector<uint8_t> bits;
};

struct Region {
  int64_t region_id = 0;
  std::string label;
  std::optional<BBox> bbox;
  std::optional<Bitmap> bitmap;
};

struct AnnotationSet {
  int width = 0;
  int height = 0;
  std::vector<Region> regions;
};

// Parses the JSON annotation document. rle_mask counts follow the COCO
// uncompressed convention: column-major, alternating runs starting with unset.
AnnotationSet ParseAnnotations(const std::string& json_text);
// Checks geometry bounds and id uniqueness; throws kAnnotation.
void ValidateAnnotations(const AnnotationSet& ann);

enum class GroupPolicy { kMergeOverlaps, kSeparate };

GroupMask BuildMask(const AnnotationSet& ann, int block_size, GroupPolicy policy,
                    int model_stride = 16);

// Grid at feature resolution padded/factor; cell (r, c) takes the id of the
// block containing pixel (r * factor, c * factor).
IdGrid Downsample(const GroupMask& mask, int factor);
// Coarsens a grid by taking the top-left cell of each factor x factor tile.
IdGrid DownsampleGrid(const IdGrid& grid, int factor);
// Replicates each cell factor x factor times.
IdGrid UpsampleGrid(const IdGrid& grid, int factor);

Bytes SerializeRle(const GroupMask& mask);
GroupMask DeserializeRle(std::span<const uint8_t> bytes);

}  // namespace ssb

#endif  // SSB_GROUP_MASK_H_
