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

#include "ssb/group_mask.h"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "json.hpp"
#include "ssb/error.h"

namespace ssb {

namespace {

constexpr int kMaxGroups = 65535;
// Guards against absurd allocations when parsing untrusted masks.
constexpr uint64_t kMaxExtent = 1u << 20;
constexpr uint64_t kMaxGridCells = 1u << 24;

struct UnionFind {
  explicit UnionFind(size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  size_t Find(size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  }
  void Join(size_t a, size_t b) {
    a = Find(a);
    b = Find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::vector<size_t> parent;
};

// Per-block covered-pixel counts of one region over the block grid.
std::vector<int64_t> BlockCoverage(const Region& region, int rows, int cols, int block) {
  std::vector<int64_t> cover(static_cast<size_t>(rows) * cols, 0);
  if (region.bbox) {
    const BBox& b = *region.bbox;
    const int x1 = b.x + b.w - 1, y1 = b.y + b.h - 1;
    for (int br = b.y / block; br <= y1 / block; ++br) {
      const int oy0 = std::max(b.y, br * block), oy1 = std::min(y1, br * block + block - 1);
      for (int bc = b.x / block; bc <= x1 / block; ++bc) {
        const int ox0 = std::max(b.x, bc * block), ox1 = std::min(x1, bc * block + block - 1);
        cover[static_cast<size_t>(br) * cols + bc] +=
            static_cast<int64_t>(oy1 - oy0 + 1) * (ox1 - ox0 + 1);
      }
    }
  }
  if (region.bitmap) {
    const Bitmap& m = *region.bitmap;
    for (int y = 0; y < m.height; ++y) {
      for (int x = 0; x < m.width; ++x) {
        if (m.bits[static_cast<size_t>(y) * m.width + x]) {
          ++cover[static_cast<size_t>(y / block) * cols + x / block];
        }
      }
    }
  }
  return cover;
}

Bitmap DecodeCocoRle(const nlohmann::json& rle) {
  if (!rle.contains("counts") || !rle.contains("size")) {
    Fail(ErrorCode::kAnnotation, "rle_mask needs counts and size");
  }
  const auto& size = rle.at("size");
  if (!size.is_array() || size.size() != 2) Fail(ErrorCode::kAnnotation, "rle_mask size must be [h, w]");
  Bitmap m;
  m.height = size[0].get<int>();
  m.width = size[1].get<int>();
  if (m.height < 1 || m.width < 1) Fail(ErrorCode::kAnnotation, "rle_mask size must be positive");
  const uint64_t total = static_cast<uint64_t>(m.height) * m.width;
  if (total > kMaxGridCells * 64) Fail(ErrorCode::kAnnotation, "rle_mask too large");
  m.bits.assign(total, 0);
  uint64_t pos = 0;
  bool set = false;
  for (const auto& c : rle.at("counts")) {
    const int64_t run = c.get<int64_t>();
    if (run < 0 || pos + static_cast<uint64_t>(run) > total) {
      Fail(ErrorCode::kAnnotation, "rle_mask counts overrun the raster");
    }
    if (set) {
      for (uint64_t i = pos; i < pos + static_cast<uint64_t>(run); ++i) {
        const uint64_t x = i / m.height, y = i % m.height;
        m.bits[y * m.width + x] = 1;
      }
    }
    pos += static_cast<uint64_t>(run);
    set = !set;
  }
  if (pos != total) Fail(ErrorCode::kAnnotation, "rle_mask counts do not cover the raster");
  return m;
}

}  // namespace

int PaddedExtent(int extent, int block) { return (extent + block - 1) / block * block; }

GroupMask GroupMask::Create(int image_h, int image_w, int block_size, int n_groups,
                            std::vector<uint16_t> grid) {
  if (block_size < 1) Fail(ErrorCode::kDimension, "block size must be positive");
  if (image_h < 1 || image_w < 1) Fail(ErrorCode::kDimension, "image extent must be positive");
  if (n_groups < 1 || n_groups > kMaxGroups) Fail(ErrorCode::kCapacity, "group count out of range");
  GroupMask m;
  m.image_h_ = image_h;
  m.image_w_ = image_w;
  m.block_ = block_size;
  m.n_groups_ = n_groups;
  m.grid_.height = PaddedExtent(image_h, block_size) / block_size;
  m.grid_.width = PaddedExtent(image_w, block_size) / block_size;
  if (grid.size() != static_cast<size_t>(m.grid_.height) * m.grid_.width) {
    Fail(ErrorCode::kDimension, "grid size does not match padded image");
  }
  std::vector<uint8_t> seen(n_groups, 0);
  for (uint16_t id : grid) {
    if (id >= n_groups) Fail(ErrorCode::kFormat, "group id exceeds group count");
    seen[id] = 1;
  }
  for (int i = 1; i < n_groups; ++i) {
    if (!seen[i]) Fail(ErrorCode::kFormat, "group id without any block");
  }
  m.grid_.ids = std::move(grid);
  return m;
}

GroupMask GroupMask::Uniform(int image_h, int image_w, int block_size) {
  const size_t cells = static_cast<size_t>(PaddedExtent(image_h, block_size) / block_size) *
                       (PaddedExtent(image_w, block_size) / block_size);
  return Create(image_h, image_w, block_size, 1, std::vector<uint16_t>(cells, 0));
}

GroupIndicator GroupMask::Indicator(uint16_t group_id) const {
  GroupIndicator ind;
  ind.group_id = group_id;
  ind.height = grid_.height;
  ind.width = grid_.width;
  ind.selected.resize(grid_.cells());
  for (size_t i = 0; i < grid_.cells(); ++i) ind.selected[i] = grid_.ids[i] == group_id;
  return ind;
}

std::vector<size_t> GroupMask::BlockCounts() const {
  std::vector<size_t> counts(n_groups_, 0);
  for (uint16_t id : grid_.ids) ++counts[id];
  return counts;
}

// ---------------------------------------------------------------------------
// Annotations

AnnotationSet ParseAnnotations(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kAnnotation, std::string("malformed annotation document: ") + e.what());
  }
  AnnotationSet ann;
  try {
    ann.width = doc.at("width").get<int>();
    ann.height = doc.at("height").get<int>();
    if (doc.contains("regions")) {
      for (const auto& r : doc.at("regions")) {
        Region region;
        region.region_id = r.at("region_id").get<int64_t>();
        region.label = r.value("label", std::string());
        if (r.contains("bbox")) {
          const auto& b = r.at("bbox");
          if (!b.is_array() || b.size() != 4) Fail(ErrorCode::kAnnotation, "bbox must be [x, y, w, h]");
          region.bbox = BBox{b[0].get<int>(), b[1].get<int>(), b[2].get<int>(), b[3].get<int>()};
        }
        if (r.contains("rle_mask")) region.bitmap = DecodeCocoRle(r.at("rle_mask"));
        if (!region.bbox && !region.bitmap) {
          Fail(ErrorCode::kAnnotation, "region needs bbox or rle_mask");
        }
        ann.regions.push_back(std::move(region));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kAnnotation, std::string("bad annotation field: ") + e.what());
  }
  ValidateAnnotations(ann);
  return ann;
}

void ValidateAnnotations(const AnnotationSet& ann) {
  if (ann.width < 1 || ann.height < 1) Fail(ErrorCode::kAnnotation, "image extent must be positive");
  std::set<int64_t> ids;
  for (const Region& r : ann.regions) {
    if (!ids.insert(r.region_id).second) {
      Fail(ErrorCode::kAnnotation, "duplicate region_id " + std::to_string(r.region_id));
    }
    if (r.bbox) {
      const BBox& b = *r.bbox;
      if (b.w < 1 || b.h < 1 || b.x < 0 || b.y < 0 ||
          static_cast<int64_t>(b.x) + b.w > ann.width ||
          static_cast<int64_t>(b.y) + b.h > ann.height) {
        Fail(ErrorCode::kAnnotation,
             "bbox of region " + std::to_string(r.region_id) + " lies outside the image");
      }
    }
    if (r.bitmap && (r.bitmap->height != ann.height || r.bitmap->width != ann.width)) {
      Fail(ErrorCode::kAnnotation,
           "rle_mask of region " + std::to_string(r.region_id) + " does not match the image");
    }
  }
}

GroupMask BuildMask(const AnnotationSet& ann, int block_size, GroupPolicy policy,
                    int model_stride) {
  if (block_size < 1 || model_stride < 1 || block_size % model_stride != 0) {
    Fail(ErrorCode::kConfig, "block size must be a positive multiple of the model stride");
  }
  ValidateAnnotations(ann);
  const int rows = PaddedExtent(ann.height, block_size) / block_size;
  const int cols = PaddedExtent(ann.width, block_size) / block_size;
  const size_t cells = static_cast<size_t>(rows) * cols;

  // Regions in ascending region_id order; those covering no block are ignored.
  std::vector<const Region*> regions;
  for (const Region& r : ann.regions) regions.push_back(&r);
  std::sort(regions.begin(), regions.end(),
            [](const Region* a, const Region* b) { return a->region_id < b->region_id; });
  std::vector<std::vector<int64_t>> cover;
  for (const Region* r : regions) cover.push_back(BlockCoverage(*r, rows, cols, block_size));

  std::vector<uint16_t> grid(cells, 0);
  std::vector<int> owner(cells, -1);  // index into regions
  if (policy == GroupPolicy::kSeparate) {
    for (size_t cell = 0; cell < cells; ++cell) {
      int64_t best = 0;
      for (size_t i = 0; i < regions.size(); ++i) {
        if (cover[i][cell] > best) {  // strict: ties keep the smaller region_id
          best = cover[i][cell];
          owner[cell] = static_cast<int>(i);
        }
      }
    }
    std::vector<int> group_of(regions.size(), -1);
    int next = 1;
    std::vector<uint8_t> owns(regions.size(), 0);
    for (int o : owner) {
      if (o >= 0) owns[o] = 1;
    }
    for (size_t i = 0; i < regions.size(); ++i) {
      if (owns[i]) {
        if (next > kMaxGroups - 1) Fail(ErrorCode::kCapacity, "more than 65535 groups");
        group_of[i] = next++;
      }
    }
    for (size_t cell = 0; cell < cells; ++cell) {
      if (owner[cell] >= 0) grid[cell] = static_cast<uint16_t>(group_of[owner[cell]]);
    }
    return GroupMask::Create(ann.height, ann.width, block_size, next, std::move(grid));
  }

  // Merge: regions sharing any block are joined transitively.
  UnionFind uf(regions.size());
  for (size_t cell = 0; cell < cells; ++cell) {
    int first = -1;
    for (size_t i = 0; i < regions.size(); ++i) {
      if (cover[i][cell] == 0) continue;
      if (first < 0) {
        first = static_cast<int>(i);
      } else {
        uf.Join(first, i);
      }
    }
    owner[cell] = first;
  }
  // Union-find roots are the smallest member index, i.e. smallest region_id,
  // so numbering roots in index order numbers groups by smallest region_id.
  std::map<size_t, int> group_of_root;
  std::vector<uint8_t> root_used(regions.size(), 0);
  for (int o : owner) {
    if (o >= 0) root_used[uf.Find(o)] = 1;
  }
  int next = 1;
  for (size_t i = 0; i < regions.size(); ++i) {
    if (root_used[i]) {
      if (next > kMaxGroups - 1) Fail(ErrorCode::kCapacity, "more than 65535 groups");
      group_of_root[i] = next++;
    }
  }
  for (size_t cell = 0; cell < cells; ++cell) {
    if (owner[cell] >= 0) grid[cell] = static_cast<uint16_t>(group_of_root[uf.Find(owner[cell])]);
  }
  return GroupMask::Create(ann.height, ann.width, block_size, next, std::move(grid));
}

// ---------------------------------------------------------------------------
// Resolution changes

IdGrid Downsample(const GroupMask& mask, int factor) {
  if (factor < 1 || mask.block_size() % factor != 0) {
    Fail(ErrorCode::kDimension, "downsample factor must divide the block size");
  }
  const int h = mask.padded_h() / factor, w = mask.padded_w() / factor;
  IdGrid out(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) out.at(r, c) = mask.PixelId(r * factor, c * factor);
  }
  return out;
}

IdGrid DownsampleGrid(const IdGrid& grid, int factor) {
  if (factor < 1 || grid.height % factor != 0 || grid.width % factor != 0) {
    Fail(ErrorCode::kDimension, "downsample factor must divide the grid");
  }
  IdGrid out(grid.height / factor, grid.width / factor);
  for (int r = 0; r < out.height; ++r) {
    for (int c = 0; c < out.width; ++c) out.at(r, c) = grid.at(r * factor, c * factor);
  }
  return out;
}

IdGrid UpsampleGrid(const IdGrid& grid, int factor) {
  if (factor < 1) Fail(ErrorCode::kDimension, "upsample factor must be positive");
  IdGrid out(grid.height * factor, grid.width * factor);
  for (int r = 0; r < out.height; ++r) {
    for (int c = 0; c < out.width; ++c) out.at(r, c) = grid.at(r / factor, c / factor);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

Bytes SerializeRle(const GroupMask& mask) {
  ByteWriter w;
  w.Varint(static_cast<uint64_t>(mask.image_h()));
  w.Varint(static_cast<uint64_t>(mask.image_w()));
  w.Varint(static_cast<uint64_t>(mask.block_size()));
  w.Varint(static_cast<uint64_t>(mask.n_groups()));
  const auto& ids = mask.grid().ids;
  size_t i = 0;
  while (i < ids.size()) {
    size_t j = i + 1;
    while (j < ids.size() && ids[j] == ids[i]) ++j;
    w.Varint(ids[i]);
    w.Varint(j - i);
    i = j;
  }
  return w.Take();
}

GroupMask DeserializeRle(std::span<const uint8_t> bytes) {
  ByteReader r(bytes);
  const uint64_t image_h = r.Varint(), image_w = r.Varint();
  const uint64_t block = r.Varint(), n_groups = r.Varint();
  if (image_h < 1 || image_w < 1 || image_h > kMaxExtent || image_w > kMaxExtent) {
    Fail(ErrorCode::kFormat, "mask image extent out of range");
  }
  if (block < 1 || block > kMaxExtent) Fail(ErrorCode::kFormat, "mask block size out of range");
  if (n_groups < 1 || n_groups > kMaxGroups) Fail(ErrorCode::kFormat, "mask group count out of range");
  const uint64_t rows = (image_h + block - 1) / block, cols = (image_w + block - 1) / block;
  if (rows * cols > kMaxGridCells) Fail(ErrorCode::kFormat, "mask grid too large");
  const uint64_t cells = rows * cols;
  std::vector<uint16_t> grid;
  grid.reserve(cells);
  while (grid.size() < cells) {
    const uint64_t id = r.Varint(), run = r.Varint();
    if (id >= n_groups) Fail(ErrorCode::kFormat, "mask run id exceeds group count");
    if (run < 1 || run > cells - grid.size()) Fail(ErrorCode::kFormat, "mask run overruns grid");
    grid.insert(grid.end(), run, static_cast<uint16_t>(id));
  }
  if (!r.done()) Fail(ErrorCode::kFormat, "trailing bytes after mask runs");
  return GroupMask::Create(static_cast<int>(image_h), static_cast<int>(image_w),
                           static_cast<int>(block), static_cast<int>(n_groups), std::move(grid));
}

}  // namespace ssb
