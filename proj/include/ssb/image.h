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

#ifndef SSB_IMAGE_H_
#define SSB_IMAGE_H_

#include <cstdint>
#include <string>
#include <vector>

#include "ssb/byte_io.h"
#include "ssb/tensor.h"

namespace ssb {

// 8-bit interleaved RGB.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> rgb;

  Image() = default;
  Image(int w, int h, uint8_t fill = 0)
      : width(w), height(h), rgb(static_cast<size_t>(w) * h * 3, fill) {}

  uint8_t at(int y, int x, int c) const { return rgb[(static_cast<size_t>(y) * width + x) * 3 + c]; }
  uint8_t& at(int y, int x, int c) { return rgb[(static_cast<size_t>(y) * width + x) * 3 + c]; }

  friend bool operator==(const Image&, const Image&) = default;
};

Image DecodePpm(std::span<const uint8_t> bytes);
Bytes EncodePpm(const Image& image);
Image DecodePng(std::span<const uint8_t> bytes);
Bytes EncodePng(const Image& image);

// Format chosen by content on read and by extension (.png or PPM) on write.
Image ReadImage(const std::string& path);
void WriteImage(const std::string& path, const Image& image);

// [3, H, W] in [0, 1].
Tensor ImageToTensor(const Image& image);
// Clamps to [0, 1] and rounds to the nearest level.
Image TensorToImage(const Tensor& t);

// Whole-file helpers. WriteFileAtomic writes a sibling temp file and renames
// it over the target, so a failed command never leaves partial output.
Bytes ReadFile(const std::string& path);
void WriteFileAtomic(const std::string& path, std::span<const uint8_t> bytes);

}  // namespace ssb

#endif  // SSB_IMAGE_H_
