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

#ifndef SSB_TENSOR_H_
#define SSB_TENSOR_H_

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace ssb {

// Dense row-major float32 array of rank 1..4. Rank-3 tensors are laid out as
// [channels, height, width]; rank-2 as [rows, cols].
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape, float fill = 0.0f);
  Tensor(std::vector<int> shape, std::vector<float> data);

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[i]; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  float* data() { return data_.data(); }
  const float* data() const { return data_.data(); }
  std::span<float> values() { return data_; }
  std::span<const float> values() const { return data_; }
  std::vector<float>& storage() { return data_; }

  float& operator[](size_t i) { return data_[i]; }
  float operator[](size_t i) const { return data_[i]; }

  float& at(int r, int c) { return data_[static_cast<size_t>(r) * shape_[1] + c]; }
  float at(int r, int c) const { return data_[static_cast<size_t>(r) * shape_[1] + c]; }
  float& at(int c, int y, int x) {
    return data_[(static_cast<size_t>(c) * shape_[1] + y) * shape_[2] + x];
  }
  float at(int c, int y, int x) const {
    return data_[(static_cast<size_t>(c) * shape_[1] + y) * shape_[2] + x];
  }

  // Row view of a rank-2 tensor.
  std::span<float> row(int r) {
    return {data_.data() + static_cast<size_t>(r) * shape_[1], static_cast<size_t>(shape_[1])};
  }
  std::span<const float> row(int r) const {
    return {data_.data() + static_cast<size_t>(r) * shape_[1], static_cast<size_t>(shape_[1])};
  }

  bool AllFinite() const;
  std::string ShapeString() const;

  friend bool operator==(const Tensor& a, const Tensor& b);

 private:
  std::vector<int> shape_;
  std::vector<float> data_;
};

// Bitwise equality of shape and every element.
bool BitEqual(const Tensor& a, const Tensor& b);

size_t ShapeProduct(const std::vector<int>& shape);

}  // namespace ssb

#ifdef NDEBUG
#define SSB_DCHECK_FINITE(t) ((void)0)
#else
#include <cassert>
#define SSB_DCHECK_FINITE(t) assert((t).AllFinite())
#endif

#endif  // SSB_TENSOR_H_
