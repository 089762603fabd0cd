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

// Named parameter tensors for every learned layer of the codec and their
// binary "SSWT" file format.

#ifndef SSB_WEIGHTS_H_
#define SSB_WEIGHTS_H_

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ssb/byte_io.h"
#include "ssb/config.h"
#include "ssb/tensor.h"

namespace ssb {

struct WeightSpec {
  std::string name;
  std::vector<int> shape;
};

// Canonical ordered list of parameter names and shapes for a configuration.
std::vector<WeightSpec> WeightManifest(const CodecConfig& cfg);

class ModelWeights {
 public:
  ModelWeights() = default;

  // Seeded initialization: fan-in scaled uniform weights, zero biases, unit
  // norm gains. Deterministic across platforms.
  static ModelWeights Random(const CodecConfig& cfg, uint64_t seed);
  static ModelWeights Zeros(const CodecConfig& cfg);

  void Add(std::string name, Tensor t);
  bool Has(const std::string& name) const { return index_.count(name) != 0; }
  const Tensor& Get(const std::string& name) const;
  Tensor& Mutable(const std::string& name);

  const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }

  // Names and shapes must equal WeightManifest(cfg) exactly, in order.
  void CheckMatches(const CodecConfig& cfg) const;

  Bytes Serialize() const;
  static ModelWeights Deserialize(std::span<const uint8_t> bytes);
  // FNV-1a-64 over the serialized file body (everything but the digest).
  uint64_t Digest() const;

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
  std::unordered_map<std::string, size_t> index_;
};

ModelWeights LoadWeights(const std::string& path);

}  // namespace ssb

#endif  // SSB_WEIGHTS_H_
