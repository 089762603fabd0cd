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

// 32-bit range coder with 16-bit probabilities, byte-wise renormalization and
// carry propagation, coding residuals against zero-mean discretized Gaussian
// tables indexed by scale.

#ifndef SSB_RANGE_CODER_H_
#define SSB_RANGE_CODER_H_

#include <cstdint>
#include <span>
#include <vector>

#include "ssb/byte_io.h"

namespace ssb {

inline constexpr int kNumScales = 64;
inline constexpr double kMaxScale = 64.0;
inline constexpr int kProbBits = 16;
inline constexpr uint32_t kProbTotal = 1u << kProbBits;

class CdfTables {
 public:
  // 64 log-spaced scales in [sigma_min, 64]; residuals in [-bound, bound]
  // with tail mass folded into the edge bins. Each table has 2 * bound + 2
  // entries, starts at 0 and ends at 2^16, every bin at least 1.
  static CdfTables Build(double sigma_min, int bound = 64);

  int bound() const { return bound_; }
  int num_symbols() const { return 2 * bound_ + 1; }
  double scale(int index) const { return scales_[index]; }
  std::span<const uint32_t> cdf(int index) const {
    return {cdfs_.data() + static_cast<size_t>(index) * (num_symbols() + 1),
            static_cast<size_t>(num_symbols() + 1)};
  }
  uint32_t freq(int index, int residual) const {
    const auto c = cdf(index);
    return c[residual + bound_ + 1] - c[residual + bound_];
  }
  // Smallest table scale >= sigma (the last table when sigma exceeds all).
  int ScaleIndex(double sigma) const;

  // -log2 of the quantized probability of a residual.
  double Bits(int index, int residual) const;

 private:
  int bound_ = 0;
  std::vector<double> scales_;
  std::vector<uint32_t> cdfs_;
};

class RangeEncoder {
 public:
  // Codes the interval [cum_lo, cum_hi) out of 2^16.
  void Encode(uint32_t cum_lo, uint32_t cum_hi);
  // Emits the shortest tail that identifies the final interval. Trailing zero
  // bytes are dropped; the decoder reads zeros past the end.
  Bytes Finish();

 private:
  void ShiftLow();

  uint64_t low_ = 0;
  uint32_t range_ = 0xffffffffu;
  uint8_t cache_ = 0;
  uint64_t cache_size_ = 1;
  bool first_ = true;  // the first byte out is always zero and is not stored
  Bytes out_;
};

class RangeDecoder {
 public:
  explicit RangeDecoder(std::span<const uint8_t> data);

  // Returns the symbol index whose interval contains the current code.
  int Decode(std::span<const uint32_t> cdf);

  // True when the stream was consumed exactly (no unread trailing bytes).
  bool FullyConsumed() const { return pos_ >= data_.size(); }
  // FullyConsumed and the final code value is the one the encoder's flush
  // would have picked. A decode against the wrong tables almost never passes.
  bool Verified() const;

 private:
  uint8_t NextByte() {
    const uint8_t b = pos_ < data_.size() ? data_[pos_] : 0;
    ++pos_;
    window_ = (window_ << 8) | b;
    return b;
  }

  std::span<const uint8_t> data_;
  size_t pos_ = 0;
  uint32_t code_ = 0;
  uint32_t range_ = 0xffffffffu;
  uint32_t window_ = 0;  // last four stream bytes read
};

// Residuals must already be clamped to [-bound, bound].
Bytes EncodeSymbols(std::span<const int32_t> residuals, std::span<const uint8_t> scale_indices,
                    const CdfTables& tables);
// strict: a stream that does not end where the encoder left it raises a
// decode error.
std::vector<int32_t> DecodeSymbols(std::span<const uint8_t> stream,
                                   std::span<const uint8_t> scale_indices,
                                   const CdfTables& tables, bool strict = true);

// Sum of quantized-table code lengths; the ideal size of EncodeSymbols output.
double TableBits(std::span<const int32_t> residuals, std::span<const uint8_t> scale_indices,
                 const CdfTables& tables);

}  // namespace ssb

#endif  // SSB_RANGE_CODER_H_
