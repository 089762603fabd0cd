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

#include "ssb/range_coder.h"

#include <algorithm>
#include <cmath>

#include "ssb/error.h"

namespace ssb {

namespace {

constexpr uint32_t kTop = 1u << 24;

double UpperTail(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

}  // namespace

CdfTables CdfTables::Build(double sigma_min, int bound) {
  if (!(sigma_min > 0.0 && sigma_min < kMaxScale)) {
    Fail(ErrorCode::kConfig, "sigma_min must lie in (0, 64)");
  }
  if (bound < 1 || (2 * bound + 1) > static_cast<int>(kProbTotal) / 2) {
    Fail(ErrorCode::kConfig, "symbol bound out of range");
  }
  CdfTables t;
  t.bound_ = bound;
  const double lo = std::log(sigma_min), hi = std::log(kMaxScale);
  for (int i = 0; i < kNumScales; ++i) {
    t.scales_.push_back(std::exp(lo + (hi - lo) * i / (kNumScales - 1)));
  }
  t.scales_.front() = sigma_min;
  t.scales_.back() = kMaxScale;

  const int n = t.num_symbols();
  t.cdfs_.reserve(static_cast<size_t>(kNumScales) * (n + 1));
  std::vector<uint32_t> freq(n);
  for (double sigma : t.scales_) {
    // Positive residuals only; the table is mirrored so it is exactly symmetric.
    int64_t side_total = 0;
    for (int r = 1; r <= bound; ++r) {
      const double upper = r == bound ? 0.0 : UpperTail((r + 0.5) / sigma);
      const double p = UpperTail((r - 0.5) / sigma) - upper;
      const auto f = static_cast<uint32_t>(
          std::max<int64_t>(1, std::llround(p * static_cast<double>(kProbTotal))));
      freq[bound + r] = freq[bound - r] = f;
      side_total += f;
    }
    const int64_t center = static_cast<int64_t>(kProbTotal) - 2 * side_total;
    if (center < 1) Fail(ErrorCode::kConfig, "cdf table cannot be normalized");
    freq[bound] = static_cast<uint32_t>(center);
    uint32_t acc = 0;
    t.cdfs_.push_back(0);
    for (uint32_t f : freq) t.cdfs_.push_back(acc += f);
  }
  return t;
}

int CdfTables::ScaleIndex(double sigma) const {
  const auto it = std::lower_bound(scales_.begin(), scales_.end(), sigma);
  if (it == scales_.end()) return kNumScales - 1;
  return static_cast<int>(it - scales_.begin());
}

double CdfTables::Bits(int index, int residual) const {
  return -std::log2(static_cast<double>(freq(index, residual)) / kProbTotal);
}

// ---------------------------------------------------------------------------

void RangeEncoder::Encode(uint32_t cum_lo, uint32_t cum_hi) {
  const uint64_t lo = (static_cast<uint64_t>(range_) * cum_lo) >> kProbBits;
  const uint64_t hi = (static_cast<uint64_t>(range_) * cum_hi) >> kProbBits;
  low_ += lo;
  range_ = static_cast<uint32_t>(hi - lo);
  while (range_ < kTop) {
    range_ <<= 8;
    ShiftLow();
  }
}

void RangeEncoder::ShiftLow() {
  if (low_ < 0xff000000ull || low_ >= (1ull << 32)) {
    const auto carry = static_cast<uint8_t>(low_ >> 32);
    uint8_t pending = cache_;
    do {
      if (first_) {
        first_ = false;
      } else {
        out_.push_back(static_cast<uint8_t>(pending + carry));
      }
      pending = 0xff;
    } while (--cache_size_ != 0);
    cache_ = static_cast<uint8_t>(low_ >> 24);
  }
  ++cache_size_;
  low_ = (low_ & 0x00ffffffull) << 8;
}

Bytes RangeEncoder::Finish() {
  // Pick the value in [low, low + range) with the most trailing zero bytes.
  int keep = 4;
  for (int k = 0; k <= 4; ++k) {
    const uint64_t step = 1ull << (32 - 8 * k);
    const uint64_t v = (low_ + step - 1) & ~(step - 1);
    if (v < low_ + range_) {
      low_ = v;
      keep = k;
      break;
    }
  }
  for (int i = 0; i <= keep; ++i) ShiftLow();
  while (!out_.empty() && out_.back() == 0) out_.pop_back();
  return std::move(out_);
}

RangeDecoder::RangeDecoder(std::span<const uint8_t> data) : data_(data) {
  for (int i = 0; i < 4; ++i) code_ = (code_ << 8) | NextByte();
}

int RangeDecoder::Decode(std::span<const uint32_t> cdf) {
  if (code_ >= range_) Fail(ErrorCode::kDecode, "range decoder state diverged");
  const int n = static_cast<int>(cdf.size()) - 1;
  auto bound = [&](int s) {
    return static_cast<uint32_t>((static_cast<uint64_t>(range_) * cdf[s]) >> kProbBits);
  };
  // Largest s with bound(s) <= code.
  int lo = 0, hi = n - 1;
  while (lo < hi) {
    const int mid = (lo + hi + 1) / 2;
    if (bound(mid) <= code_) {
      lo = mid;
    } else {
      hi = mid - 1;
    }
  }
  const uint32_t start = bound(lo), end = bound(lo + 1);
  code_ -= start;
  range_ = end - start;
  while (range_ < kTop) {
    code_ = (code_ << 8) | NextByte();
    range_ <<= 8;
  }
  return lo;
}

bool RangeDecoder::Verified() const {
  if (!FullyConsumed()) return false;
  // code = V - low for the flushed value V, whose low 32 bits are the window.
  const uint32_t low = window_ - code_;
  for (int k = 0; k <= 4; ++k) {
    const uint64_t step = 1ull << (32 - 8 * k);
    const uint64_t offset = (step - (low & (step - 1))) & (step - 1);
    if (offset < range_) return offset == code_;
  }
  return false;
}

Bytes EncodeSymbols(std::span<const int32_t> residuals, std::span<const uint8_t> scale_indices,
                    const CdfTables& tables) {
  if (residuals.size() != scale_indices.size()) {
    Fail(ErrorCode::kDimension, "one scale index per residual required");
  }
  RangeEncoder enc;
  const int bound = tables.bound();
  for (size_t i = 0; i < residuals.size(); ++i) {
    const int32_t r = residuals[i];
    if (r < -bound || r > bound) Fail(ErrorCode::kDimension, "residual outside the symbol bound");
    if (scale_indices[i] >= kNumScales) Fail(ErrorCode::kDimension, "scale index out of range");
    const auto cdf = tables.cdf(scale_indices[i]);
    enc.Encode(cdf[r + bound], cdf[r + bound + 1]);
  }
  return enc.Finish();
}

std::vector<int32_t> DecodeSymbols(std::span<const uint8_t> stream,
                                   std::span<const uint8_t> scale_indices,
                                   const CdfTables& tables, bool strict) {
  RangeDecoder dec(stream);
  std::vector<int32_t> out(scale_indices.size());
  for (size_t i = 0; i < out.size(); ++i) {
    if (scale_indices[i] >= kNumScales) Fail(ErrorCode::kDimension, "scale index out of range");
    out[i] = dec.Decode(tables.cdf(scale_indices[i])) - tables.bound();
  }
  if (strict && !dec.Verified()) Fail(ErrorCode::kDecode, "stream does not end where expected");
  return out;
}

double TableBits(std::span<const int32_t> residuals, std::span<const uint8_t> scale_indices,
                 const CdfTables& tables) {
  double bits = 0.0;
  for (size_t i = 0; i < residuals.size(); ++i) bits += tables.Bits(scale_indices[i], residuals[i]);
  return bits;
}

}  // namespace ssb
