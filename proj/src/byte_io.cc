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

#include "ssb/byte_io.h"

#include <bit>
#include <cstring>

#include "ssb/error.h"

namespace ssb {

void ByteWriter::F32(float v) { U32(std::bit_cast<uint32_t>(v)); }

void ByteWriter::Varint(uint64_t v) {
  while (v >= 0x80) {
    out_.push_back(static_cast<uint8_t>(v | 0x80));
    v >>= 7;
  }
  out_.push_back(static_cast<uint8_t>(v));
}

float ByteReader::F32() { return std::bit_cast<float>(U32()); }

uint64_t ByteReader::Varint() {
  uint64_t v = 0;
  for (int shift = 0; shift < 64; shift += 7) {
    if (pos_ >= data_.size()) Fail(ErrorCode::kFormat, "truncated varint");
    const uint8_t b = data_[pos_++];
    const uint64_t bits = b & 0x7f;
    if (shift == 63 && bits > 1) Fail(ErrorCode::kFormat, "varint overflow");
    v |= bits << shift;
    if (!(b & 0x80)) {
      // Reject non-canonical encodings with redundant zero continuation.
      if (b == 0 && shift > 0) Fail(ErrorCode::kFormat, "overlong varint");
      return v;
    }
  }
  Fail(ErrorCode::kFormat, "overlong varint");
}

std::span<const uint8_t> ByteReader::Take(size_t n) {
  if (n > remaining()) Fail(ErrorCode::kFormat, "truncated segment");
  auto s = data_.subspan(pos_, n);
  pos_ += n;
  return s;
}

uint64_t ByteReader::GetLE(int n) {
  if (static_cast<size_t>(n) > remaining()) Fail(ErrorCode::kFormat, "truncated field");
  uint64_t v = 0;
  for (int i = 0; i < n; ++i) v |= static_cast<uint64_t>(data_[pos_ + i]) << (8 * i);
  pos_ += n;
  return v;
}

}  // namespace ssb
