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

// The semantically structured bitstream (SSB) container.
//
// Layout, little-endian throughout:
//   header      "SSB1" version:u8 flags:u8 image_h:u32 image_w:u32 B:u16 N:u16
//               M:u16 S:u8 weights_digest:u64                       (29 bytes)
//   presence    ceil(N / 8) bytes, only when kFlagPresence is set; bit i of
//               byte i / 8 (LSB first) marks group i as present
//   mask        len:u32 + run-length group mask
//   z           len:u32 + range-coded hyper latent
//   group table one record per present group, ascending id:
//               group_id:u16 encrypted:u8 key_salt:u64 offset:u64 length:u32
//   blob        concatenated group substreams; offsets are relative to the
//               blob start and the substreams tile it contiguously

#ifndef SSB_CONTAINER_H_
#define SSB_CONTAINER_H_

#include <cstdint>
#include <set>
#include <span>
#include <vector>

#include "ssb/byte_io.h"
#include "ssb/group_mask.h"

namespace ssb {

inline constexpr uint8_t kSsbVersion = 1;
inline constexpr uint8_t kFlagPresence = 0x01;   // presence bitmap follows the header
inline constexpr uint8_t kFlagPlainAttention = 0x02;  // encoded without group masking
inline constexpr uint8_t kFlagHyperOnly = 0x04;  // entropy parameters without ChARM
inline constexpr uint8_t kKnownFlags = 0x07;

inline constexpr size_t kHeaderBytes = 29;
inline constexpr size_t kRecordBytes = 23;

struct SsbHeader {
  uint8_t version = kSsbVersion;
  uint8_t flags = 0;
  uint32_t image_h = 0;
  uint32_t image_w = 0;
  uint16_t block_size = 0;
  uint16_t n_groups = 0;
  uint16_t latent_channels = 0;
  uint8_t slices = 0;
  uint64_t weights_digest = 0;

  friend bool operator==(const SsbHeader&, const SsbHeader&) = default;
};

struct GroupRecord {
  uint16_t group_id = 0;
  uint8_t encrypted = 0;
  uint64_t key_salt = 0;
  uint64_t offset = 0;
  uint32_t length = 0;

  friend bool operator==(const GroupRecord&, const GroupRecord&) = default;
};

struct SsbFile {
  SsbHeader header;
  std::vector<uint8_t> presence;  // empty unless kFlagPresence
  Bytes mask_rle;
  Bytes z_stream;
  std::vector<GroupRecord> groups;
  Bytes blob;

  const GroupRecord* Find(uint16_t group_id) const;
  std::span<const uint8_t> Substream(const GroupRecord& r) const {
    return std::span<const uint8_t>(blob).subspan(r.offset, r.length);
  }
  std::set<uint16_t> PresentGroups() const;
  // Bytes of everything except the group substreams.
  size_t OverheadBytes() const;
  size_t TotalBytes() const { return OverheadBytes() + blob.size(); }
};

// Input for assembling a file: one per group, any order.
struct GroupPayload {
  uint16_t group_id = 0;
  bool encrypted = false;
  uint64_t key_salt = 0;
  Bytes data;
};

// Builds a complete (all groups present) file; payload ids must be exactly
// {0..N-1}.
SsbFile AssembleSsb(const SsbHeader& header, Bytes mask_rle, Bytes z_stream,
                    std::vector<GroupPayload> payloads);

Bytes WriteSsb(const SsbFile& file);
// Validates every structural invariant; throws kFormat / kCompatibility.
SsbFile ReadSsb(std::span<const uint8_t> bytes);

// New file holding only the groups in `selection` that are present in the
// input. Ids >= N raise kSelection. Always writes a presence bitmap.
Bytes ExtractGroups(std::span<const uint8_t> bytes, const std::set<uint16_t>& selection);

// Parsed mask of a file, checked against the header.
GroupMask FileMask(const SsbFile& file);

}  // namespace ssb

#endif  // SSB_CONTAINER_H_
