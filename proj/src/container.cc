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

#include "ssb/container.h"

#include <algorithm>
#include <bit>
#include <limits>

#include "ssb/error.h"

namespace ssb {

namespace {

constexpr char kMagic[4] = {'S', 'S', 'B', '1'};

size_t BitmapBytes(uint16_t n_groups) { return (n_groups + 7u) / 8u; }

bool BitSet(std::span<const uint8_t> bitmap, size_t i) {
  return (bitmap[i / 8] >> (i % 8)) & 1u;
}

uint32_t CheckedU32(size_t v, const char* what) {
  if (v > std::numeric_limits<uint32_t>::max()) Fail(ErrorCode::kFormat, what);
  return static_cast<uint32_t>(v);
}

}  // namespace

const GroupRecord* SsbFile::Find(uint16_t group_id) const {
  for (const auto& r : groups) {
    if (r.group_id == group_id) return &r;
  }
  return nullptr;
}

std::set<uint16_t> SsbFile::PresentGroups() const {
  std::set<uint16_t> s;
  for (const auto& r : groups) s.insert(r.group_id);
  return s;
}

size_t SsbFile::OverheadBytes() const {
  return kHeaderBytes + presence.size() + 4 + mask_rle.size() + 4 + z_stream.size() +
         groups.size() * kRecordBytes;
}

SsbFile AssembleSsb(const SsbHeader& header, Bytes mask_rle, Bytes z_stream,
                    std::vector<GroupPayload> payloads) {
  if (payloads.size() != header.n_groups) {
    Fail(ErrorCode::kFormat, "substream count does not match the group count");
  }
  std::sort(payloads.begin(), payloads.end(),
            [](const GroupPayload& a, const GroupPayload& b) { return a.group_id < b.group_id; });
  SsbFile f;
  f.header = header;
  f.header.flags &= static_cast<uint8_t>(~kFlagPresence);
  f.mask_rle = std::move(mask_rle);
  f.z_stream = std::move(z_stream);
  for (size_t i = 0; i < payloads.size(); ++i) {
    if (payloads[i].group_id != i) Fail(ErrorCode::kFormat, "group ids must be exactly 0..N-1");
    GroupRecord r;
    r.group_id = payloads[i].group_id;
    r.encrypted = payloads[i].encrypted ? 1 : 0;
    r.key_salt = payloads[i].encrypted ? payloads[i].key_salt : 0;
    r.offset = f.blob.size();
    r.length = CheckedU32(payloads[i].data.size(), "group substream exceeds 4 GiB");
    f.blob.insert(f.blob.end(), payloads[i].data.begin(), payloads[i].data.end());
    f.groups.push_back(r);
  }
  return f;
}

Bytes WriteSsb(const SsbFile& f) {
  const bool partial = (f.header.flags & kFlagPresence) != 0;
  if (partial != !f.presence.empty()) Fail(ErrorCode::kFormat, "presence flag and bitmap disagree");
  ByteWriter w;
  w.Append(std::string_view(kMagic, 4));
  w.U8(f.header.version);
  w.U8(f.header.flags);
  w.U32(f.header.image_h);
  w.U32(f.header.image_w);
  w.U16(f.header.block_size);
  w.U16(f.header.n_groups);
  w.U16(f.header.latent_channels);
  w.U8(f.header.slices);
  w.U64(f.header.weights_digest);
  if (partial) {
    if (f.presence.size() != BitmapBytes(f.header.n_groups)) {
      Fail(ErrorCode::kFormat, "presence bitmap has the wrong size");
    }
    w.Append(f.presence);
  }
  w.U32(CheckedU32(f.mask_rle.size(), "mask segment too large"));
  w.Append(f.mask_rle);
  w.U32(CheckedU32(f.z_stream.size(), "z segment too large"));
  w.Append(f.z_stream);
  uint64_t expect = 0;
  for (const auto& r : f.groups) {
    if (r.offset != expect) Fail(ErrorCode::kFormat, "substreams must tile the blob");
    expect += r.length;
    w.U16(r.group_id);
    w.U8(r.encrypted);
    w.U64(r.key_salt);
    w.U64(r.offset);
    w.U32(r.length);
  }
  if (expect != f.blob.size()) Fail(ErrorCode::kFormat, "group lengths do not sum to the blob");
  w.Append(f.blob);
  return w.Take();
}

SsbFile ReadSsb(std::span<const uint8_t> bytes) {
  ByteReader r(bytes);
  SsbFile f;
  const auto magic = r.Take(4);
  if (!std::equal(magic.begin(), magic.end(), kMagic)) Fail(ErrorCode::kFormat, "not an SSB file");
  f.header.version = r.U8();
  if (f.header.version != kSsbVersion) Fail(ErrorCode::kCompatibility, "unsupported SSB version");
  f.header.flags = r.U8();
  if (f.header.flags & ~kKnownFlags) Fail(ErrorCode::kFormat, "unknown header flags");
  f.header.image_h = r.U32();
  f.header.image_w = r.U32();
  f.header.block_size = r.U16();
  f.header.n_groups = r.U16();
  f.header.latent_channels = r.U16();
  f.header.slices = r.U8();
  f.header.weights_digest = r.U64();
  if (f.header.image_h == 0 || f.header.image_w == 0 || f.header.block_size == 0 ||
      f.header.n_groups == 0 || f.header.latent_channels == 0 || f.header.slices == 0) {
    Fail(ErrorCode::kFormat, "zero extent in header");
  }

  std::vector<uint8_t> present(f.header.n_groups, 1);
  if (f.header.flags & kFlagPresence) {
    const auto bm = r.Take(BitmapBytes(f.header.n_groups));
    f.presence.assign(bm.begin(), bm.end());
    for (size_t i = 0; i < f.header.n_groups; ++i) present[i] = BitSet(bm, i);
    const size_t spare = bm.size() * 8 - f.header.n_groups;
    if (spare && (bm.back() >> (8 - spare)) != 0) Fail(ErrorCode::kFormat, "presence padding bits set");
  }

  const uint32_t mask_len = r.U32();
  const auto mask = r.Take(mask_len);
  f.mask_rle.assign(mask.begin(), mask.end());
  const uint32_t z_len = r.U32();
  const auto z = r.Take(z_len);
  f.z_stream.assign(z.begin(), z.end());

  size_t count = 0;
  for (uint8_t p : present) count += p;
  if (count * kRecordBytes > r.remaining()) Fail(ErrorCode::kFormat, "group table truncated");
  uint64_t expect = 0;
  int last_id = -1;
  for (size_t i = 0; i < count; ++i) {
    GroupRecord g;
    g.group_id = r.U16();
    g.encrypted = r.U8();
    g.key_salt = r.U64();
    g.offset = r.U64();
    g.length = r.U32();
    if (g.group_id >= f.header.n_groups || !present[g.group_id] ||
        static_cast<int>(g.group_id) <= last_id) {
      Fail(ErrorCode::kFormat, "group table ids do not match the present groups");
    }
    if (g.encrypted > 1) Fail(ErrorCode::kFormat, "bad encryption flag");
    if (!g.encrypted && g.key_salt != 0) Fail(ErrorCode::kFormat, "key salt on a plain group");
    if (g.offset != expect) Fail(ErrorCode::kFormat, "group substreams overlap or leave gaps");
    expect += g.length;
    last_id = g.group_id;
    f.groups.push_back(g);
  }
  if (expect != r.remaining()) Fail(ErrorCode::kFormat, "blob size does not match the group table");
  const auto blob = r.Take(r.remaining());
  f.blob.assign(blob.begin(), blob.end());

  FileMask(f);  // the mask must parse and agree with the header
  return f;
}

GroupMask FileMask(const SsbFile& f) {
  GroupMask m = DeserializeRle(f.mask_rle);
  if (static_cast<uint32_t>(m.image_h()) != f.header.image_h ||
      static_cast<uint32_t>(m.image_w()) != f.header.image_w ||
      m.block_size() != f.header.block_size || m.n_groups() != f.header.n_groups) {
    Fail(ErrorCode::kFormat, "mask segment disagrees with the header");
  }
  return m;
}

Bytes ExtractGroups(std::span<const uint8_t> bytes, const std::set<uint16_t>& selection) {
  const SsbFile in = ReadSsb(bytes);
  for (uint16_t id : selection) {
    if (id >= in.header.n_groups) {
      Fail(ErrorCode::kSelection, "unknown group id " + std::to_string(id));
    }
  }
  SsbFile out;
  out.header = in.header;
  out.header.flags |= kFlagPresence;
  out.presence.assign(BitmapBytes(in.header.n_groups), 0);
  out.mask_rle = in.mask_rle;
  out.z_stream = in.z_stream;
  for (const auto& g : in.groups) {
    if (!selection.count(g.group_id)) continue;
    GroupRecord r = g;
    r.offset = out.blob.size();
    const auto data = in.Substream(g);
    out.blob.insert(out.blob.end(), data.begin(), data.end());
    out.groups.push_back(r);
    out.presence[g.group_id / 8] |= static_cast<uint8_t>(1u << (g.group_id % 8));
  }
  return WriteSsb(out);
}

}  // namespace ssb
