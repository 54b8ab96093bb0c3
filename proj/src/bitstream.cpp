// Copyright 2026 The EMR4D Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "emr4d/bitstream.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstring>

#include "emr4d/bytes.hpp"
#include "emr4d/error.hpp"

namespace emr4d {

std::uint32_t crc32_of(std::span<const std::uint8_t> data) {
  uLong c = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  std::size_t pos = 0;
  while (pos < data.size()) {
    const std::size_t n = std::min<std::size_t>(data.size() - pos, 1u << 30);
    c = crc32(c, data.data() + pos, static_cast<uInt>(n));
    pos += n;
  }
  return static_cast<std::uint32_t>(c);
}

std::vector<std::uint8_t> write_container(const std::vector<Section>& sections) {
  ByteWriter w;
  for (char c : kMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u8(kBitstreamVersion);
  for (const auto& s : sections) {
    if (s.tag.size() != 4) throw InvalidArgument("section tag must have four characters: '" + s.tag + "'");
    for (char c : s.tag) w.u8(static_cast<std::uint8_t>(c));
    w.u32(static_cast<std::uint32_t>(s.payload.size()));
    w.u32(crc32_of(s.payload));
    w.bytes(s.payload);
  }
  return w.take();
}

std::vector<Section> read_container(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < sizeof(kMagic) + 1) throw ContainerError("file too short for an EMR4D header");
  if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) throw ContainerError("bad magic, not an EMR4D stream");
  if (bytes[sizeof(kMagic)] != kBitstreamVersion) {
    throw ContainerError("unsupported bitstream version " + std::to_string(bytes[sizeof(kMagic)]));
  }
  std::vector<Section> out;
  std::size_t pos = sizeof(kMagic) + 1;
  while (pos < bytes.size()) {
    if (bytes.size() - pos < kSectionOverhead) throw ContainerError("truncated section header at byte " + std::to_string(pos));
    Section s;
    s.tag.assign(reinterpret_cast<const char*>(bytes.data() + pos), 4);
    for (char c : s.tag) {
      if (c < 0x20 || c > 0x7e) throw ContainerError("malformed section tag at byte " + std::to_string(pos));
    }
    ByteReader hdr(bytes.subspan(pos + 4, 8), s.tag);
    const std::uint32_t len = hdr.u32();
    const std::uint32_t crc = hdr.u32();
    pos += kSectionOverhead;
    if (bytes.size() - pos < len) throw ContainerError("section " + s.tag + " truncated");
    s.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.begin() + static_cast<std::ptrdiff_t>(pos + len));
    if (crc32_of(s.payload) != crc) throw PayloadError(s.tag, "CRC mismatch");
    pos += len;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace emr4d
