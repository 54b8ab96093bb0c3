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

// Container framing: magic, version, then tagged sections each carrying a
// length and a CRC-32 of its payload.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace emr4d {

inline constexpr char kMagic[6] = {'E', 'M', 'R', '4', 'D', '\0'};
inline constexpr std::uint8_t kBitstreamVersion = 1;

struct Section {
  std::string tag;  // exactly four characters
  std::vector<std::uint8_t> payload;
};

std::uint32_t crc32_of(std::span<const std::uint8_t> data);

std::vector<std::uint8_t> write_container(const std::vector<Section>& sections);
/// Framing problems (magic, version, truncation) raise ContainerError; a
/// section whose CRC does not match raises PayloadError naming it.
std::vector<Section> read_container(std::span<const std::uint8_t> bytes);

/// Bytes a section adds beyond its payload.
inline constexpr std::size_t kSectionOverhead = 12;

}  // namespace emr4d
