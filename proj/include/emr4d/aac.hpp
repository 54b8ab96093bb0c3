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

// Adaptive order-0 arithmetic coder. Each alphabet size gets its own
// frequency table, so interleaved fields of different widths do not share
// statistics.

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

namespace emr4d {

/// Adaptive frequency table; counts start at 1 and are halved once their
/// total reaches 2^16.
class FrequencyModel {
 public:
  explicit FrequencyModel(std::uint32_t alphabet);

  std::uint32_t alphabet() const { return static_cast<std::uint32_t>(counts_.size()); }
  std::uint32_t total() const { return total_; }
  std::uint32_t cum_low(std::uint32_t symbol) const;
  /// Symbol whose [cum_low, cum_low + count) interval contains `target`.
  std::uint32_t find(std::uint32_t target, std::uint32_t& low, std::uint32_t& high) const;
  void update(std::uint32_t symbol);

  static constexpr std::uint32_t kMaxTotal = 1u << 16;

 private:
  std::vector<std::uint32_t> counts_;
  std::uint32_t total_ = 0;
};

class AacEncoder {
 public:
  void put(std::uint32_t symbol, std::uint32_t alphabet);
  /// Flushes the coder; the encoder must not be used afterwards.
  std::vector<std::uint8_t> finish();

 private:
  void emit_bit(int bit);
  void emit_with_pending(int bit);

  std::map<std::uint32_t, FrequencyModel> models_;
  std::uint64_t low_ = 0;
  std::uint64_t high_ = 0xFFFFFFFFu;
  std::uint64_t pending_ = 0;
  std::vector<std::uint8_t> out_;
  std::uint8_t cur_ = 0;
  int nbits_ = 0;
  bool finished_ = false;
};

class AacDecoder {
 public:
  explicit AacDecoder(std::span<const std::uint8_t> bytes);

  std::uint32_t get(std::uint32_t alphabet);
  /// Bytes consumed so far, counting the 4-byte lookahead.
  std::size_t position() const { return bitpos_ / 8; }

 private:
  int next_bit();

  std::span<const std::uint8_t> in_;
  std::map<std::uint32_t, FrequencyModel> models_;
  std::uint64_t low_ = 0;
  std::uint64_t high_ = 0xFFFFFFFFu;
  std::uint64_t value_ = 0;
  std::size_t bitpos_ = 0;
};

struct CodedSymbol {
  std::uint32_t value;
  std::uint32_t alphabet;
};

std::vector<std::uint8_t> aac_encode(std::span<const CodedSymbol> symbols);
std::vector<std::uint32_t> aac_decode(std::span<const std::uint8_t> bytes, std::span<const std::uint32_t> alphabets);

}  // namespace emr4d
