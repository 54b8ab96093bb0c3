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

#include "emr4d/aac.hpp"

#include <string>

#include "emr4d/error.hpp"

namespace emr4d {

namespace {

constexpr std::uint64_t kTop = 0xFFFFFFFFu;
constexpr std::uint64_t kHalf = 0x80000000u;
constexpr std::uint64_t kQuarter = 0x40000000u;
constexpr std::uint64_t kThreeQuarters = 0xC0000000u;
// A well-formed stream never needs more than 32 bits past its end.
constexpr std::size_t kMaxOverrunBits = 64;

FrequencyModel& model_for(std::map<std::uint32_t, FrequencyModel>& models, std::uint32_t alphabet) {
  auto it = models.find(alphabet);
  if (it == models.end()) it = models.emplace(alphabet, FrequencyModel(alphabet)).first;
  return it->second;
}

}  // namespace

FrequencyModel::FrequencyModel(std::uint32_t alphabet) {
  if (alphabet == 0 || alphabet >= kMaxTotal / 2) throw InvalidArgument("alphabet size out of range: " + std::to_string(alphabet));
  counts_.assign(alphabet, 1);
  total_ = alphabet;
}

std::uint32_t FrequencyModel::cum_low(std::uint32_t symbol) const {
  std::uint32_t c = 0;
  for (std::uint32_t s = 0; s < symbol; ++s) c += counts_[s];
  return c;
}

std::uint32_t FrequencyModel::find(std::uint32_t target, std::uint32_t& low, std::uint32_t& high) const {
  std::uint32_t c = 0;
  for (std::uint32_t s = 0; s < counts_.size(); ++s) {
    if (target < c + counts_[s]) {
      low = c;
      high = c + counts_[s];
      return s;
    }
    c += counts_[s];
  }
  return static_cast<std::uint32_t>(counts_.size());
}

void FrequencyModel::update(std::uint32_t symbol) {
  ++counts_[symbol];
  ++total_;
  if (total_ >= kMaxTotal) {
    total_ = 0;
    for (auto& c : counts_) {
      c = (c + 1) / 2;
      total_ += c;
    }
  }
}

void AacEncoder::emit_bit(int bit) {
  cur_ = static_cast<std::uint8_t>((cur_ << 1) | bit);
  if (++nbits_ == 8) {
    out_.push_back(cur_);
    cur_ = 0;
    nbits_ = 0;
  }
}

void AacEncoder::emit_with_pending(int bit) {
  emit_bit(bit);
  for (; pending_ > 0; --pending_) emit_bit(!bit);
}

void AacEncoder::put(std::uint32_t symbol, std::uint32_t alphabet) {
  if (finished_) throw Error("AacEncoder used after finish()");
  if (symbol >= alphabet) {
    throw InvalidArgument("symbol " + std::to_string(symbol) + " outside alphabet " + std::to_string(alphabet));
  }
  auto& m = model_for(models_, alphabet);
  const std::uint64_t range = high_ - low_ + 1;
  const std::uint64_t lo = m.cum_low(symbol);
  const std::uint64_t hi = m.cum_low(symbol + 1);
  high_ = low_ + range * hi / m.total() - 1;
  low_ = low_ + range * lo / m.total();
  for (;;) {
    if (high_ < kHalf) {
      emit_with_pending(0);
    } else if (low_ >= kHalf) {
      emit_with_pending(1);
      low_ -= kHalf;
      high_ -= kHalf;
    } else if (low_ >= kQuarter && high_ < kThreeQuarters) {
      ++pending_;
      low_ -= kQuarter;
      high_ -= kQuarter;
    } else {
      break;
    }
    low_ = (low_ << 1) & kTop;
    high_ = ((high_ << 1) | 1) & kTop;
  }
  m.update(symbol);
}

std::vector<std::uint8_t> AacEncoder::finish() {
  if (finished_) throw Error("AacEncoder finished twice");
  finished_ = true;
  // An empty stream stays empty.
  if (out_.empty() && nbits_ == 0 && pending_ == 0 && low_ == 0 && high_ == kTop) return {};
  ++pending_;
  emit_with_pending(low_ < kQuarter ? 0 : 1);
  while (nbits_ != 0) emit_bit(0);
  return std::move(out_);
}

AacDecoder::AacDecoder(std::span<const std::uint8_t> bytes) : in_(bytes) {
  for (int i = 0; i < 32; ++i) value_ = (value_ << 1) | static_cast<std::uint64_t>(next_bit());
}

int AacDecoder::next_bit() {
  const std::size_t byte = bitpos_ >> 3;
  int bit = 0;
  if (byte < in_.size()) {
    bit = (in_[byte] >> (7 - (bitpos_ & 7))) & 1;
  } else if (bitpos_ >= in_.size() * 8 + kMaxOverrunBits) {
    throw StreamError(in_.size(), "arithmetic stream truncated");
  }
  ++bitpos_;
  return bit;
}

std::uint32_t AacDecoder::get(std::uint32_t alphabet) {
  auto& m = model_for(models_, alphabet);
  const std::uint64_t range = high_ - low_ + 1;
  const std::uint64_t target = ((value_ - low_ + 1) * m.total() - 1) / range;
  std::uint32_t lo = 0, hi = 0;
  const std::uint32_t s = m.find(static_cast<std::uint32_t>(target), lo, hi);
  if (s >= alphabet || value_ < low_ || value_ > high_) throw StreamError(position(), "arithmetic stream corrupt");
  high_ = low_ + range * hi / m.total() - 1;
  low_ = low_ + range * lo / m.total();
  for (;;) {
    if (high_ < kHalf) {
      // nothing to subtract
    } else if (low_ >= kHalf) {
      low_ -= kHalf;
      high_ -= kHalf;
      value_ -= kHalf;
    } else if (low_ >= kQuarter && high_ < kThreeQuarters) {
      low_ -= kQuarter;
      high_ -= kQuarter;
      value_ -= kQuarter;
    } else {
      break;
    }
    low_ = (low_ << 1) & kTop;
    high_ = ((high_ << 1) | 1) & kTop;
    value_ = ((value_ << 1) | static_cast<std::uint64_t>(next_bit())) & kTop;
  }
  m.update(s);
  return s;
}

std::vector<std::uint8_t> aac_encode(std::span<const CodedSymbol> symbols) {
  AacEncoder enc;
  for (const auto& s : symbols) enc.put(s.value, s.alphabet);
  return enc.finish();
}

std::vector<std::uint32_t> aac_decode(std::span<const std::uint8_t> bytes, std::span<const std::uint32_t> alphabets) {
  std::vector<std::uint32_t> out;
  out.reserve(alphabets.size());
  if (alphabets.empty()) return out;
  AacDecoder dec(bytes);
  for (auto a : alphabets) out.push_back(dec.get(a));
  return out;
}

}  // namespace emr4d
