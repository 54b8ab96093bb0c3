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

// End-to-end encoder and decoder built from the modules: shadow and parallax
// analysis, key-EI selection, per-block model selection, parameter coding
// and the decoder-side reconstruction.

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "emr4d/kernel_math.hpp"
#include "emr4d/lf_core.hpp"
#include "emr4d/lfbr.hpp"
#include "emr4d/param_codec.hpp"
#include "emr4d/preprocess.hpp"

namespace emr4d {

/// A named (lambda, interval) operating point.
struct Profile {
  const char* name;
  double lambda;
  int interval;
};

inline constexpr std::array<Profile, 4> kProfiles{{
    {"p1000", 1000.0, 5},
    {"p300", 300.0, 5},
    {"p150", 150.0, 4},
    {"p75", 75.0, 3},
}};

const Profile& find_profile(const std::string& name);

struct EncoderOptions {
  CodecConfig config;
  int threads = 1;
  std::uint64_t seed = 0x454D523444ULL;
  PostFilterConfig post;
  KernelKind y_kernel = KernelKind::Epanechnikov;
  KernelKind uv_kernel = KernelKind::Gaussian;
};

/// Everything GEOM records.
struct StreamHeader {
  int rows = 0;
  int cols = 0;
  int ei_size = 75;
  int interval = 5;
  int gop = 4;
  int cb_y = 19;
  int cb_uv = 38;
  int uv_size = 38;
  double lambda = 1000;
  std::vector<int> key_rows;
  std::vector<int> key_cols;
  PostFilterConfig post;

  int frame_count() const { return static_cast<int>(key_rows.size() * key_cols.size()); }
  bool operator==(const StreamHeader&) const;
};

std::vector<std::uint8_t> encode_header(const StreamHeader& h);
StreamHeader decode_header(std::span<const std::uint8_t> bytes);

/// Block geometry of one channel, in coding order.
std::vector<PvsBlock> channel_layout(const StreamHeader& h, Channel ch);

/// Intermediate key-EIA images, all at full EI size.
struct KeyStages {
  EiaGrid regressed;
  EiaGrid deblocked;
  EiaGrid filtered;
};

/// Dequantise, regress, deblock, post-filter and upsample chroma. Encoder and
/// decoder share this path.
EiaGrid reconstruct_key_eia(const StreamHeader& h, const std::array<QuantizedChannel, 3>& channels, int threads = 1,
                            KeyStages* stages = nullptr);

struct ChannelStats {
  std::size_t bytes = 0;     // section payload
  std::size_t raw_bits = 0;  // parameter bits before entropy coding
  std::size_t blocks = 0;
  std::vector<int> k_histogram;  // index k - 1
  std::size_t clamped = 0;
  double distortion = 0;  // sum of block SSEs of the unquantised fits
};

struct EncodeStats {
  int rows = 0, cols = 0, ei_size = 0;
  int interval = 0;
  int max_interval = 0;
  double lambda = 0;
  int key_rows = 0, key_cols = 0;
  std::size_t total_bytes = 0;
  std::size_t side_bytes = 0;  // GEOM, SHAD, PARX and framing
  double bpp = 0;
  std::array<ChannelStats, 3> channels;
  double seconds = 0;
};

struct EncodeResult {
  std::vector<std::uint8_t> bitstream;
  EncodeStats stats;
  StreamHeader header;
  EiaGrid source;              // YUV of the input
  EiaGrid key_reconstruction;  // what the decoder will place at key positions
  ShadowModel shadow;
  ParallaxMap parallax;
  std::array<QuantizedChannel, 3> channels;
};

EncodeResult encode_eia(const RgbImage& image, int rows, int cols, int ei_size, const EncoderOptions& opt);

struct DecodeResult {
  StreamHeader header;
  ShadowModel shadow;
  ParallaxMap parallax;
  std::array<QuantizedChannel, 3> channels;
  KeyStages stages;
  EiaGrid key_eia;
  EiaGrid eia;
  RgbImage image;
};

/// Parses and validates every section without reconstructing pixels.
DecodeResult parse_stream(std::span<const std::uint8_t> bytes);
DecodeResult decode_eia(std::span<const std::uint8_t> bytes, int threads = 1);
/// Serialises decoded structures again; a valid stream comes back unchanged.
std::vector<std::uint8_t> reencode(const DecodeResult& d);

/// Versioned JSON description of an encode run.
std::string stats_json(const EncodeStats& s);
inline constexpr int kStatsSchemaVersion = 1;

}  // namespace emr4d
