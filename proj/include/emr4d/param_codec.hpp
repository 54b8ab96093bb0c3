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

// Parameter quantisation and coding: Cholesky factors of the position
// covariance, the per-parameter bit table, span/min marks, the per-channel
// quantised layer and its arithmetic-coded serialisation.

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "emr4d/kernel_math.hpp"
#include "emr4d/lf_core.hpp"

namespace emr4d {

/// Coded parameters in stream order.
enum class Param : int {
  MuX = 0,
  MuY,
  MuZ,
  MuW,
  U11,
  U12,
  U13,
  U22,
  U23,
  U33,
  SigmaXW,
  SigmaYW,
  SigmaZW,
  Alpha,
};
inline constexpr int kParamCount = 14;
const char* param_name(Param p);

struct CholeskyFactors {
  double u11 = 0, u12 = 0, u13 = 0, u22 = 0, u23 = 0, u33 = 0;

  Mat3 upper() const;
  /// U'U
  Mat3 product() const;
};

/// R = U'U with U upper triangular. R must be symmetric PSD; a negative
/// eigenvalue below -1e-9 * max(1, trace) is rejected.
CholeskyFactors cholesky_r(const Mat3& r);

/// Which layout a channel's blocks use: 19-px luma blocks or 38-px chroma.
enum class ChannelClass { Y19, UV38 };
inline ChannelClass channel_class(Channel c) { return c == Channel::Y ? ChannelClass::Y19 : ChannelClass::UV38; }

/// Bit widths per parameter; 0 means not coded.
struct BitTable {
  int nm_bits = 0;
  std::array<int, kParamCount> multi{};
  std::array<int, kParamCount> single{};

  int max_models() const { return 1 << nm_bits; }
  int multi_bits() const;
  int single_bits() const;
  /// Pre-entropy bits of one block with k experts, model-count field included.
  int block_bits(int k) const;
};

/// Bit table for a channel class; mu_Z uses 4 bits when lambda >= 300 and 5
/// otherwise.
BitTable bit_table(ChannelClass cls, double lambda);
BitTable bit_table_for_mu_z(ChannelClass cls, int mu_z_bits);

/// Span/min pair of one parameter, stored as 32-bit floats.
struct QuantMark {
  float min = 0;
  float span = 0;
  bool operator==(const QuantMark&) const = default;
};

/// Smallest float mark whose grid [min, min + span] covers [lo, hi].
QuantMark make_mark(double lo, double hi);
/// As above, but when lo < 0 < hi the grid for `bits` is widened so that
/// 0 is one of its points. Falls back to the plain mark if that fails.
QuantMark make_mark(double lo, double hi, int bits);
/// Grid over whole frames: starts at floor(lo) and puts every integer up to
/// ceil(hi) on a grid point (step 1/r).
QuantMark make_frame_mark(double lo, double hi, int bits);

/// 1-based grid index of the nearest level, ties toward the smaller index.
/// Values outside the grid are clamped and counted in `clamped`.
std::uint32_t quantize(double value, const QuantMark& mark, int bits, std::size_t* clamped = nullptr);
/// M + (k - 1) * E / (2^n - 1)
double dequantize(std::uint32_t k, const QuantMark& mark, int bits);

/// Block pixel geometry, needed to regenerate single-kernel position
/// statistics on the decoder side.
struct BlockGeometry {
  int width = 0;
  int height = 0;
  int frames = 0;
  bool operator==(const BlockGeometry&) const = default;
};

struct QuantizedBlock {
  int k = 0;
  /// Per expert, 1-based grid index per parameter (0 where not coded).
  std::vector<std::array<std::uint32_t, kParamCount>> index;
  bool operator==(const QuantizedBlock&) const = default;
};

/// Canonical coded form of one channel. Encoding and decoding both pass
/// through this layer, so the bytes of a re-encode match exactly.
struct QuantizedChannel {
  Channel channel = Channel::Y;
  KernelKind kind = KernelKind::Epanechnikov;
  int mu_z_bits = 4;
  std::array<QuantMark, kParamCount> marks{};
  std::vector<QuantizedBlock> blocks;

  BitTable table() const { return bit_table_for_mu_z(channel_class(channel), mu_z_bits); }
  bool operator==(const QuantizedChannel&) const = default;
};

/// Parameter values exactly as the coder sees them (after dropping what the
/// channel does not code).
std::array<double, kParamCount> coded_values(const ExpertParams& e);

/// Projects a model onto what the channel can represent: chroma drops the
/// gray cross-covariances and uses equal priors.
MixtureModel codable_projection(const MixtureModel& m, Channel ch);

/// Computes marks over all coded values and quantises every block.
QuantizedChannel quantize_channel(Channel ch, double lambda, std::span<const MixtureModel> models,
                                  std::size_t* clamped = nullptr);

/// Dequantised models; the decoder and the encoder's local reconstruction
/// both call this.
std::vector<MixtureModel> dequantize_channel(const QuantizedChannel& q, std::span<const BlockGeometry> geometry);

/// Total pre-entropy parameter bits of a quantised channel.
std::size_t raw_bits(const QuantizedChannel& q);

std::vector<std::uint8_t> encode_channel(const QuantizedChannel& q);
/// `section` names the container section for error reports.
QuantizedChannel decode_channel(std::span<const std::uint8_t> bytes, Channel ch, const char* section);

}  // namespace emr4d
