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

// Encoder-side analysis of the full EIA: corner-shadow line models and the
// row/column parallax between neighbouring EIs, plus their side-information
// encodings.
//
// Shadow geometry. Inside an EI, X and Y are the pixel column and row
// measured from the EI centre ((S - 1) / 2). Each EI has two shadow corners
// bounded by lines of slope k:
//   shadow 1: Y - kX < B1        shadow 2: Y - kX > B2
// with B_p = a_p * d + b_p and d the summed distance of the EI to the nearest
// horizontal and vertical EIA border. The EIA splits into four quadrants
// (1 top-left, 2 top-right, 3 bottom-left, 4 bottom-right); k = +1 in
// quadrants 1 and 4 and -1 in 2 and 3.

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "emr4d/lf_core.hpp"

namespace emr4d {

struct ShadowLine {
  float a = 0;
  float b = 0;

  double intercept(double d) const { return static_cast<double>(a) * d + static_cast<double>(b); }
  bool operator==(const ShadowLine&) const = default;
};

struct QuadrantShadow {
  ShadowLine line1;
  ShadowLine line2;
  bool operator==(const QuadrantShadow&) const = default;
};

struct ShadowModel {
  std::array<QuadrantShadow, 4> quadrant;

  /// No shadow anywhere: B1 below and B2 above every reachable Y - kX.
  static ShadowModel none();
  bool zero_extent() const;
  bool operator==(const ShadowModel&) const = default;
};

/// 1..4 for the 1-based EI position (i, j) of an m x n EIA.
int shadow_quadrant(int i, int j, int m, int n);
int quadrant_slope(int quadrant);
/// min(i, m - i + 1) + min(j, n - j + 1)
int border_distance(int i, int j, int m, int n);

/// Shadow lines resolved for one EI.
struct EiShadow {
  int k = 1;
  double b1 = -1e9;
  double b2 = 1e9;
  double center = 37;
  bool transposed = false;  // (u, v) index a transposed tile

  /// Y - kX at pixel (u, v).
  double line_value(int u, int v) const {
    const double x = (transposed ? v : u) - center;
    const double y = (transposed ? u : v) - center;
    return y - k * x;
  }
  bool in_shadow1(int u, int v) const { return line_value(u, v) < b1; }
  bool in_shadow2(int u, int v) const { return line_value(u, v) > b2; }
  bool in_shadow(int u, int v) const { return in_shadow1(u, v) || in_shadow2(u, v); }
  EiShadow transpose() const {
    EiShadow t = *this;
    t.transposed = !transposed;
    return t;
  }
};

EiShadow ei_shadow(const ShadowModel& model, int i, int j, int m, int n, int ei_size);

/// Boolean mask (1 = shadow) of one EI.
std::vector<std::uint8_t> shadow_mask(const EiShadow& s, int ei_size);

/// Pixels darker than this count as shadow when fitting.
inline constexpr int kShadowThreshold = 20;

struct ShadowFitReport {
  ShadowModel model;
  bool zero_extent = false;
  /// Per quadrant and line, number of EIs that contributed an intercept.
  std::array<std::array<int, 2>, 4> samples{};
};

/// Fits the line model on the luma plane of a full EIA.
ShadowFitReport fit_shadow_model(const EiaGrid& grid);

/// Offsets between neighbouring EIs. col(i, j) relates EI (i, j) and
/// (i, j + 1) of an m x n EIA; row(i, j) relates (i, j) and (i + 1, j).
/// Indices are 1-based. Content of the right (lower) EI is the left (upper)
/// one moved by the offset toward smaller column (row) indices.
struct ParallaxMap {
  int rows = 0;
  int cols = 0;
  std::vector<int> col_offsets;  // rows x (cols - 1)
  std::vector<int> row_offsets;  // (rows - 1) x cols

  ParallaxMap() = default;
  ParallaxMap(int m, int n, int fill = 0);

  int& col(int i, int j) { return col_offsets[static_cast<std::size_t>(i - 1) * (cols - 1) + (j - 1)]; }
  int col(int i, int j) const { return col_offsets[static_cast<std::size_t>(i - 1) * (cols - 1) + (j - 1)]; }
  int& row(int i, int j) { return row_offsets[static_cast<std::size_t>(i - 1) * cols + (j - 1)]; }
  int row(int i, int j) const { return row_offsets[static_cast<std::size_t>(i - 1) * cols + (j - 1)]; }

  int max_offset() const;
  bool operator==(const ParallaxMap&) const = default;
};

inline constexpr int kMaxOffset = 15;
inline constexpr int kRegionHeight = 37;
inline constexpr int kRegionWidth = 45;
inline constexpr int kWindowWidth = 31;

/// Offset between two EI tiles along columns (content of `b` sits `s` pixels
/// left of where it is in `a`). Smallest offset wins ties.
int match_offset(const Plane& a, const Plane& b);

/// Parallax of every adjacent EI pair in the luma plane, before correction.
ParallaxMap detect_parallax_raw(const EiaGrid& grid, int threads = 1);
/// Replaces cells that differ from their 3x3 median by more than 3, until
/// nothing changes (at most 10 passes).
void median_correct(ParallaxMap& map);
/// detect_parallax_raw followed by median_correct.
ParallaxMap detect_parallax(const EiaGrid& grid, int threads = 1);

/// Largest interval with interval * max offset <= ei_size.
int max_interval(const ParallaxMap& map, int ei_size);

std::vector<std::uint8_t> encode_shadow(const ShadowModel& s);
ShadowModel decode_shadow(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_parallax(const ParallaxMap& p);
ParallaxMap decode_parallax(std::span<const std::uint8_t> bytes);

inline std::pair<std::vector<std::uint8_t>, std::vector<std::uint8_t>> encode_side_info(const ShadowModel& s,
                                                                                        const ParallaxMap& p) {
  return {encode_shadow(s), encode_parallax(p)};
}

}  // namespace emr4d
