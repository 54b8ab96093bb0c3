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

// Elemental-image-array data model: planes, EI grids, key-EI selection,
// serpentine ordering, GOP grouping and block partitioning into the N x 4
// sample matrices consumed by the mixture fitter.

#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

namespace emr4d {

/// An 8-bit single-channel image, row-major.
struct Plane {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> px;

  Plane() = default;
  Plane(int w, int h, std::uint8_t fill = 0);

  std::uint8_t& at(int x, int y) { return px[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int x, int y) const { return px[static_cast<std::size_t>(y) * width + x]; }

  /// Copies the size x size tile whose top-left pixel is (x0, y0).
  Plane crop(int x0, int y0, int w, int h) const;
  void paste(const Plane& src, int x0, int y0);

  bool operator==(const Plane&) const = default;
};

/// Interleaved 8-bit RGB image.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, 0) {}

  bool operator==(const RgbImage&) const = default;
};

enum class Channel : int { Y = 0, U = 1, V = 2 };

constexpr std::array<Channel, 3> kChannels{Channel::Y, Channel::U, Channel::V};
const char* channel_name(Channel c);

/// 1-based position of an EI inside the full array.
struct EiIndex {
  int row = 1;
  int col = 1;
  bool operator==(const EiIndex&) const = default;
};

/// An m x n array of square elemental images, stored as three full-size
/// planes. `row_ids`/`col_ids` record which rows/columns of the original
/// array this grid holds (identity for a full EIA, the key selection for a
/// key-EIA).
struct EiaGrid {
  int ei_rows = 0;
  int ei_cols = 0;
  int ei_size = 75;
  std::array<Plane, 3> planes;
  std::vector<int> row_ids;
  std::vector<int> col_ids;

  EiaGrid() = default;
  EiaGrid(int rows, int cols, int size, std::uint8_t fill = 0);

  Plane& plane(Channel c) { return planes[static_cast<int>(c)]; }
  const Plane& plane(Channel c) const { return planes[static_cast<int>(c)]; }

  /// Tile of EI (r, c), zero-based within this grid.
  Plane ei(Channel ch, int r, int c) const;
  void set_ei(Channel ch, int r, int c, const Plane& tile);

  bool operator==(const EiaGrid&) const = default;
};

struct Sample4D {
  double x;  // column, 1-based within the block
  double y;  // row, 1-based within the block
  double z;  // frame, 1-based within the group
  double w;  // gray value
};

/// Where a PVS block lives: which GOP group, which block cell of the EI
/// partition, and the pixel rectangle inside each EI.
struct BlockOrigin {
  int group = 0;
  int block_row = 0;
  int block_col = 0;
  int x0 = 0;
  int y0 = 0;
  bool operator==(const BlockOrigin&) const = default;
};

/// Pseudo-video block: the same pixel rectangle taken from `frames`
/// consecutive serpentine-ordered key EIs.
struct PvsBlock {
  BlockOrigin origin;
  int frames = 0;
  int width = 0;
  int height = 0;
  std::vector<int> frame_ids;  // indices into the serpentine sequence
  std::vector<Sample4D> samples;

  std::size_t size() const { return samples.size(); }
};

struct CodecConfig {
  int interval = 5;
  int gop = 4;
  int cb_y = 19;
  int cb_uv = 38;
  double lambda = 1000.0;
  int uv_ei_size = 38;
};

/// Key indices 1, 1+interval, ... with the last index appended when the
/// stride misses it.
std::vector<int> key_indices(int count, int interval);

/// Key-EIA: the EIs at key rows and key columns.
EiaGrid extract_key_eia(const EiaGrid& grid, int interval);

/// Serpentine order over a rows x cols grid, 1-based (row, col): odd rows
/// left to right, even rows right to left.
std::vector<EiIndex> serpentine_scan(int rows, int cols);
inline std::vector<EiIndex> serpentine_scan(const EiaGrid& g) { return serpentine_scan(g.ei_rows, g.ei_cols); }

/// Segment lengths of one EI axis for block size `cb`. Supported: cb in
/// {19, 38} or cb equal to the EI size.
std::vector<int> partition_axis(int ei_size, int cb);

/// Consecutive GOP groups: sizes gop, gop, ..., remainder.
std::vector<std::pair<int, int>> gop_groups(int frame_count, int gop);

/// Splits a serpentine sequence of equally sized EI tiles into PVS blocks,
/// group-major then block-row then block-col.
std::vector<PvsBlock> partition_blocks(const std::vector<Plane>& frames, int cb, int gop);

/// Pixel geometry of the blocks partition_blocks would emit, without samples.
std::vector<PvsBlock> block_layout(int frame_count, int ei_size, int cb, int gop);

/// Fills `block.samples` from EI tiles.
void gather_samples(PvsBlock& block, const std::vector<Plane>& frames);

EiaGrid rgb_to_yuv(const RgbImage& img, int ei_rows, int ei_cols, int ei_size);
RgbImage yuv_to_rgb(const EiaGrid& grid);

/// 2x2 box average with edge replication: 75 -> 38.
Plane downsample_uv(const Plane& tile);
/// Bilinear resample of a tile back to `size` x `size`.
Plane upsample_uv(const Plane& tile, int size);

/// Applies a per-tile resampler to every EI of a tiled plane.
Plane downsample_tiles(const Plane& plane, int rows, int cols, int ei_size);
Plane upsample_tiles(const Plane& plane, int rows, int cols, int small_size, int ei_size);

inline std::uint8_t clamp_u8(double v) {
  if (!(v > 0.0)) return 0;
  if (v >= 255.0) return 255;
  return static_cast<std::uint8_t>(v + 0.5);
}

}  // namespace emr4d
