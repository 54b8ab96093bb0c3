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

#include "emr4d/lf_core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "emr4d/error.hpp"

namespace emr4d {

Plane::Plane(int w, int h, std::uint8_t fill)
    : width(w), height(h), px(static_cast<std::size_t>(w) * h, fill) {}

Plane Plane::crop(int x0, int y0, int w, int h) const {
  if (x0 < 0 || y0 < 0 || x0 + w > width || y0 + h > height)
    throw InvalidArgument("crop rectangle outside plane");
  Plane out(w, h);
  for (int y = 0; y < h; ++y)
    std::copy_n(&px[static_cast<std::size_t>(y0 + y) * width + x0], w, &out.px[static_cast<std::size_t>(y) * w]);
  return out;
}

void Plane::paste(const Plane& src, int x0, int y0) {
  if (x0 < 0 || y0 < 0 || x0 + src.width > width || y0 + src.height > height)
    throw InvalidArgument("paste rectangle outside plane");
  for (int y = 0; y < src.height; ++y)
    std::copy_n(&src.px[static_cast<std::size_t>(y) * src.width], src.width,
                &px[static_cast<std::size_t>(y0 + y) * width + x0]);
}

const char* channel_name(Channel c) {
  switch (c) {
    case Channel::Y: return "Y";
    case Channel::U: return "U";
    case Channel::V: return "V";
  }
  return "?";
}

EiaGrid::EiaGrid(int rows, int cols, int size, std::uint8_t fill)
    : ei_rows(rows), ei_cols(cols), ei_size(size) {
  if (rows <= 0 || cols <= 0 || size <= 0) throw InvalidArgument("EIA geometry must be positive");
  for (auto& p : planes) p = Plane(cols * size, rows * size, fill);
  row_ids.resize(rows);
  col_ids.resize(cols);
  for (int i = 0; i < rows; ++i) row_ids[i] = i + 1;
  for (int j = 0; j < cols; ++j) col_ids[j] = j + 1;
}

Plane EiaGrid::ei(Channel ch, int r, int c) const {
  return plane(ch).crop(c * ei_size, r * ei_size, ei_size, ei_size);
}

void EiaGrid::set_ei(Channel ch, int r, int c, const Plane& tile) {
  if (tile.width != ei_size || tile.height != ei_size) throw InvalidArgument("tile size mismatch");
  plane(ch).paste(tile, c * ei_size, r * ei_size);
}

std::vector<int> key_indices(int count, int interval) {
  if (interval < 1) throw InvalidArgument("interval must be >= 1");
  if (count < 1) throw InvalidArgument("grid dimension must be >= 1");
  std::vector<int> ids;
  for (int i = 1; i <= count; i += interval) ids.push_back(i);
  if (ids.back() != count) ids.push_back(count);
  return ids;
}

EiaGrid extract_key_eia(const EiaGrid& grid, int interval) {
  if (interval < 1) throw InvalidArgument("interval must be >= 1");
  if (interval > std::max(grid.ei_rows, grid.ei_cols))
    throw InvalidArgument("interval " + std::to_string(interval) + " exceeds grid dimensions");
  const auto rows = key_indices(grid.ei_rows, interval);
  const auto cols = key_indices(grid.ei_cols, interval);
  EiaGrid key(static_cast<int>(rows.size()), static_cast<int>(cols.size()), grid.ei_size);
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < cols.size(); ++c)
      for (Channel ch : kChannels) key.set_ei(ch, r, c, grid.ei(ch, rows[r] - 1, cols[c] - 1));
  key.row_ids.clear();
  key.col_ids.clear();
  for (int r : rows) key.row_ids.push_back(grid.row_ids[r - 1]);
  for (int c : cols) key.col_ids.push_back(grid.col_ids[c - 1]);
  return key;
}

std::vector<EiIndex> serpentine_scan(int rows, int cols) {
  if (rows < 1 || cols < 1) throw InvalidArgument("serpentine scan of empty grid");
  std::vector<EiIndex> order;
  order.reserve(static_cast<std::size_t>(rows) * cols);
  for (int r = 1; r <= rows; ++r) {
    if (r % 2 == 1) {
      for (int c = 1; c <= cols; ++c) order.push_back({r, c});
    } else {
      for (int c = cols; c >= 1; --c) order.push_back({r, c});
    }
  }
  return order;
}

std::vector<int> partition_axis(int ei_size, int cb) {
  const bool supported = cb == 19 || cb == 38 || cb == ei_size;
  if (!supported || cb <= 0 || cb > ei_size)
    throw InvalidArgument("unsupported block size " + std::to_string(cb) + " for EI size " +
                          std::to_string(ei_size));
  std::vector<int> seg;
  int left = ei_size;
  while (left > 0) {
    const int s = std::min(cb, left);
    seg.push_back(s);
    left -= s;
  }
  return seg;
}

std::vector<std::pair<int, int>> gop_groups(int frame_count, int gop) {
  if (gop < 1) throw InvalidArgument("gop must be >= 1");
  std::vector<std::pair<int, int>> groups;
  for (int start = 0; start < frame_count; start += gop)
    groups.emplace_back(start, std::min(gop, frame_count - start));
  return groups;
}

std::vector<PvsBlock> block_layout(int frame_count, int ei_size, int cb, int gop) {
  const auto seg = partition_axis(ei_size, cb);
  std::vector<PvsBlock> blocks;
  const auto groups = gop_groups(frame_count, gop);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    int y0 = 0;
    for (std::size_t br = 0; br < seg.size(); ++br) {
      int x0 = 0;
      for (std::size_t bc = 0; bc < seg.size(); ++bc) {
        PvsBlock b;
        b.origin = {static_cast<int>(g), static_cast<int>(br), static_cast<int>(bc), x0, y0};
        b.frames = groups[g].second;
        b.width = seg[bc];
        b.height = seg[br];
        for (int f = 0; f < b.frames; ++f) b.frame_ids.push_back(groups[g].first + f);
        blocks.push_back(std::move(b));
        x0 += seg[bc];
      }
      y0 += seg[br];
    }
  }
  return blocks;
}

void gather_samples(PvsBlock& block, const std::vector<Plane>& frames) {
  block.samples.clear();
  block.samples.reserve(static_cast<std::size_t>(block.width) * block.height * block.frames);
  for (int f = 0; f < block.frames; ++f) {
    const Plane& fr = frames.at(block.frame_ids[f]);
    for (int y = 0; y < block.height; ++y)
      for (int x = 0; x < block.width; ++x)
        block.samples.push_back({static_cast<double>(x + 1), static_cast<double>(y + 1),
                                 static_cast<double>(f + 1),
                                 static_cast<double>(fr.at(block.origin.x0 + x, block.origin.y0 + y))});
  }
}

std::vector<PvsBlock> partition_blocks(const std::vector<Plane>& frames, int cb, int gop) {
  if (frames.empty()) return {};
  const int size = frames.front().width;
  for (const auto& f : frames)
    if (f.width != size || f.height != size) throw InvalidArgument("PVS frames must share one square size");
  auto blocks = block_layout(static_cast<int>(frames.size()), size, cb, gop);
  for (auto& b : blocks) gather_samples(b, frames);
  return blocks;
}

EiaGrid rgb_to_yuv(const RgbImage& img, int ei_rows, int ei_cols, int ei_size) {
  if (img.width != ei_cols * ei_size || img.height != ei_rows * ei_size)
    throw InvalidArgument("image size " + std::to_string(img.width) + "x" + std::to_string(img.height) +
                          " does not match EIA geometry");
  EiaGrid g(ei_rows, ei_cols, ei_size);
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = img.rgb[3 * i], gr = img.rgb[3 * i + 1], b = img.rgb[3 * i + 2];
    g.planes[0].px[i] = clamp_u8(0.299 * r + 0.587 * gr + 0.114 * b);
    g.planes[1].px[i] = clamp_u8(-0.168736 * r - 0.331264 * gr + 0.5 * b + 128.0);
    g.planes[2].px[i] = clamp_u8(0.5 * r - 0.418688 * gr - 0.081312 * b + 128.0);
  }
  return g;
}

RgbImage yuv_to_rgb(const EiaGrid& grid) {
  const Plane& yp = grid.plane(Channel::Y);
  RgbImage out(yp.width, yp.height);
  const std::size_t n = yp.px.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double y = grid.planes[0].px[i];
    const double u = grid.planes[1].px[i] - 128.0;
    const double v = grid.planes[2].px[i] - 128.0;
    out.rgb[3 * i] = clamp_u8(y + 1.402 * v);
    out.rgb[3 * i + 1] = clamp_u8(y - 0.344136 * u - 0.714136 * v);
    out.rgb[3 * i + 2] = clamp_u8(y + 1.772 * u);
  }
  return out;
}

Plane downsample_uv(const Plane& tile) {
  const int ow = (tile.width + 1) / 2;
  const int oh = (tile.height + 1) / 2;
  Plane out(ow, oh);
  for (int y = 0; y < oh; ++y) {
    const int y0 = 2 * y, y1 = std::min(2 * y + 1, tile.height - 1);
    for (int x = 0; x < ow; ++x) {
      const int x0 = 2 * x, x1 = std::min(2 * x + 1, tile.width - 1);
      const int sum = tile.at(x0, y0) + tile.at(x1, y0) + tile.at(x0, y1) + tile.at(x1, y1);
      out.at(x, y) = static_cast<std::uint8_t>((sum + 2) / 4);
    }
  }
  return out;
}

Plane upsample_uv(const Plane& tile, int size) {
  Plane out(size, size);
  const double sx = static_cast<double>(tile.width) / size;
  const double sy = static_cast<double>(tile.height) / size;
  for (int y = 0; y < size; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, tile.height - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, tile.height - 1);
    const double ty = fy - y0;
    for (int x = 0; x < size; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, tile.width - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, tile.width - 1);
      const double tx = fx - x0;
      const double top = tile.at(x0, y0) * (1 - tx) + tile.at(x1, y0) * tx;
      const double bot = tile.at(x0, y1) * (1 - tx) + tile.at(x1, y1) * tx;
      out.at(x, y) = clamp_u8(top * (1 - ty) + bot * ty);
    }
  }
  return out;
}

Plane downsample_tiles(const Plane& plane, int rows, int cols, int ei_size) {
  const int small = (ei_size + 1) / 2;
  Plane out(cols * small, rows * small);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      out.paste(downsample_uv(plane.crop(c * ei_size, r * ei_size, ei_size, ei_size)), c * small, r * small);
  return out;
}

Plane upsample_tiles(const Plane& plane, int rows, int cols, int small_size, int ei_size) {
  Plane out(cols * ei_size, rows * ei_size);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      out.paste(upsample_uv(plane.crop(c * small_size, r * small_size, small_size, small_size), ei_size),
                c * ei_size, r * ei_size);
  return out;
}

}  // namespace emr4d
