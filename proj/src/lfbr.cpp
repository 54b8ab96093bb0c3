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

#include "emr4d/lfbr.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "emr4d/error.hpp"
#include "emr4d/parallel.hpp"

namespace emr4d {

namespace {

Plane transpose(const Plane& p) {
  Plane t(p.height, p.width);
  for (int y = 0; y < p.height; ++y)
    for (int x = 0; x < p.width; ++x) t.at(y, x) = p.at(x, y);
  return t;
}

std::uint8_t lerp_u8(int a, int b, int i, int n) { return static_cast<std::uint8_t>((a * (n - i) + b * i + n / 2) / n); }

// One pass of the border ramp along rows of `t`.
void deblock_rows(Plane& t, const std::vector<int>& borders) {
  for (int y = 0; y < t.height; ++y) {
    for (int b : borders) {
      const int lo = b - kDeblockHalfWidth, hi = b + kDeblockHalfWidth - 1;
      if (lo < 0 || hi >= t.width) continue;
      const int p0 = t.at(lo, y), p1 = t.at(hi, y);
      for (int i = 1; i < hi - lo; ++i) t.at(lo + i, y) = lerp_u8(p0, p1, i, hi - lo);
    }
  }
}

std::vector<double> gaussian_kernel(double sigma) {
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * r + 1);
  double sum = 0;
  for (int i = -r; i <= r; ++i) sum += k[i + r] = std::exp(-0.5 * i * i / (sigma * sigma));
  for (auto& v : k) v /= sum;
  return k;
}

struct Canvas {
  int width = 0;
  int height = 0;
  std::vector<double> v;
  double& at(int x, int y) { return v[static_cast<std::size_t>(y) * width + x]; }
};

// Mean of one ring side and of the line just inside it, skipping shadow
// pixels. side: 0 top, 1 bottom, 2 left, 3 right.
bool has_seam(const Plane& t, const EiShadow& sh, int side) {
  const int s = t.width;
  double ring = 0, inner = 0;
  int n = 0;
  for (int i = 0; i < s; ++i) {
    int u0, v0, u1, v1;
    switch (side) {
      case 0: u0 = i, v0 = 0, u1 = i, v1 = 1; break;
      case 1: u0 = i, v0 = s - 1, u1 = i, v1 = s - 2; break;
      case 2: u0 = 0, v0 = i, u1 = 1, v1 = i; break;
      default: u0 = s - 1, v0 = i, u1 = s - 2, v1 = i; break;
    }
    if (sh.in_shadow(u0, v0) || sh.in_shadow(u1, v1)) continue;
    ring += t.at(u0, v0);
    inner += t.at(u1, v1);
    ++n;
  }
  return n > 0 && (inner - ring) / n > kSeamContrast;
}

}  // namespace

std::vector<Plane> synthesize_frames(std::span<const MixtureModel> models, std::span<const PvsBlock> blocks,
                                     int frame_count, int tile_size, int threads) {
  if (models.size() != blocks.size()) throw InvalidArgument("model count does not match block count");
  std::vector<Plane> frames(frame_count, Plane(tile_size, tile_size));
  parallel_for(blocks.size(), threads, [&](std::size_t b) {
    const auto& blk = blocks[b];
    if (models[b].experts.empty()) {
      throw InvalidArgument("missing model for block (group " + std::to_string(blk.origin.group) + ", row " +
                            std::to_string(blk.origin.block_row) + ", col " + std::to_string(blk.origin.block_col) + ")");
    }
    const PreparedModel pm(models[b], false);
    for (int z = 1; z <= blk.frames; ++z) {
      Plane& f = frames.at(blk.frame_ids.at(z - 1));
      for (int y = 1; y <= blk.height; ++y) {
        for (int x = 1; x <= blk.width; ++x) {
          const double v = pm.regress(Vec3(x, y, z));
          f.at(blk.origin.x0 + x - 1, blk.origin.y0 + y - 1) = clamp_u8(clip_gray(v));
        }
      }
    }
  });
  return frames;
}

void deblock_tile(Plane& tile, int cb) {
  if (tile.width != tile.height) throw InvalidArgument("deblock expects square tiles");
  std::vector<int> borders;
  int acc = 0;
  const auto seg = partition_axis(tile.width, cb);
  for (std::size_t i = 0; i + 1 < seg.size(); ++i) borders.push_back(acc += seg[i]);
  if (borders.empty()) return;
  deblock_rows(tile, borders);
  Plane t = transpose(tile);
  deblock_rows(t, borders);
  tile = transpose(t);
}

void post_filter_tile(Plane& tile, double strength) {
  const double sigma = post_filter_sigma(strength);
  if (!(sigma > 0)) return;
  const auto k = gaussian_kernel(sigma);
  const int r = static_cast<int>(k.size() / 2);
  const int w = tile.width, h = tile.height;
  std::vector<double> tmp(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double s = 0;
      for (int i = -r; i <= r; ++i) s += k[i + r] * tile.at(std::clamp(x + i, 0, w - 1), y);
      tmp[static_cast<std::size_t>(y) * w + x] = s;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double s = 0;
      for (int i = -r; i <= r; ++i) s += k[i + r] * tmp[static_cast<std::size_t>(std::clamp(y + i, 0, h - 1)) * w + x];
      tile.at(x, y) = clamp_u8(s);
    }
}

EiaGrid assemble_key_eia(const std::array<std::vector<Plane>, 3>& frames, const std::vector<int>& row_ids,
                         const std::vector<int>& col_ids, int ei_size) {
  const int rows = static_cast<int>(row_ids.size()), cols = static_cast<int>(col_ids.size());
  EiaGrid g(rows, cols, ei_size);
  g.row_ids = row_ids;
  g.col_ids = col_ids;
  const auto order = serpentine_scan(rows, cols);
  for (Channel ch : kChannels) {
    const auto& f = frames[static_cast<int>(ch)];
    if (f.size() != order.size()) throw InvalidArgument("frame count does not match key-EIA size");
    for (std::size_t t = 0; t < order.size(); ++t) {
      if (f[t].width != ei_size || f[t].height != ei_size) throw InvalidArgument("key tile has the wrong size");
      g.set_ei(ch, order[t].row - 1, order[t].col - 1, f[t]);
    }
  }
  return g;
}

Plane deshade_corners(const Plane& tile, const EiShadow& sh) {
  Plane out = tile;
  const int s = tile.width;
  const double c = sh.center;
  const double depth = kDeshadeDepth * std::sqrt(2.0);
  for (int v = 0; v < s; ++v) {
    for (int u = 0; u < s; ++u) {
      const bool s1 = sh.in_shadow1(u, v);
      if (!s1 && !sh.in_shadow2(u, v)) continue;
      // Move along the line normal until the line value is `depth` past the
      // edge; Y - kX changes by 2t for a step t * (-k, 1).
      const double f = sh.line_value(u, v);
      const double t = s1 ? (sh.b1 + depth - f) / 2.0 : (sh.b2 - depth - f) / 2.0;
      double x = (sh.transposed ? v : u) - c - sh.k * t;
      double y = (sh.transposed ? u : v) - c + t;
      int tu = 0, tv = 0;
      for (int step = 0; step <= 2 * s; ++step) {
        const double px = sh.transposed ? y : x, py = sh.transposed ? x : y;
        tu = std::clamp(static_cast<int>(std::lround(px + c)), 0, s - 1);
        tv = std::clamp(static_cast<int>(std::lround(py + c)), 0, s - 1);
        if (!sh.in_shadow(tu, tv)) break;
        // Still dark (rounding or the other corner): creep toward the centre.
        const double len = std::hypot(x, y);
        if (len < 1) break;
        x -= x / len;
        y -= y / len;
      }
      out.at(u, v) = tile.at(tu, tv);
    }
  }
  return out;
}

std::vector<Plane> predict_gap(const Plane& left, const Plane& right, std::span<const int> offsets,
                               std::span<const EiShadow> shadows, int band) {
  const int g = static_cast<int>(offsets.size());
  const int s = left.width;
  if (shadows.size() != offsets.size() + 1) throw InvalidArgument("need one shadow entry per EI of the run");
  if (g < 2) return {};
  std::vector<int> cum(g + 1, 0);
  for (int t = 0; t < g; ++t) {
    if (offsets[t] < 0) throw InvalidArgument("negative offset");
    cum[t + 1] = cum[t] + offsets[t];
  }
  const int d = cum[g];
  if (d > s) {
    throw InvalidArgument("offsets sum to " + std::to_string(d) + ", residual rd = " + std::to_string(s - d) +
                          " is negative");
  }
  const EiShadow& sa = shadows.front();
  const EiShadow& sb = shadows.back();
  Plane a = deshade_corners(left, sa), b = deshade_corners(right, sb);
  for (Plane* p : {&a, &b}) {
    for (int v = 0; v < s; ++v) {
      for (int u = 0; u < band; ++u) p->at(u, v) = p->at(band, v);
      for (int u = s - band; u < s; ++u) p->at(u, v) = p->at(s - band - 1, v);
    }
  }
  auto valid = [&](const EiShadow& sh, int u, int v) { return u >= band && u < s - band && !sh.in_shadow(u, v); };

  Canvas cv{d + s, s, std::vector<double>(static_cast<std::size_t>(d + s) * s)};
  for (int v = 0; v < s; ++v) {
    for (int x = 0; x < d + s; ++x) {
      const bool has_a = x < s, has_b = x >= d;
      if (has_a && has_b) {
        const double r = (x - d + 0.5) / (s - d);
        double wa = (1 - r) * (valid(sa, x, v) ? 1 : 0);
        double wb = r * (valid(sb, x - d, v) ? 1 : 0);
        if (wa + wb == 0) {
          wa = 1 - r;
          wb = r;
        }
        cv.at(x, v) = (wa * a.at(x, v) + wb * b.at(x - d, v)) / (wa + wb);
      } else {
        cv.at(x, v) = has_a ? a.at(x, v) : b.at(x - d, v);
      }
    }
  }

  // Dark reference for shadow pixels the anchors cannot supply directly.
  double dark_sum = 0;
  int dark_n = 0;
  for (const auto& [p, sh] : {std::pair<const Plane*, const EiShadow*>{&left, &sa}, {&right, &sb}}) {
    if (dark_n > 0) break;
    for (int v = 0; v < s; ++v)
      for (int u = 0; u < s; ++u)
        if (sh->in_shadow(u, v)) {
          dark_sum += p->at(u, v);
          ++dark_n;
        }
  }
  const std::uint8_t dark = dark_n > 0 ? clamp_u8(dark_sum / dark_n) : static_cast<std::uint8_t>(kShadowThreshold / 2);

  bool seam[4];
  for (int side = 0; side < 4; ++side) seam[side] = has_seam(left, sa, side) && has_seam(right, sb, side);

  std::vector<Plane> out;
  for (int t = 1; t < g; ++t) {
    Plane e(s, s);
    for (int v = 0; v < s; ++v)
      for (int u = 0; u < s; ++u) e.at(u, v) = clamp_u8(cv.at(cum[t] + u, v));
    const EiShadow& sh = shadows[t];
    for (int v = 0; v < s; ++v) {
      for (int u = 0; u < s; ++u) {
        if (!sh.in_shadow(u, v)) continue;
        if (sa.in_shadow(u, v)) {
          e.at(u, v) = left.at(u, v);
        } else if (sb.in_shadow(u, v)) {
          e.at(u, v) = right.at(u, v);
        } else {
          e.at(u, v) = dark;
        }
      }
    }
    const double r = static_cast<double>(t) / g;
    for (int side = 0; side < 4; ++side) {
      if (!seam[side]) continue;
      for (int i = 0; i < s; ++i) {
        const int u = side == 2 ? 0 : (side == 3 ? s - 1 : i);
        const int v = side == 0 ? 0 : (side == 1 ? s - 1 : i);
        if (sh.in_shadow(u, v)) continue;
        e.at(u, v) = clamp_u8((1 - r) * left.at(u, v) + r * right.at(u, v));
      }
    }
    out.push_back(std::move(e));
  }
  return out;
}

EiaGrid reconstruct_full_eia(const EiaGrid& key, const ParallaxMap& parallax, const ShadowModel& shadow, int threads) {
  const int m = parallax.rows, n = parallax.cols, s = key.ei_size;
  const auto& rows = key.row_ids;
  const auto& cols = key.col_ids;
  if (rows.empty() || cols.empty() || rows.front() != 1 || cols.front() != 1 || rows.back() != m || cols.back() != n) {
    throw InvalidArgument("key-EIA selection does not span the " + std::to_string(m) + "x" + std::to_string(n) + " EIA");
  }
  if (!std::is_sorted(rows.begin(), rows.end()) || !std::is_sorted(cols.begin(), cols.end())) {
    throw InvalidArgument("key indices must be increasing");
  }
  EiaGrid out(m, n, s);
  for (int i = 1; i <= m; ++i) out.row_ids.push_back(i);
  for (int j = 1; j <= n; ++j) out.col_ids.push_back(j);
  for (std::size_t a = 0; a < rows.size(); ++a)
    for (std::size_t b = 0; b < cols.size(); ++b)
      for (Channel ch : kChannels) out.set_ei(ch, rows[a] - 1, cols[b] - 1, key.ei(ch, static_cast<int>(a), static_cast<int>(b)));

  auto gap_error = [](const char* axis, int fixed, int lo, int hi, const std::exception& e) {
    return InvalidArgument(std::string(axis) + " gap " + std::to_string(fixed) + ":" + std::to_string(lo) + "-" +
                           std::to_string(hi) + ": " + e.what());
  };

  // Column pass inside key rows.
  struct Task {
    int fixed, lo, hi;
  };
  std::vector<Task> tasks;
  for (int i : rows)
    for (std::size_t b = 0; b + 1 < cols.size(); ++b)
      if (cols[b + 1] - cols[b] >= 2) tasks.push_back({i, cols[b], cols[b + 1]});
  parallel_for(tasks.size(), threads, [&](std::size_t k) {
    const auto [i, j0, j1] = tasks[k];
    std::vector<int> off;
    std::vector<EiShadow> sh;
    for (int j = j0; j < j1; ++j) off.push_back(parallax.col(i, j));
    for (int j = j0; j <= j1; ++j) sh.push_back(ei_shadow(shadow, i, j, m, n, s));
    for (Channel ch : kChannels) {
      std::vector<Plane> mid;
      try {
        mid = predict_gap(out.ei(ch, i - 1, j0 - 1), out.ei(ch, i - 1, j1 - 1), off, sh, kDeshadeColumns);
      } catch (const InvalidArgument& e) {
        throw gap_error("row", i, j0, j1, e);
      }
      for (int t = 0; t < static_cast<int>(mid.size()); ++t) out.set_ei(ch, i - 1, j0 + t, mid[t]);
    }
  });

  // Row pass for every column, from the rows completed above.
  tasks.clear();
  for (int j = 1; j <= n; ++j)
    for (std::size_t a = 0; a + 1 < rows.size(); ++a)
      if (rows[a + 1] - rows[a] >= 2) tasks.push_back({j, rows[a], rows[a + 1]});
  parallel_for(tasks.size(), threads, [&](std::size_t k) {
    const auto [j, i0, i1] = tasks[k];
    std::vector<int> off;
    std::vector<EiShadow> sh;
    for (int i = i0; i < i1; ++i) off.push_back(parallax.row(i, j));
    for (int i = i0; i <= i1; ++i) sh.push_back(ei_shadow(shadow, i, j, m, n, s).transpose());
    for (Channel ch : kChannels) {
      std::vector<Plane> mid;
      try {
        mid = predict_gap(transpose(out.ei(ch, i0 - 1, j - 1)), transpose(out.ei(ch, i1 - 1, j - 1)), off, sh,
                          kDeshadeRows);
      } catch (const InvalidArgument& e) {
        throw gap_error("column", j, i0, i1, e);
      }
      for (int t = 0; t < static_cast<int>(mid.size()); ++t) out.set_ei(ch, i0 + t, j - 1, transpose(mid[t]));
    }
  });
  return out;
}

}  // namespace emr4d
