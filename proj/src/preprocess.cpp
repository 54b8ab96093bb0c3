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

#include "emr4d/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "emr4d/aac.hpp"
#include "emr4d/bytes.hpp"
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

// Mean intercept Y - kX over rows where the dark run starting at one EI side
// ends inside the row. Returns NaN with fewer than two such rows.
double ei_intercept(const Plane& tile, int k, bool from_right) {
  const int s = tile.width;
  const double c = (s - 1) / 2.0;
  double sum = 0;
  int count = 0;
  for (int v = 0; v < tile.height; ++v) {
    int run = 0;
    while (run < s) {
      const int u = from_right ? s - 1 - run : run;
      if (tile.at(u, v) >= kShadowThreshold) break;
      ++run;
    }
    if (run == 0 || run == s) continue;
    const double x_edge = (from_right ? s - run - 0.5 : run - 0.5) - c;
    sum += (v - c) - k * x_edge;
    ++count;
  }
  return count >= 2 ? sum / count : std::numeric_limits<double>::quiet_NaN();
}

// Shadow 1 lies on the right of each row when k = +1, shadow 2 on the left;
// the sides swap for k = -1.
bool line_on_right(int line, int k) { return (line == 1) == (k > 0); }

ShadowLine fit_line(const std::vector<std::pair<double, double>>& pts, double empty_b) {
  if (pts.empty()) return {0.0f, static_cast<float>(empty_b)};
  double sd = 0, sb = 0;
  for (auto [d, b] : pts) {
    sd += d;
    sb += b;
  }
  const double n = static_cast<double>(pts.size());
  const double md = sd / n, mb = sb / n;
  double sdd = 0, sdb = 0;
  for (auto [d, b] : pts) {
    sdd += (d - md) * (d - md);
    sdb += (d - md) * (b - mb);
  }
  const double a = sdd > 0 ? sdb / sdd : 0.0;
  return {static_cast<float>(a), static_cast<float>(mb - a * md)};
}

double window_mse(const Plane& a, const Plane& b, int s) {
  const int r0 = (a.height - kRegionHeight) / 2;
  const int xa = (a.width - kRegionWidth) / 2 + kRegionWidth - kWindowWidth;
  const int xb = xa - s;
  double acc = 0;
  for (int y = r0; y < r0 + kRegionHeight; ++y) {
    const std::uint8_t* pa = &a.px[static_cast<std::size_t>(y) * a.width + xa];
    const std::uint8_t* pb = &b.px[static_cast<std::size_t>(y) * b.width + xb];
    for (int t = 0; t < kWindowWidth; ++t) {
      const double d = static_cast<double>(pa[t]) - pb[t];
      acc += d * d;
    }
  }
  return acc / (kRegionHeight * kWindowWidth);
}

bool median_pass(std::vector<int>& v, int rows, int cols) {
  if (rows <= 0 || cols <= 0) return false;
  const std::vector<int> src = v;
  bool changed = false;
  std::vector<int> nb;
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      nb.clear();
      for (int di = -1; di <= 1; ++di)
        for (int dj = -1; dj <= 1; ++dj) {
          const int ii = i + di, jj = j + dj;
          if (ii >= 0 && ii < rows && jj >= 0 && jj < cols) nb.push_back(src[static_cast<std::size_t>(ii) * cols + jj]);
        }
      std::nth_element(nb.begin(), nb.begin() + nb.size() / 2, nb.end());
      const int med = nb[nb.size() / 2];
      int& cell = v[static_cast<std::size_t>(i) * cols + j];
      if (std::abs(cell - med) > 3) {
        cell = med;
        changed = true;
      }
    }
  }
  return changed;
}

void append_serpentine(std::vector<int>& out, const std::vector<int>& v, int rows, int cols) {
  if (rows <= 0 || cols <= 0) return;
  for (const auto& e : serpentine_scan(rows, cols)) out.push_back(v[static_cast<std::size_t>(e.row - 1) * cols + (e.col - 1)]);
}

void take_serpentine(std::vector<int>& v, const std::vector<int>& seq, std::size_t& pos, int rows, int cols) {
  v.assign(static_cast<std::size_t>(std::max(rows, 0)) * std::max(cols, 0), 0);
  if (rows <= 0 || cols <= 0) return;
  for (const auto& e : serpentine_scan(rows, cols)) v[static_cast<std::size_t>(e.row - 1) * cols + (e.col - 1)] = seq[pos++];
}

constexpr std::uint32_t kDiffAlphabet = 2 * kMaxOffset + 1;

}  // namespace

ShadowModel ShadowModel::none() {
  ShadowModel m;
  for (auto& q : m.quadrant) {
    q.line1 = {0.0f, -1000.0f};
    q.line2 = {0.0f, 1000.0f};
  }
  return m;
}

bool ShadowModel::zero_extent() const {
  for (const auto& q : quadrant) {
    if (q.line1.a != 0 || q.line2.a != 0 || q.line1.b > -75.0f || q.line2.b < 75.0f) return false;
  }
  return true;
}

int shadow_quadrant(int i, int j, int m, int n) {
  const bool top = 2 * i <= m + 1;
  const bool left = 2 * j <= n + 1;
  return top ? (left ? 1 : 2) : (left ? 3 : 4);
}

int quadrant_slope(int quadrant) { return (quadrant == 1 || quadrant == 4) ? 1 : -1; }

int border_distance(int i, int j, int m, int n) { return std::min(i, m - i + 1) + std::min(j, n - j + 1); }

EiShadow ei_shadow(const ShadowModel& model, int i, int j, int m, int n, int ei_size) {
  const int q = shadow_quadrant(i, j, m, n);
  const double d = border_distance(i, j, m, n);
  EiShadow s;
  s.k = quadrant_slope(q);
  s.b1 = model.quadrant[q - 1].line1.intercept(d);
  s.b2 = model.quadrant[q - 1].line2.intercept(d);
  s.center = (ei_size - 1) / 2.0;
  return s;
}

std::vector<std::uint8_t> shadow_mask(const EiShadow& s, int ei_size) {
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(ei_size) * ei_size, 0);
  for (int v = 0; v < ei_size; ++v)
    for (int u = 0; u < ei_size; ++u) mask[static_cast<std::size_t>(v) * ei_size + u] = s.in_shadow(u, v) ? 1 : 0;
  return mask;
}

ShadowFitReport fit_shadow_model(const EiaGrid& grid) {
  const int m = grid.ei_rows, n = grid.ei_cols;
  std::array<std::array<std::vector<std::pair<double, double>>, 2>, 4> pts;
  for (int r = 0; r < m; ++r) {
    for (int c = 0; c < n; ++c) {
      const int i = r + 1, j = c + 1;
      const int q = shadow_quadrant(i, j, m, n);
      const int k = quadrant_slope(q);
      const double d = border_distance(i, j, m, n);
      const Plane tile = grid.ei(Channel::Y, r, c);
      for (int line = 1; line <= 2; ++line) {
        const double b = ei_intercept(tile, k, line_on_right(line, k));
        if (!std::isnan(b)) pts[q - 1][line - 1].emplace_back(d, b);
      }
    }
  }
  ShadowFitReport rep;
  const ShadowModel empty = ShadowModel::none();
  bool any = false;
  for (int q = 0; q < 4; ++q) {
    rep.samples[q] = {static_cast<int>(pts[q][0].size()), static_cast<int>(pts[q][1].size())};
    rep.model.quadrant[q].line1 = pts[q][0].empty() ? empty.quadrant[q].line1 : fit_line(pts[q][0], 0);
    rep.model.quadrant[q].line2 = pts[q][1].empty() ? empty.quadrant[q].line2 : fit_line(pts[q][1], 0);
    any = any || !pts[q][0].empty() || !pts[q][1].empty();
  }
  rep.zero_extent = !any;
  return rep;
}

ParallaxMap::ParallaxMap(int m, int n, int fill)
    : rows(m),
      cols(n),
      col_offsets(static_cast<std::size_t>(m) * std::max(n - 1, 0), fill),
      row_offsets(static_cast<std::size_t>(std::max(m - 1, 0)) * n, fill) {}

int ParallaxMap::max_offset() const {
  int mx = 0;
  for (int v : col_offsets) mx = std::max(mx, v);
  for (int v : row_offsets) mx = std::max(mx, v);
  return mx;
}

int match_offset(const Plane& a, const Plane& b) {
  if (a.width != b.width || a.height != b.height) throw InvalidArgument("EI tiles differ in size");
  if (a.height < kRegionHeight || (a.width - kRegionWidth) / 2 + kRegionWidth - kWindowWidth < kMaxOffset) {
    throw InvalidArgument("EI of " + std::to_string(a.width) + " px is too small for the offset search window");
  }
  int best = 0;
  double best_mse = std::numeric_limits<double>::infinity();
  for (int s = 0; s <= kMaxOffset; ++s) {
    const double e = window_mse(a, b, s);
    if (e < best_mse) {
      best_mse = e;
      best = s;
    }
  }
  return best;
}

ParallaxMap detect_parallax_raw(const EiaGrid& grid, int threads) {
  const int m = grid.ei_rows, n = grid.ei_cols;
  ParallaxMap map(m, n);
  const std::size_t ncol = map.col_offsets.size();
  const std::size_t total = ncol + map.row_offsets.size();
  parallel_for(total, threads, [&](std::size_t t) {
    if (t < ncol) {
      const int i = static_cast<int>(t) / (n - 1) + 1, j = static_cast<int>(t) % (n - 1) + 1;
      map.col_offsets[t] = match_offset(grid.ei(Channel::Y, i - 1, j - 1), grid.ei(Channel::Y, i - 1, j));
    } else {
      const std::size_t u = t - ncol;
      const int i = static_cast<int>(u) / n + 1, j = static_cast<int>(u) % n + 1;
      map.row_offsets[u] =
          match_offset(transpose(grid.ei(Channel::Y, i - 1, j - 1)), transpose(grid.ei(Channel::Y, i, j - 1)));
    }
  });
  return map;
}

void median_correct(ParallaxMap& map) {
  for (int pass = 0; pass < 10; ++pass) {
    if (!median_pass(map.col_offsets, map.rows, map.cols - 1)) break;
  }
  for (int pass = 0; pass < 10; ++pass) {
    if (!median_pass(map.row_offsets, map.rows - 1, map.cols)) break;
  }
}

ParallaxMap detect_parallax(const EiaGrid& grid, int threads) {
  ParallaxMap map = detect_parallax_raw(grid, threads);
  median_correct(map);
  return map;
}

int max_interval(const ParallaxMap& map, int ei_size) {
  const int mx = map.max_offset();
  return mx == 0 ? ei_size : ei_size / mx;
}

std::vector<std::uint8_t> encode_shadow(const ShadowModel& s) {
  ByteWriter w;
  for (const auto& q : s.quadrant) {
    w.f32(q.line1.a);
    w.f32(q.line1.b);
    w.f32(q.line2.a);
    w.f32(q.line2.b);
  }
  return w.take();
}

ShadowModel decode_shadow(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "SHAD");
  ShadowModel s;
  for (auto& q : s.quadrant) {
    q.line1.a = r.f32();
    q.line1.b = r.f32();
    q.line2.a = r.f32();
    q.line2.b = r.f32();
    for (float v : {q.line1.a, q.line1.b, q.line2.a, q.line2.b}) {
      if (!std::isfinite(v)) r.fail("non-finite shadow coefficient");
    }
  }
  r.expect_end();
  return s;
}

std::vector<std::uint8_t> encode_parallax(const ParallaxMap& p) {
  std::vector<int> seq;
  append_serpentine(seq, p.col_offsets, p.rows, p.cols - 1);
  append_serpentine(seq, p.row_offsets, p.rows - 1, p.cols);
  ByteWriter w;
  w.u16(static_cast<std::uint16_t>(p.rows));
  w.u16(static_cast<std::uint16_t>(p.cols));
  const bool flat = !seq.empty() && std::all_of(seq.begin(), seq.end(), [&](int v) { return v == seq.front(); });
  if (flat) {
    if (seq.front() < 0 || seq.front() > kMaxOffset) throw InvalidArgument("offset out of range: " + std::to_string(seq.front()));
    w.u8(1);
    w.u8(static_cast<std::uint8_t>(seq.front()));
    return w.take();
  }
  if (seq.empty()) return w.take();
  w.u8(0);
  AacEncoder enc;
  int prev = 0;
  for (int v : seq) {
    if (v < 0 || v > kMaxOffset) throw InvalidArgument("offset out of range: " + std::to_string(v));
    enc.put(static_cast<std::uint32_t>(v - prev + kMaxOffset), kDiffAlphabet);
    prev = v;
  }
  w.bytes(enc.finish());
  return w.take();
}

ParallaxMap decode_parallax(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "PARX");
  const int m = r.u16(), n = r.u16();
  if (m < 1 || n < 1) r.fail("empty EIA geometry");
  const std::size_t count = static_cast<std::size_t>(m) * (n - 1) + static_cast<std::size_t>(m - 1) * n;
  std::vector<int> seq;
  seq.reserve(count);
  const std::uint8_t mode = count > 0 ? r.u8() : 0;
  if (mode > 1) r.fail("unknown map mode " + std::to_string(mode));
  if (mode == 1) {
    const int v = r.u8();
    if (v > kMaxOffset) r.fail("offset out of range");
    r.expect_end();
    seq.assign(count, v);
  }
  try {
    const auto payload = r.rest();
    if (mode == 0 && count > 0) {
      AacDecoder dec(payload);
      int prev = 0;
      for (std::size_t t = 0; t < count; ++t) {
        const int v = prev + static_cast<int>(dec.get(kDiffAlphabet)) - kMaxOffset;
        if (v < 0 || v > kMaxOffset) r.fail("decoded offset out of range");
        seq.push_back(v);
        prev = v;
      }
    }
  } catch (const StreamError& e) {
    throw PayloadError("PARX", e.what());
  }
  ParallaxMap p(m, n);
  std::size_t pos = 0;
  take_serpentine(p.col_offsets, seq, pos, m, n - 1);
  take_serpentine(p.row_offsets, seq, pos, m - 1, n);
  const auto again = encode_parallax(p);
  if (!std::equal(again.begin(), again.end(), bytes.begin(), bytes.end())) {
    throw PayloadError("PARX", "non-canonical payload");
  }
  return p;
}

}  // namespace emr4d
