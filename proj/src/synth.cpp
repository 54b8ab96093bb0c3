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

#include "emr4d/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "emr4d/error.hpp"
#include "emr4d/rng.hpp"

namespace emr4d {

namespace {

double hash01(std::uint64_t seed, std::int64_t i, std::int64_t j, std::uint64_t salt) {
  const std::uint64_t h =
      derive_seed(seed, {static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j), salt});
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double smooth(double t) { return t * t * (3 - 2 * t); }

// Lattice value noise with `octaves` octaves, base cell `period` px, in [0, 1].
double value_noise(std::uint64_t seed, double x, double y, double period, int octaves, std::uint64_t salt) {
  double v = 0, amp = 1, tot = 0, f = 1.0 / period;
  for (int o = 0; o < octaves; ++o) {
    const double X = x * f, Y = y * f;
    const auto i = static_cast<std::int64_t>(std::floor(X));
    const auto j = static_cast<std::int64_t>(std::floor(Y));
    const double tx = smooth(X - i), ty = smooth(Y - j);
    const std::uint64_t s = salt * 16 + o;
    const double a = hash01(seed, i, j, s), b = hash01(seed, i + 1, j, s);
    const double c = hash01(seed, i, j + 1, s), d = hash01(seed, i + 1, j + 1, s);
    v += amp * ((a * (1 - tx) + b * tx) * (1 - ty) + (c * (1 - tx) + d * tx) * ty);
    tot += amp;
    amp *= 0.5;
    f *= 2;
  }
  return v / tot;
}

// Jittered-grid Voronoi cell containing (x, y); returns the cell key.
std::pair<std::int64_t, std::int64_t> voronoi_cell(std::uint64_t seed, double x, double y, double size) {
  const auto gi = static_cast<std::int64_t>(std::floor(x / size));
  const auto gj = static_cast<std::int64_t>(std::floor(y / size));
  double best = 1e300;
  std::pair<std::int64_t, std::int64_t> key{gi, gj};
  for (std::int64_t di = -1; di <= 1; ++di) {
    for (std::int64_t dj = -1; dj <= 1; ++dj) {
      const std::int64_t ci = gi + di, cj = gj + dj;
      const double px = (ci + 0.15 + 0.7 * hash01(seed, ci, cj, 1)) * size;
      const double py = (cj + 0.15 + 0.7 * hash01(seed, ci, cj, 2)) * size;
      const double d = (x - px) * (x - px) + (y - py) * (y - py);
      if (d < best) {
        best = d;
        key = {ci, cj};
      }
    }
  }
  return key;
}

struct Texture {
  TextureKind kind;
  std::uint64_t seed;
  double detail = 0;  // amplitude of the fine noise layer

  std::array<double, 3> rgb(double x, double y) const {
    double l = 128, dr = 0, db = 0;
    switch (kind) {
      case TextureKind::Mosaic: {
        const auto [ci, cj] = voronoi_cell(seed, x, y, 18.0);
        l = 45 + 165 * hash01(seed, ci, cj, 3);
        dr = 50 * (hash01(seed, ci, cj, 4) - 0.5);
        db = 50 * (hash01(seed, ci, cj, 5) - 0.5);
        // A gentle slope inside each cell.
        const double gx = 1.6 * (hash01(seed, ci, cj, 6) - 0.5), gy = 1.6 * (hash01(seed, ci, cj, 7) - 0.5);
        l += gx * (x - ci * 18.0 - 9) + gy * (y - cj * 18.0 - 9);
        break;
      }
      case TextureKind::Noise:
        l = 40 + 175 * value_noise(seed, x, y, 24.0, 4, 8);
        dr = 60 * (value_noise(seed, x, y, 60.0, 2, 9) - 0.5);
        db = 60 * (value_noise(seed, x, y, 60.0, 2, 10) - 0.5);
        break;
      case TextureKind::Ramp:
        l = 50 + 0.9 * std::fmod(x + 0.6 * y, 170.0);
        dr = 20 * std::sin(0.02 * x);
        db = 20 * std::cos(0.02 * y);
        break;
      case TextureKind::Checker: {
        const bool odd = ((static_cast<std::int64_t>(std::floor(x / 8)) + static_cast<std::int64_t>(std::floor(y / 8))) & 1) != 0;
        l = odd ? 190 : 60;
        dr = odd ? 15 : -15;
        break;
      }
    }
    if (detail > 0) l += detail * (value_noise(seed, x, y, 3.0, 2, 11) - 0.5);
    const double r = l + dr, b = l + db;
    // Keep luma unchanged: 0.299 r + 0.587 g + 0.114 b = l.
    const double g = (l - 0.299 * r - 0.114 * b) / 0.587;
    return {std::clamp(r, 35.0, 225.0), std::clamp(g, 35.0, 225.0), std::clamp(b, 35.0, 225.0)};
  }

  double luma(double x, double y) const {
    const auto c = rgb(x, y);
    return 0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2];
  }
};

// Minimum over the two axes of the mean absolute neighbour difference.
double gradient_energy(const Texture& t, int w, int h) {
  double gx = 0, gy = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double v = t.luma(x, y);
      if (x + 1 < w) gx += std::abs(t.luma(x + 1, y) - v);
      if (y + 1 < h) gy += std::abs(t.luma(x, y + 1) - v);
    }
  }
  gx /= static_cast<double>(std::max(w - 1, 1)) * h;
  gy /= static_cast<double>(w) * std::max(h - 1, 1);
  return std::min(gx, gy);
}

}  // namespace

const char* texture_name(TextureKind t) {
  switch (t) {
    case TextureKind::Mosaic: return "mosaic";
    case TextureKind::Noise: return "noise";
    case TextureKind::Ramp: return "ramp";
    case TextureKind::Checker: return "checker";
  }
  return "?";
}

TextureKind parse_texture(const std::string& s) {
  for (auto t : {TextureKind::Mosaic, TextureKind::Noise, TextureKind::Ramp, TextureKind::Checker}) {
    if (s == texture_name(t)) return t;
  }
  throw InvalidArgument("unknown texture '" + s + "'");
}

ShadowModel SceneSpec::default_shadow() {
  ShadowModel m;
  for (auto& q : m.quadrant) {
    q.line1 = {0.64f, -60.0f};
    q.line2 = {-0.5f, 60.0f};
  }
  return m;
}

Scene generate(const SceneSpec& spec) {
  if (spec.rows < 1 || spec.cols < 1 || spec.ei_size < 8) throw InvalidArgument("invalid scene geometry");
  if (spec.parallax_x < 0 || spec.parallax_x > kMaxOffset || spec.parallax_y < 0 || spec.parallax_y > kMaxOffset) {
    throw InvalidArgument("parallax must lie in [0, 15]");
  }
  const int s = spec.ei_size;
  Texture tex{spec.texture, spec.seed, 0.0};
  // Sample a representative patch and add fine detail until the texture
  // carries enough gradient for the offset search.
  const int probe = std::min(2 * s, 160);
  for (int tries = 0; gradient_energy(tex, probe, probe) < kMinGradientEnergy; ++tries) {
    if (tries == 8) throw Error("texture has too little gradient energy");
    tex.detail = tex.detail == 0 ? 8.0 : 2.0 * tex.detail;
  }

  Scene sc;
  sc.spec = spec;
  sc.shadow = spec.shadows ? spec.shadow : ShadowModel::none();
  sc.parallax = ParallaxMap(spec.rows, spec.cols);
  std::fill(sc.parallax.col_offsets.begin(), sc.parallax.col_offsets.end(), spec.parallax_x);
  std::fill(sc.parallax.row_offsets.begin(), sc.parallax.row_offsets.end(), spec.parallax_y);

  sc.image = RgbImage(spec.cols * s, spec.rows * s);
  for (int r = 0; r < spec.rows; ++r) {
    for (int c = 0; c < spec.cols; ++c) {
      const EiShadow sh = ei_shadow(sc.shadow, r + 1, c + 1, spec.rows, spec.cols, s);
      for (int v = 0; v < s; ++v) {
        for (int u = 0; u < s; ++u) {
          std::array<double, 3> px;
          if (spec.shadows && sh.in_shadow(u, v)) {
            px = {8, 8, 8};
          } else {
            px = tex.rgb(u + static_cast<double>(spec.parallax_x) * c, v + static_cast<double>(spec.parallax_y) * r);
          }
          const std::size_t o = (static_cast<std::size_t>(r * s + v) * sc.image.width + (c * s + u)) * 3;
          for (int ch = 0; ch < 3; ++ch) sc.image.rgb[o + ch] = clamp_u8(px[ch]);
        }
      }
    }
  }
  return sc;
}

}  // namespace emr4d
