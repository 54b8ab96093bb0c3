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

#include "emr4d/quality.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "emr4d/error.hpp"
#include "json.hpp"

namespace emr4d {

namespace {

void check_same(const Plane& a, const Plane& b) {
  if (a.width != b.width || a.height != b.height) {
    throw InvalidArgument("image dimensions differ: " + std::to_string(a.width) + "x" + std::to_string(a.height) +
                          " vs " + std::to_string(b.width) + "x" + std::to_string(b.height));
  }
}

void check_same(const EiaGrid& a, const EiaGrid& b) {
  for (Channel c : kChannels) check_same(a.plane(c), b.plane(c));
}

}  // namespace

double plane_mse(const Plane& a, const Plane& b) {
  check_same(a, b);
  if (a.px.empty()) return 0;
  double s = 0;
  for (std::size_t i = 0; i < a.px.size(); ++i) {
    const double d = static_cast<double>(a.px[i]) - b.px[i];
    s += d * d;
  }
  return s / static_cast<double>(a.px.size());
}

double plane_ssim(const Plane& a, const Plane& b) {
  check_same(a, b);
  const int w = a.width, h = a.height;
  if (w == 0 || h == 0) return 1.0;
  int win = 11;
  while (win > 1 && (win > w || win > h)) win -= 2;
  const int r = win / 2;
  std::vector<double> k(win);
  double ks = 0;
  for (int i = 0; i < win; ++i) ks += k[i] = std::exp(-0.5 * (i - r) * (i - r) / (1.5 * 1.5));
  for (auto& v : k) v /= ks;

  const double c1 = (0.01 * 255) * (0.01 * 255), c2 = (0.03 * 255) * (0.03 * 255);
  // Separable filtering of the five moment images over valid positions.
  const int ow = w - win + 1, oh = h - win + 1;
  auto filt = [&](auto f) {
    std::vector<double> tmp(static_cast<std::size_t>(ow) * h), out(static_cast<std::size_t>(ow) * oh);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < ow; ++x) {
        double s = 0;
        for (int i = 0; i < win; ++i) s += k[i] * f(x + i, y);
        tmp[static_cast<std::size_t>(y) * ow + x] = s;
      }
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x) {
        double s = 0;
        for (int i = 0; i < win; ++i) s += k[i] * tmp[static_cast<std::size_t>(y + i) * ow + x];
        out[static_cast<std::size_t>(y) * ow + x] = s;
      }
    return out;
  };
  auto pa = [&](int x, int y) { return static_cast<double>(a.at(x, y)); };
  auto pb = [&](int x, int y) { return static_cast<double>(b.at(x, y)); };
  const auto ma = filt(pa), mb = filt(pb);
  const auto saa = filt([&](int x, int y) { return pa(x, y) * pa(x, y); });
  const auto sbb = filt([&](int x, int y) { return pb(x, y) * pb(x, y); });
  const auto sab = filt([&](int x, int y) { return pa(x, y) * pb(x, y); });
  double total = 0;
  for (std::size_t i = 0; i < ma.size(); ++i) {
    const double va = saa[i] - ma[i] * ma[i], vb = sbb[i] - mb[i] * mb[i], cab = sab[i] - ma[i] * mb[i];
    total += ((2 * ma[i] * mb[i] + c1) * (2 * cab + c2)) / ((ma[i] * ma[i] + mb[i] * mb[i] + c1) * (va + vb + c2));
  }
  return total / static_cast<double>(ma.size());
}

double psnr_from_mse(const std::array<double, 3>& mse) {
  const double m = (mse[0] + mse[1] + mse[2]) / 3.0;
  if (m == 0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / m);
}

double psnr(const EiaGrid& a, const EiaGrid& b) {
  check_same(a, b);
  std::array<double, 3> m{};
  for (Channel c : kChannels) m[static_cast<int>(c)] = plane_mse(a.plane(c), b.plane(c));
  return psnr_from_mse(m);
}

double ssim(const EiaGrid& a, const EiaGrid& b) {
  check_same(a, b);
  double s = 0;
  for (Channel c : kChannels) s += plane_ssim(a.plane(c), b.plane(c));
  return s / 3.0;
}

QualityReport compare(const EiaGrid& reference, const EiaGrid& decoded, std::size_t bits) {
  check_same(reference, decoded);
  QualityReport r;
  std::array<double, 3> m{};
  double s = 0;
  for (Channel c : kChannels) {
    auto& q = r.channels[static_cast<int>(c)];
    q.mse = plane_mse(reference.plane(c), decoded.plane(c));
    q.ssim = plane_ssim(reference.plane(c), decoded.plane(c));
    m[static_cast<int>(c)] = q.mse;
    s += q.ssim;
  }
  r.psnr_db = psnr_from_mse(m);
  r.ssim = s / 3.0;
  r.bits = bits;
  const double pixels = static_cast<double>(reference.plane(Channel::Y).px.size());
  r.bpp = pixels > 0 ? static_cast<double>(bits) / pixels : 0.0;
  return r;
}

std::string to_json_line(const QualityReport& r) {
  nlohmann::ordered_json j;
  if (std::isinf(r.psnr_db)) {
    j["psnr_db"] = "inf";
  } else {
    j["psnr_db"] = r.psnr_db;
  }
  j["ssim"] = r.ssim;
  for (Channel c : kChannels) {
    const auto& q = r.channels[static_cast<int>(c)];
    j["channels"][channel_name(c)] = {{"mse", q.mse}, {"ssim", q.ssim}};
  }
  j["bits"] = r.bits;
  j["bpp"] = r.bpp;
  return j.dump();
}

EiaGrid render_central_view(const EiaGrid& eia) {
  if (eia.ei_size < 8) throw InvalidArgument("EI size must be at least 8");
  const int off = central_patch_offset(eia.ei_size);
  EiaGrid v(eia.ei_rows, eia.ei_cols, 8);
  v.row_ids = eia.row_ids;
  v.col_ids = eia.col_ids;
  for (Channel c : kChannels) {
    const Plane& src = eia.plane(c);
    Plane& dst = v.plane(c);
    for (int r = 0; r < eia.ei_rows; ++r)
      for (int q = 0; q < eia.ei_cols; ++q)
        dst.paste(src.crop(q * eia.ei_size + off, r * eia.ei_size + off, 8, 8), q * 8, r * 8);
  }
  return v;
}

}  // namespace emr4d
