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

// Image quality: per-channel MSE, the three-channel PSNR and SSIM averages,
// and the central rendered view.

#pragma once

#include <array>
#include <cstddef>
#include <string>

#include "emr4d/lf_core.hpp"

namespace emr4d {

double plane_mse(const Plane& a, const Plane& b);
/// Single-scale SSIM, 11x11 Gaussian window (sigma 1.5), K1 = 0.01,
/// K2 = 0.03, L = 255, averaged over all window positions inside the image.
double plane_ssim(const Plane& a, const Plane& b);

/// 10 log10(255^2 / mean of the channel MSEs); +infinity when all are 0.
double psnr_from_mse(const std::array<double, 3>& mse);
double psnr(const EiaGrid& a, const EiaGrid& b);
double ssim(const EiaGrid& a, const EiaGrid& b);

struct ChannelQuality {
  double mse = 0;
  double ssim = 1;
};

struct QualityReport {
  double psnr_db = 0;
  double ssim = 1;
  std::array<ChannelQuality, 3> channels;
  std::size_t bits = 0;
  double bpp = 0;  // bits / full-resolution pixel count
};

/// `bits` is the coded size; 0 leaves bpp at 0.
QualityReport compare(const EiaGrid& reference, const EiaGrid& decoded, std::size_t bits = 0);

/// One JSON object on a single line. An infinite PSNR is written as the
/// string "inf".
std::string to_json_line(const QualityReport& r);

/// Zero-based offset of the central 8x8 patch: floor((ei_size - 8) / 2).
inline int central_patch_offset(int ei_size) { return (ei_size - 8) / 2; }
/// Stitches the central 8x8 patch of every EI into an (8m) x (8n) grid.
EiaGrid render_central_view(const EiaGrid& eia);

}  // namespace emr4d
