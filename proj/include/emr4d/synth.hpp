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

// Synthetic light fields: a procedural base texture seen through an m x n
// lenslet grid with constant per-axis parallax and corner shadows drawn from
// a known line model, returned together with that ground truth.

#pragma once

#include <cstdint>
#include <string>

#include "emr4d/lf_core.hpp"
#include "emr4d/preprocess.hpp"

namespace emr4d {

enum class TextureKind { Mosaic, Noise, Ramp, Checker };

const char* texture_name(TextureKind t);
TextureKind parse_texture(const std::string& s);

struct SceneSpec {
  int rows = 8;
  int cols = 8;
  int ei_size = 75;
  TextureKind texture = TextureKind::Mosaic;
  int parallax_x = 5;  // px per EI step along columns
  int parallax_y = 5;  // px per EI step along rows
  bool shadows = true;
  ShadowModel shadow = default_shadow();
  std::uint64_t seed = 1;

  /// Slopes 0.64 and -0.5 with intercepts -60 and +60 in every quadrant.
  static ShadowModel default_shadow();
};

struct Scene {
  SceneSpec spec;
  RgbImage image;
  ParallaxMap parallax;
  ShadowModel shadow;  // ShadowModel::none() when shadows are off
};

/// Mean absolute luma difference between horizontal and between vertical
/// neighbours of the base texture must both exceed this.
inline constexpr double kMinGradientEnergy = 2.0;

Scene generate(const SceneSpec& spec);

}  // namespace emr4d
