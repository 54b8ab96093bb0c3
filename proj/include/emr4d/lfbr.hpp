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

// Decoder-side synthesis: key EIs regressed from decoded models, block-border
// smoothing, the post filter, and prediction of the non-key EIs from the
// key-EIA using the parallax offsets and the shadow line model.

#pragma once

#include <array>
#include <span>
#include <vector>

#include "emr4d/kernel_math.hpp"
#include "emr4d/lf_core.hpp"
#include "emr4d/preprocess.hpp"

namespace emr4d {

/// Regresses every block and writes the clipped values into `frame_count`
/// tiles of `tile_size` px. `blocks` gives the geometry (samples unused) and
/// is parallel to `models`.
std::vector<Plane> synthesize_frames(std::span<const MixtureModel> models, std::span<const PvsBlock> blocks,
                                     int frame_count, int tile_size, int threads = 1);

/// Linear ramp across every internal block border of a tile: the pixels at
/// border - 3 and border + 2 are kept and the four between are interpolated.
void deblock_tile(Plane& tile, int cb);
inline constexpr int kDeblockHalfWidth = 3;

/// Separable Gaussian with sigma = 0.05 * strength px inside each tile, edges
/// replicated. Strength 0 leaves the tile untouched.
void post_filter_tile(Plane& tile, double strength);
inline double post_filter_sigma(double strength) { return 0.05 * strength; }

struct PostFilterConfig {
  bool enabled = true;
  std::array<double, 3> strength{15.0, 20.0, 20.0};  // Y, U, V
};

/// Places serpentine-ordered full-size tiles of each channel into a key-EIA.
EiaGrid assemble_key_eia(const std::array<std::vector<Plane>, 3>& frames, const std::vector<int>& row_ids,
                         const std::vector<int>& col_ids, int ei_size);

/// Width of the edge band replaced before merging: columns for the column
/// pass, rows for the row pass.
inline constexpr int kDeshadeColumns = 6;
inline constexpr int kDeshadeRows = 4;
/// Shadow pixels are filled with the value this far inside the shadow edge.
inline constexpr double kDeshadeDepth = 3.0;

/// Shadow pixels replaced by the pixel kDeshadeDepth px past the shadow line
/// toward the EI centre.
Plane deshade_corners(const Plane& tile, const EiShadow& shadow);

/// Predicts the EIs strictly between two anchors along one axis. Tiles are
/// given in column orientation (content of later EIs moves left);
/// `offsets[t]` relates EI t and t + 1 of the run, so the run has
/// offsets.size() steps. `shadows` holds the shadow geometry of every EI of
/// the run, anchors first and last. Returns one tile per inner EI.
std::vector<Plane> predict_gap(const Plane& left, const Plane& right, std::span<const int> offsets,
                               std::span<const EiShadow> shadows, int band);

/// A 1-px ring side counts as a seam when it is darker than the line inside
/// it by more than this many gray levels on both anchors.
inline constexpr double kSeamContrast = 24.0;

/// Full EIA from the decoded key-EIA: column gaps inside key rows first, then
/// row gaps for every column. Key EIs are copied unchanged.
EiaGrid reconstruct_full_eia(const EiaGrid& key, const ParallaxMap& parallax, const ShadowModel& shadow, int threads = 1);

}  // namespace emr4d
