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

// Per-block model-count selection: fit every candidate expert count and keep
// the one minimising D + lambda * R.

#pragma once

#include <cstdint>
#include <vector>

#include "emr4d/emr.hpp"
#include "emr4d/lf_core.hpp"
#include "emr4d/param_codec.hpp"

namespace emr4d {

struct RdoConfig {
  double lambda = 1000.0;
  Channel channel = Channel::Y;
  KernelKind kind = KernelKind::Epanechnikov;
  int max_k = 16;

  /// Luma: EK with up to 16 experts. Chroma: Gaussian with up to 8.
  static RdoConfig for_channel(Channel ch, double lambda);
  /// Chroma uses half the luma multiplier.
  double effective_lambda() const { return channel == Channel::Y ? lambda : 0.5 * lambda; }
};

struct RdoResult {
  int chosen_k = 1;
  std::vector<double> j_values;    // index k - 1
  std::vector<int> bits;
  std::vector<double> distortion;
  FitResult fit;                   // for chosen_k, already projected to what the channel codes
};

/// Seed of one candidate fit, derived from the block position so that the
/// outcome does not depend on evaluation order.
std::uint64_t candidate_seed(std::uint64_t base, const BlockOrigin& o, Channel ch, int k);

/// Exhaustive sweep over k = 1..cfg.max_k; ties go to the smaller k.
/// `threads` > 1 evaluates candidates concurrently with identical results.
RdoResult select_model_count(const PvsBlock& block, const RdoConfig& cfg, std::uint64_t seed, int threads = 1);

}  // namespace emr4d
