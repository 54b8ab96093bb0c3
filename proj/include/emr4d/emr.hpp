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

// Mixture fitting for one PVS block: k-means++ initialisation followed by
// EM-style updates, tracking the regression MSE after every update and
// keeping the parameter set with the smallest MSE.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "emr4d/kernel_math.hpp"
#include "emr4d/lf_core.hpp"

namespace emr4d {

/// Number of parameter sets evaluated per fit: the initialisation plus 13
/// updates.
inline constexpr int kFitEvaluations = 14;

struct FitResult {
  MixtureModel model;
  int iteration_chosen = 0;        // zero-based index into mse_trace
  std::vector<double> mse_trace;   // kFitEvaluations entries
  std::uint64_t seed = 0;
  int reseeded = 0;                // empty-expert re-seeds performed

  double mse() const { return mse_trace.at(iteration_chosen); }
};

MixtureModel kmeans_init(std::span<const Sample4D> samples, int k, KernelKind kind, std::uint64_t seed);

FitResult fit(std::span<const Sample4D> samples, int k, KernelKind kind, std::uint64_t seed);

/// Runs the update loop from a given starting model. `fit` is kmeans_init
/// followed by this.
FitResult fit_from(std::span<const Sample4D> samples, MixtureModel init, std::uint64_t seed);

/// One expert from the sample mean and the 1/(N-1) sample covariance.
ExpertParams single_kernel_closed_form(std::span<const Sample4D> samples);

/// Position mean and position covariance of the single-kernel fit, which
/// depend only on the block geometry. Only the 3x3 block of sigma and the
/// first three entries of mu are set.
ExpertParams single_kernel_geometry(int width, int height, int frames);

/// Unclipped regression value at every sample position.
std::vector<double> reconstruct(std::span<const Sample4D> samples, const PreparedModel& model);

double regression_mse(std::span<const Sample4D> samples, const PreparedModel& model);
double regression_sse(std::span<const Sample4D> samples, const PreparedModel& model);

}  // namespace emr4d
