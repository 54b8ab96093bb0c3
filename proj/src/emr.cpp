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

#include "emr4d/emr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "emr4d/error.hpp"
#include "emr4d/rng.hpp"

namespace emr4d {
namespace {

constexpr int kKmeansMaxIter = 25;
constexpr double kEmptyExpert = 1e-8;
constexpr double kAlphaFloor = 1e-6;

Vec4 as_vec(const Sample4D& s) { return {s.x, s.y, s.z, s.w}; }
Vec3 as_pos(const Sample4D& s) { return {s.x, s.y, s.z}; }

double sq_dist(const Sample4D& s, const Vec4& c) { return (as_vec(s) - c).squaredNorm(); }

void normalize_alpha(MixtureModel& m) {
  double sum = 0;
  for (auto& e : m.experts) {
    e.alpha = std::max(e.alpha, kAlphaFloor);
    sum += e.alpha;
  }
  for (auto& e : m.experts) e.alpha /= sum;
}

}  // namespace

MixtureModel kmeans_init(std::span<const Sample4D> samples, int k, KernelKind kind, std::uint64_t seed) {
  const std::size_t n = samples.size();
  if (k < 1) throw InvalidArgument("model count must be >= 1");
  if (n < static_cast<std::size_t>(k))
    throw InvalidArgument("cannot fit " + std::to_string(k) + " experts to " + std::to_string(n) + " samples");
  Rng rng(seed);

  // k-means++ seeding.
  std::vector<Vec4> centers;
  centers.reserve(k);
  centers.push_back(as_vec(samples[uniform_index(rng, n)]));
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = sq_dist(samples[i], centers[0]);
  while (static_cast<int>(centers.size()) < k) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    std::size_t pick = 0;
    if (total > 0) {
      const double r = uniform01(rng) * total;
      double acc = 0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc > r && d2[i] > 0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = uniform_index(rng, n);
    }
    centers.push_back(as_vec(samples[pick]));
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], sq_dist(samples[i], centers.back()));
  }

  // Lloyd iterations until the assignment stops changing.
  std::vector<int> assign(n, -1);
  for (int it = 0; it < kKmeansMaxIter; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int j = 0; j < k; ++j) {
        const double d = sq_dist(samples[i], centers[j]);
        if (d < best_d) {
          best_d = d;
          best = j;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    std::vector<Vec4> sum(k, Vec4::Zero());
    std::vector<std::size_t> count(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sum[assign[i]] += as_vec(samples[i]);
      ++count[assign[i]];
    }
    for (int j = 0; j < k; ++j) {
      if (count[j] > 0) {
        centers[j] = sum[j] / static_cast<double>(count[j]);
        continue;
      }
      // Empty cluster: move it onto the sample farthest from its centre.
      std::size_t far = 0;
      double far_d = -1;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = sq_dist(samples[i], centers[assign[i]]);
        if (count[assign[i]] > 1 && d > far_d) {
          far_d = d;
          far = i;
        }
      }
      --count[assign[far]];
      assign[far] = j;
      count[j] = 1;
      centers[j] = as_vec(samples[far]);
      changed = true;
    }
    if (!changed) break;
  }

  MixtureModel model;
  model.kind = kind;
  model.experts.resize(k);
  std::vector<std::size_t> count(k, 0);
  std::vector<Vec4> mean(k, Vec4::Zero());
  for (std::size_t i = 0; i < n; ++i) {
    mean[assign[i]] += as_vec(samples[i]);
    ++count[assign[i]];
  }
  std::vector<Mat4> cov(k, Mat4::Zero());
  for (int j = 0; j < k; ++j) mean[j] /= static_cast<double>(std::max<std::size_t>(count[j], 1));
  for (std::size_t i = 0; i < n; ++i) {
    const Vec4 d = as_vec(samples[i]) - mean[assign[i]];
    cov[assign[i]] += d * d.transpose();
  }
  for (int j = 0; j < k; ++j) {
    auto& e = model.experts[j];
    e.alpha = static_cast<double>(count[j]) / static_cast<double>(n);
    e.mu = mean[j];
    e.sigma = cov[j] / static_cast<double>(std::max<std::size_t>(count[j], 1));
  }
  normalize_alpha(model);
  return model;
}

std::vector<double> reconstruct(std::span<const Sample4D> samples, const PreparedModel& model) {
  std::vector<double> out(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) out[i] = model.regress(as_pos(samples[i]));
  return out;
}

double regression_sse(std::span<const Sample4D> samples, const PreparedModel& model) {
  double sse = 0;
  for (const auto& s : samples) {
    const double e = model.regress(as_pos(s)) - s.w;
    sse += e * e;
  }
  return sse;
}

double regression_mse(std::span<const Sample4D> samples, const PreparedModel& model) {
  if (samples.empty()) return 0.0;
  return regression_sse(samples, model) / static_cast<double>(samples.size());
}

ExpertParams single_kernel_closed_form(std::span<const Sample4D> samples) {
  const std::size_t n = samples.size();
  if (n < 2) throw InvalidArgument("single-kernel fit needs at least two samples");
  ExpertParams e;
  e.alpha = 1.0;
  e.mu = Vec4::Zero();
  for (const auto& s : samples) e.mu += as_vec(s);
  e.mu /= static_cast<double>(n);
  e.sigma = Mat4::Zero();
  for (const auto& s : samples) {
    const Vec4 d = as_vec(s) - e.mu;
    e.sigma += d * d.transpose();
  }
  e.sigma /= static_cast<double>(n - 1);
  return e;
}

ExpertParams single_kernel_geometry(int width, int height, int frames) {
  const double n = static_cast<double>(width) * height * frames;
  if (n < 2) throw InvalidArgument("single-kernel geometry needs at least two samples");
  // Sum of squared deviations of 1..L around its mean is L(L^2-1)/12; each
  // axis value repeats N/L times. The grid is symmetric, so R is diagonal.
  auto axis_var = [n](int len) {
    const double l = len;
    return (n / l) * l * (l * l - 1.0) / 12.0 / (n - 1.0);
  };
  ExpertParams e;
  e.alpha = 1.0;
  e.mu = Vec4((width + 1) / 2.0, (height + 1) / 2.0, (frames + 1) / 2.0, 0.0);
  e.sigma = Mat4::Zero();
  e.sigma(0, 0) = axis_var(width);
  e.sigma(1, 1) = axis_var(height);
  e.sigma(2, 2) = axis_var(frames);
  return e;
}

FitResult fit_from(std::span<const Sample4D> samples, MixtureModel model, std::uint64_t seed) {
  const std::size_t n = samples.size();
  const std::size_t k = model.size();
  if (k == 0) throw InvalidArgument("empty starting model");
  FitResult result;
  result.seed = seed;
  result.mse_trace.reserve(kFitEvaluations);

  std::vector<double> q(n * k);
  std::vector<double> residual(n);

  PreparedModel prepared(model, true);
  auto evaluate = [&](const PreparedModel& pm) {
    double sse = 0;
    for (std::size_t i = 0; i < n; ++i) {
      residual[i] = pm.regress(as_pos(samples[i])) - samples[i].w;
      sse += residual[i] * residual[i];
    }
    return sse / static_cast<double>(n);
  };

  result.mse_trace.push_back(evaluate(prepared));
  result.model = model;
  result.iteration_chosen = 0;

  for (int t = 1; t < kFitEvaluations; ++t) {
    // E-step.
    for (std::size_t i = 0; i < n; ++i)
      prepared.posterior(as_vec(samples[i]), std::span<double>(&q[i * k], k));

    // M-step.
    MixtureModel next = model;
    std::vector<std::size_t> empty;
    for (std::size_t j = 0; j < k; ++j) {
      double nj = 0;
      Vec4 mu = Vec4::Zero();
      for (std::size_t i = 0; i < n; ++i) {
        const double w = q[i * k + j];
        nj += w;
        mu += w * as_vec(samples[i]);
      }
      if (nj < kEmptyExpert) {
        empty.push_back(j);
        continue;
      }
      mu /= nj;
      Mat4 sigma = Mat4::Zero();
      for (std::size_t i = 0; i < n; ++i) {
        const double w = q[i * k + j];
        if (w == 0.0) continue;
        const Vec4 d = as_vec(samples[i]) - mu;
        sigma.noalias() += w * (d * d.transpose());
      }
      sigma /= nj;
      next.experts[j].mu = mu;
      next.experts[j].sigma = 0.5 * (sigma + sigma.transpose());
      next.experts[j].alpha = nj / static_cast<double>(n);
    }
    if (!empty.empty()) {
      // Re-seed starved experts on the worst-reconstructed samples of the
      // previous parameter set; they keep their old covariance.
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return std::abs(residual[a]) > std::abs(residual[b]); });
      const double share = 1.0 / static_cast<double>(k);
      double kept = 0;
      for (std::size_t j = 0; j < k; ++j)
        if (std::find(empty.begin(), empty.end(), j) == empty.end()) kept += next.experts[j].alpha;
      const double scale = kept > 0 ? (1.0 - share * empty.size()) / kept : 0.0;
      for (std::size_t j = 0; j < k; ++j)
        if (std::find(empty.begin(), empty.end(), j) == empty.end()) next.experts[j].alpha *= scale;
      for (std::size_t e = 0; e < empty.size(); ++e) {
        auto& ex = next.experts[empty[e]];
        ex.mu = as_vec(samples[order[e % n]]);
        ex.alpha = share;
      }
      result.reseeded += static_cast<int>(empty.size());
    }
    normalize_alpha(next);
    model = std::move(next);
    prepared = PreparedModel(model, true);

    const double mse = evaluate(prepared);
    result.mse_trace.push_back(mse);
    if (mse < result.mse_trace[result.iteration_chosen]) {
      result.iteration_chosen = t;
      result.model = model;
    }
  }
  return result;
}

FitResult fit(std::span<const Sample4D> samples, int k, KernelKind kind, std::uint64_t seed) {
  if (k < 1) throw InvalidArgument("model count must be >= 1");
  if (samples.size() < static_cast<std::size_t>(k))
    throw InvalidArgument("cannot fit " + std::to_string(k) + " experts to " + std::to_string(samples.size()) +
                          " samples");
  if (k == 1 && samples.size() >= 2) {
    // With one expert every posterior is 1, so each update reproduces the
    // sample moments; the normalisation of Sigma does not change the
    // regression. Use the closed form the codec regenerates.
    MixtureModel m;
    m.kind = kind;
    m.experts.push_back(single_kernel_closed_form(samples));
    FitResult r;
    r.seed = seed;
    r.model = m;
    const double mse = regression_mse(samples, PreparedModel(m, false));
    r.mse_trace.assign(kFitEvaluations, mse);
    return r;
  }
  return fit_from(samples, kmeans_init(samples, k, kind, seed), seed);
}

}  // namespace emr4d
