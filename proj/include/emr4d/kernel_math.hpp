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

// Closed forms for the 4-D Epanechnikov kernel (EK) parameterised by its
// covariance, its 3-D position marginal and the affine conditional mean of
// the gray value, plus the Gaussian counterparts and the gated mixture
// regression built from them.
//
// Coordinates are phi = (x, y, z, w): column, row, frame, gray value.
// delta = (x, y, z) is the position part. For an expert with mean mu and
// covariance Sigma, R is the 3x3 position block of Sigma.

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

namespace emr4d {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

enum class KernelKind : std::uint8_t { Epanechnikov = 0, Gaussian = 1 };

const char* kernel_name(KernelKind k);

struct ExpertParams {
  double alpha = 1.0;
  Vec4 mu = Vec4::Zero();
  Mat4 sigma = Mat4::Identity();

  Vec3 mu_pos() const { return mu.head<3>(); }
  Mat3 r() const { return sigma.topLeftCorner<3, 3>(); }
  /// (Sigma_WX, Sigma_WY, Sigma_WZ)
  Vec3 sigma_w() const { return sigma.block<3, 1>(0, 3); }
};

struct MixtureModel {
  std::vector<ExpertParams> experts;
  KernelKind kind = KernelKind::Epanechnikov;

  std::size_t size() const { return experts.size(); }
};

struct AxisLengths {
  double a = 1, b = 1, c = 1, d = 1;
};

/// Sigma + eps*I with eps = max(1e-6 * trace/dim, 1e-6).
Mat4 regularized(const Mat4& m);
Mat3 regularized(const Mat3& m);

// The functions below evaluate the formulas exactly as written: the matrix
// must already be positive definite, otherwise SingularMatrix is thrown.

/// 3 / (32 pi^2 sqrt|Sigma|) * (1 - q/8) for q = (phi-mu)' Sigma^-1 (phi-mu) <= 8, else 0.
double ek4d_density(const Vec4& phi, const ExpertParams& p);
/// sqrt(2) / (4 pi^2 sqrt|R|) * (1 - q/8)^(3/2) for q <= 8 over the position block.
double ek3d_marginal(const Vec3& delta, const ExpertParams& p);
/// mu_W + Sigma_W' R^-1 (delta - mu_pos). Unbounded affine extension.
double ek_conditional_mean(const Vec3& delta, const ExpertParams& p);

double gaussian_density(const Vec4& phi, const ExpertParams& p);
double gaussian_marginal(const Vec3& delta, const ExpertParams& p);
double gaussian_conditional_mean(const Vec3& delta, const ExpertParams& p);

/// Position Mahalanobis distance (delta - mu_pos)' R^-1 (delta - mu_pos).
double position_mahalanobis(const Vec3& delta, const ExpertParams& p);

/// Expert parameters with every inverse and normaliser precomputed.
/// Construction regularises Sigma and R, so evaluation never fails.
struct PreparedExpert {
  double alpha = 1;
  double log_alpha = 0;
  Vec4 mu;
  Vec3 mu_pos;
  double mu_w = 0;
  Mat4 sigma_inv;
  Mat3 r_inv;
  Vec3 slope;              // R^-1 Sigma_W, the conditional-mean gradient
  double ek4_norm = 0;     // 3 / (32 pi^2 sqrt|Sigma|)
  double ek3_norm = 0;     // sqrt(2) / (4 pi^2 sqrt|R|)
  double log_g4_norm = 0;  // log of (2 pi)^-2 |Sigma|^-1/2
  double log_g3_norm = 0;  // log of (2 pi)^-3/2 |R|^-1/2
};

/// Mixture ready for fast evaluation. Holds no reference to its source.
class PreparedModel {
 public:
  PreparedModel() = default;
  explicit PreparedModel(const MixtureModel& model, bool need_joint = true);

  std::size_t size() const { return experts_.size(); }
  KernelKind kind() const { return kind_; }
  const PreparedExpert& expert(std::size_t j) const { return experts_[j]; }

  /// Gate weights at delta; sums to 1. For the EK, when every marginal is 0
  /// the expert with the smallest position Mahalanobis distance takes all.
  void gate(const Vec3& delta, std::span<double> out) const;
  /// Gated conditional mean, not clipped.
  double regress(const Vec3& delta) const;
  /// E-step responsibilities at phi; sums to 1. For the EK, a sample outside
  /// every support goes to the expert with the smallest 4-D Mahalanobis
  /// distance.
  void posterior(const Vec4& phi, std::span<double> out) const;

 private:
  std::vector<PreparedExpert> experts_;
  KernelKind kind_ = KernelKind::Epanechnikov;
  bool has_joint_ = false;
};

/// Gate vector of the mixture at delta (prepares the model on each call).
std::vector<double> gate(const Vec3& delta, const MixtureModel& model);
/// Gated regression value at delta (prepares the model on each call).
double regress(const Vec3& delta, const MixtureModel& model);

inline double clip_gray(double v) { return v < 0.0 ? 0.0 : (v > 255.0 ? 255.0 : v); }

struct MonteCarloEstimate {
  double value = 0;
  double std_error = 0;
};

/// Monte-Carlo integral of (1 - phi' L^2 phi) over the ellipsoid with the
/// given semi-axes, sampling uniformly in its bounding box.
MonteCarloEstimate appendix_a_oracle(const AxisLengths& ax, std::size_t samples, std::uint64_t seed);

struct MomentEstimate {
  Vec4 mean = Vec4::Zero();
  Mat4 cov = Mat4::Zero();
  std::size_t accepted = 0;
};

/// Draws `samples` points from the axis-aligned basic EK by rejection and
/// returns their sample mean and covariance.
MomentEstimate appendix_b_oracle(const AxisLengths& ax, std::size_t samples, std::uint64_t seed);

}  // namespace emr4d
