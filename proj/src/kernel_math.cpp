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

#include "emr4d/kernel_math.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "emr4d/error.hpp"
#include "emr4d/rng.hpp"

namespace emr4d {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kEk4Const = 3.0 / (32.0 * kPi * kPi);
const double kEk3Const = std::sqrt(2.0) / (4.0 * kPi * kPi);
// Support boundary: (1/8) q <= 1.
constexpr double kSupport = 8.0;

template <int N>
struct Factor {
  Eigen::Matrix<double, N, N> inv;
  double log_det;
};

template <int N>
Factor<N> factor(const Eigen::Matrix<double, N, N>& m, const char* what) {
  Eigen::LLT<Eigen::Matrix<double, N, N>> llt(m);
  if (llt.info() != Eigen::Success) throw SingularMatrix(std::string(what) + " is not positive definite");
  double log_det = 0;
  for (int i = 0; i < N; ++i) {
    const double d = llt.matrixLLT()(i, i);
    if (!(d > 0.0) || !std::isfinite(d)) throw SingularMatrix(std::string(what) + " is singular");
    log_det += 2.0 * std::log(d);
  }
  return {llt.solve(Eigen::Matrix<double, N, N>::Identity()), log_det};
}

template <int N>
Eigen::Matrix<double, N, N> regularize_impl(const Eigen::Matrix<double, N, N>& m) {
  const double eps = std::max(1e-9 * m.trace() / N, 1e-9);
  Eigen::Matrix<double, N, N> out = 0.5 * (m + m.transpose());
  out.diagonal().array() += eps;
  return out;
}

}  // namespace

const char* kernel_name(KernelKind k) { return k == KernelKind::Epanechnikov ? "epanechnikov" : "gaussian"; }

Mat4 regularized(const Mat4& m) { return regularize_impl<4>(m); }
Mat3 regularized(const Mat3& m) { return regularize_impl<3>(m); }

double ek4d_density(const Vec4& phi, const ExpertParams& p) {
  const auto f = factor<4>(p.sigma, "Sigma");
  const Vec4 d = phi - p.mu;
  const double q = d.dot(f.inv * d);
  if (q > kSupport) return 0.0;
  return kEk4Const * std::exp(-0.5 * f.log_det) * (1.0 - q / kSupport);
}

double ek3d_marginal(const Vec3& delta, const ExpertParams& p) {
  const auto f = factor<3>(p.r(), "R");
  const Vec3 d = delta - p.mu_pos();
  const double q = d.dot(f.inv * d);
  if (q > kSupport) return 0.0;
  return kEk3Const * std::exp(-0.5 * f.log_det) * std::pow(1.0 - q / kSupport, 1.5);
}

double ek_conditional_mean(const Vec3& delta, const ExpertParams& p) {
  const auto f = factor<3>(p.r(), "R");
  return p.mu(3) + p.sigma_w().dot(f.inv * (delta - p.mu_pos()));
}

double gaussian_density(const Vec4& phi, const ExpertParams& p) {
  const auto f = factor<4>(p.sigma, "Sigma");
  const Vec4 d = phi - p.mu;
  return std::exp(-2.0 * std::log(2.0 * kPi) - 0.5 * f.log_det - 0.5 * d.dot(f.inv * d));
}

double gaussian_marginal(const Vec3& delta, const ExpertParams& p) {
  const auto f = factor<3>(p.r(), "R");
  const Vec3 d = delta - p.mu_pos();
  return std::exp(-1.5 * std::log(2.0 * kPi) - 0.5 * f.log_det - 0.5 * d.dot(f.inv * d));
}

double gaussian_conditional_mean(const Vec3& delta, const ExpertParams& p) {
  return ek_conditional_mean(delta, p);
}

double position_mahalanobis(const Vec3& delta, const ExpertParams& p) {
  const auto f = factor<3>(p.r(), "R");
  const Vec3 d = delta - p.mu_pos();
  return d.dot(f.inv * d);
}

PreparedModel::PreparedModel(const MixtureModel& model, bool need_joint)
    : kind_(model.kind), has_joint_(need_joint) {
  experts_.reserve(model.experts.size());
  for (const auto& e : model.experts) {
    PreparedExpert pe;
    pe.alpha = std::max(e.alpha, 0.0);
    pe.log_alpha = pe.alpha > 0 ? std::log(pe.alpha) : -std::numeric_limits<double>::infinity();
    pe.mu = e.mu;
    pe.mu_pos = e.mu_pos();
    pe.mu_w = e.mu(3);
    const auto fr = factor<3>(regularized(Mat3(e.r())), "R");
    pe.r_inv = fr.inv;
    pe.slope = fr.inv * e.sigma_w();
    pe.ek3_norm = kEk3Const * std::exp(-0.5 * fr.log_det);
    pe.log_g3_norm = -1.5 * std::log(2.0 * kPi) - 0.5 * fr.log_det;
    if (need_joint) {
      const auto fs = factor<4>(regularized(e.sigma), "Sigma");
      pe.sigma_inv = fs.inv;
      pe.ek4_norm = kEk4Const * std::exp(-0.5 * fs.log_det);
      pe.log_g4_norm = -2.0 * std::log(2.0 * kPi) - 0.5 * fs.log_det;
    }
    experts_.push_back(pe);
  }
}

void PreparedModel::gate(const Vec3& delta, std::span<double> out) const {
  const std::size_t k = experts_.size();
  if (k == 1) {
    out[0] = 1.0;
    return;
  }
  if (kind_ == KernelKind::Epanechnikov) {
    double sum = 0;
    double best_q = std::numeric_limits<double>::infinity();
    std::size_t best = 0;
    for (std::size_t j = 0; j < k; ++j) {
      const auto& e = experts_[j];
      const Vec3 d = delta - e.mu_pos;
      const double q = d.dot(e.r_inv * d);
      if (q < best_q) {
        best_q = q;
        best = j;
      }
      double v = 0;
      if (q <= kSupport) {
        const double t = 1.0 - q / kSupport;
        v = e.alpha * e.ek3_norm * t * std::sqrt(t);
      }
      out[j] = v;
      sum += v;
    }
    if (sum > 0) {
      for (std::size_t j = 0; j < k; ++j) out[j] /= sum;
    } else {
      std::fill(out.begin(), out.begin() + k, 0.0);
      out[best] = 1.0;
    }
    return;
  }
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < k; ++j) {
    const auto& e = experts_[j];
    const Vec3 d = delta - e.mu_pos;
    out[j] = e.log_alpha + e.log_g3_norm - 0.5 * d.dot(e.r_inv * d);
    top = std::max(top, out[j]);
  }
  double sum = 0;
  for (std::size_t j = 0; j < k; ++j) {
    out[j] = std::exp(out[j] - top);
    sum += out[j];
  }
  for (std::size_t j = 0; j < k; ++j) out[j] /= sum;
}

double PreparedModel::regress(const Vec3& delta) const {
  const std::size_t k = experts_.size();
  double g_small[32];
  std::vector<double> g_big;
  std::span<double> g;
  if (k <= 32) {
    g = std::span<double>(g_small, k);
  } else {
    g_big.resize(k);
    g = g_big;
  }
  gate(delta, g);
  double m = 0;
  for (std::size_t j = 0; j < k; ++j) {
    if (g[j] == 0.0) continue;
    const auto& e = experts_[j];
    m += g[j] * (e.mu_w + e.slope.dot(delta - e.mu_pos));
  }
  return m;
}

void PreparedModel::posterior(const Vec4& phi, std::span<double> out) const {
  if (!has_joint_) throw InvalidArgument("posterior needs a model prepared with its joint covariance");
  const std::size_t k = experts_.size();
  if (kind_ == KernelKind::Epanechnikov) {
    double sum = 0;
    double best_q = std::numeric_limits<double>::infinity();
    std::size_t best = 0;
    for (std::size_t j = 0; j < k; ++j) {
      const auto& e = experts_[j];
      const Vec4 d = phi - e.mu;
      const double q = d.dot(e.sigma_inv * d);
      if (q < best_q) {
        best_q = q;
        best = j;
      }
      const double v = q <= kSupport ? e.alpha * e.ek4_norm * (1.0 - q / kSupport) : 0.0;
      out[j] = v;
      sum += v;
    }
    if (sum > 0) {
      for (std::size_t j = 0; j < k; ++j) out[j] /= sum;
    } else {
      std::fill(out.begin(), out.begin() + k, 0.0);
      out[best] = 1.0;
    }
    return;
  }
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < k; ++j) {
    const auto& e = experts_[j];
    const Vec4 d = phi - e.mu;
    out[j] = e.log_alpha + e.log_g4_norm - 0.5 * d.dot(e.sigma_inv * d);
    top = std::max(top, out[j]);
  }
  double sum = 0;
  for (std::size_t j = 0; j < k; ++j) {
    out[j] = std::exp(out[j] - top);
    sum += out[j];
  }
  for (std::size_t j = 0; j < k; ++j) out[j] /= sum;
}

std::vector<double> gate(const Vec3& delta, const MixtureModel& model) {
  PreparedModel pm(model, false);
  std::vector<double> g(model.size());
  pm.gate(delta, g);
  return g;
}

double regress(const Vec3& delta, const MixtureModel& model) {
  return PreparedModel(model, false).regress(delta);
}

namespace {

void check_axes(const AxisLengths& ax) {
  if (!(ax.a > 0 && ax.b > 0 && ax.c > 0 && ax.d > 0)) throw InvalidArgument("ellipsoid axes must be positive");
}

double ellipsoid_q(const Vec4& v, const AxisLengths& ax) {
  return v(0) * v(0) / (ax.a * ax.a) + v(1) * v(1) / (ax.b * ax.b) + v(2) * v(2) / (ax.c * ax.c) +
         v(3) * v(3) / (ax.d * ax.d);
}

Vec4 box_sample(Rng& rng, const AxisLengths& ax) {
  return {uniform(rng, -ax.a, ax.a), uniform(rng, -ax.b, ax.b), uniform(rng, -ax.c, ax.c), uniform(rng, -ax.d, ax.d)};
}

}  // namespace

MonteCarloEstimate appendix_a_oracle(const AxisLengths& ax, std::size_t samples, std::uint64_t seed) {
  check_axes(ax);
  if (samples < 2) throw InvalidArgument("need at least two samples");
  Rng rng(seed);
  const double box = 16.0 * ax.a * ax.b * ax.c * ax.d;
  double sum = 0, sum2 = 0;
  for (std::size_t i = 0; i < samples; ++i) {
    const double q = ellipsoid_q(box_sample(rng, ax), ax);
    const double g = q <= 1.0 ? 1.0 - q : 0.0;
    sum += g;
    sum2 += g * g;
  }
  const double n = static_cast<double>(samples);
  const double mean = sum / n;
  const double var = std::max(sum2 / n - mean * mean, 0.0) * n / (n - 1);
  return {box * mean, box * std::sqrt(var / n)};
}

MomentEstimate appendix_b_oracle(const AxisLengths& ax, std::size_t samples, std::uint64_t seed) {
  check_axes(ax);
  if (samples < 2) throw InvalidArgument("need at least two samples");
  Rng rng(seed);
  std::vector<Vec4> pts;
  pts.reserve(samples);
  while (pts.size() < samples) {
    const Vec4 v = box_sample(rng, ax);
    const double q = ellipsoid_q(v, ax);
    if (q <= 1.0 && uniform01(rng) < 1.0 - q) pts.push_back(v);
  }
  MomentEstimate est;
  for (const auto& p : pts) est.mean += p;
  est.mean /= static_cast<double>(pts.size());
  for (const auto& p : pts) {
    const Vec4 d = p - est.mean;
    est.cov += d * d.transpose();
  }
  est.cov /= static_cast<double>(pts.size() - 1);
  est.accepted = pts.size();
  return est;
}

}  // namespace emr4d
