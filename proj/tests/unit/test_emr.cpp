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

#include <cmath>

#include "doctest.h"
#include "emr4d/emr.hpp"

using namespace emr4d;

namespace {

std::vector<Sample4D> grid(int w, int h, int f, double (*fn)(double, double, double)) {
  std::vector<Sample4D> s;
  for (int z = 1; z <= f; ++z)
    for (int y = 1; y <= h; ++y)
      for (int x = 1; x <= w; ++x) s.push_back({double(x), double(y), double(z), fn(x, y, z)});
  return s;
}

double texture(double x, double y, double z) { return 128 + 50 * std::sin(0.3 * x + 0.2 * z) * std::cos(0.25 * y); }

}  // namespace

TEST_CASE("fit returns the argmin of its trace") {
  const auto s = grid(19, 19, 4, texture);
  for (int k : {1, 3, 6}) {
    const auto r = fit(s, k, KernelKind::Epanechnikov, 17);
    REQUIRE(r.mse_trace.size() == kFitEvaluations);
    CHECK(r.mse() == *std::min_element(r.mse_trace.begin(), r.mse_trace.end()));
    CHECK(r.mse() <= r.mse_trace[0]);
    CHECK(r.model.size() <= static_cast<std::size_t>(k));
  }
}

TEST_CASE("fixed seeds replay") {
  const auto s = grid(19, 19, 4, texture);
  const auto a = kmeans_init(s, 5, KernelKind::Gaussian, 3);
  const auto b = kmeans_init(s, 5, KernelKind::Gaussian, 3);
  REQUIRE(a.size() == b.size());
  for (std::size_t j = 0; j < a.size(); ++j) {
    CHECK(a.experts[j].mu == b.experts[j].mu);
    CHECK(a.experts[j].sigma == b.experts[j].sigma);
  }
  CHECK(fit(s, 4, KernelKind::Epanechnikov, 8).mse_trace == fit(s, 4, KernelKind::Epanechnikov, 8).mse_trace);
}

TEST_CASE("two points make two clusters") {
  std::vector<Sample4D> s = {{1, 1, 1, 10}, {5, 5, 1, 200}};
  const auto m = kmeans_init(s, 2, KernelKind::Epanechnikov, 1);
  REQUIRE(m.size() == 2);
  CHECK(m.experts[0].alpha == doctest::Approx(0.5));
  CHECK(m.experts[1].alpha == doctest::Approx(0.5));
  CHECK(m.experts[0].mu != m.experts[1].mu);
}

TEST_CASE("identical samples at k=1") {
  std::vector<Sample4D> s(10, Sample4D{3, 4, 2, 77});
  const auto e = single_kernel_closed_form(s);
  CHECK(e.mu == Vec4(3, 4, 2, 77));
  CHECK(e.sigma.norm() < 1e-9);
}

TEST_CASE("k=1 is exact on constants and ramps") {
  const auto c = grid(19, 19, 4, [](double, double, double) { return 90.0; });
  CHECK(fit(c, 1, KernelKind::Epanechnikov, 1).mse() < 1e-12);
  const auto r = grid(19, 19, 4, [](double x, double y, double) { return x + y; });
  const auto f = fit(r, 1, KernelKind::Epanechnikov, 1);
  const auto rec = reconstruct(r, PreparedModel(f.model, false));
  double worst = 0;
  for (std::size_t i = 0; i < r.size(); ++i) worst = std::max(worst, std::abs(rec[i] - r[i].w));
  CHECK(worst < 0.5);
  const auto r2 = grid(19, 19, 4, [](double x, double, double) { return 2 * x; });
  const auto e = single_kernel_closed_form(r2);
  MixtureModel m;
  m.experts = {e};
  CHECK(regress(Vec3(7.5, 3, 2), m) == doctest::Approx(15).epsilon(1e-9));
}

TEST_CASE("block geometry statistics") {
  const auto g = single_kernel_geometry(19, 19, 4);
  CHECK(g.mu.head<3>().isApprox(Vec3(10, 10, 2.5)));
  const auto a = single_kernel_closed_form(grid(19, 19, 4, texture));
  const auto b = single_kernel_closed_form(grid(19, 19, 4, [](double x, double, double) { return x * x; }));
  CHECK(a.r().isApprox(b.r(), 1e-12));
  CHECK(a.r().isApprox(g.r(), 1e-12));
  const auto c = single_kernel_closed_form(grid(19, 19, 4, [](double, double, double) { return 5.0; }));
  CHECK(c.sigma_w().norm() < 1e-12);
}

TEST_CASE("many experts on a 37x37x4 sequence") {
  const auto s = grid(37, 37, 4, texture);
  const auto r = fit(s, 32, KernelKind::Epanechnikov, 21);
  CHECK(std::isfinite(r.mse()));
  CHECK(r.mse() <= r.mse_trace[0]);
  CHECK(regression_mse(s, PreparedModel(r.model, false)) == doctest::Approx(r.mse()).epsilon(1e-9));
}
