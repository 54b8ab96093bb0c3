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

#include <set>

#include "doctest.h"
#include "emr4d/error.hpp"
#include "emr4d/preprocess.hpp"
#include "emr4d/rng.hpp"
#include "emr4d/synth.hpp"

using namespace emr4d;

namespace {

EiaGrid scene(int rows, int cols, int px, int py, bool shadows, std::uint64_t seed = 1) {
  SceneSpec s;
  s.rows = rows;
  s.cols = cols;
  s.parallax_x = px;
  s.parallax_y = py;
  s.shadows = shadows;
  s.seed = seed;
  return rgb_to_yuv(generate(s).image, rows, cols, s.ei_size);
}

}  // namespace

TEST_CASE("shadow line arithmetic") {
  const ShadowLine l{-0.35f, 18.0f};
  CHECK(l.intercept(11) == doctest::Approx(14.15).epsilon(1e-6));
}

TEST_CASE("shadow-free scene gives a zero-extent model") {
  const auto rep = fit_shadow_model(scene(8, 8, 5, 5, false));
  CHECK(rep.zero_extent);
  CHECK(rep.model.zero_extent());
  CHECK(ShadowModel::none().zero_extent());
}

TEST_CASE("quadrants and slopes") {
  std::set<int> seen;
  for (int i = 1; i <= 6; ++i)
    for (int j = 1; j <= 6; ++j) seen.insert(shadow_quadrant(i, j, 6, 6));
  CHECK(seen.size() == 4);
  for (int q : seen) CHECK(std::abs(quadrant_slope(q)) == 1);
  CHECK(shadow_quadrant(1, 1, 6, 6) != shadow_quadrant(6, 6, 6, 6));
  CHECK(border_distance(1, 1, 6, 6) == border_distance(6, 6, 6, 6));
}

TEST_CASE("block matching") {
  const EiaGrid g = scene(1, 2, 5, 0, false, 4);
  const Plane a = g.ei(Channel::Y, 0, 0);
  CHECK(match_offset(a, a) == 0);
  CHECK(match_offset(a, g.ei(Channel::Y, 0, 1)) == 5);
  CHECK_THROWS_AS(match_offset(Plane(20, 20), Plane(20, 20)), InvalidArgument);
}

TEST_CASE("median correction removes an isolated outlier") {
  ParallaxMap m(5, 5, 4);
  m.col(3, 2) = 13;
  median_correct(m);
  CHECK(m.col(3, 2) == 4);
  CHECK(m.max_offset() == 4);
}

TEST_CASE("interval bound") {
  CHECK(max_interval(ParallaxMap(3, 3, 5), 75) == 15);
  CHECK(max_interval(ParallaxMap(3, 3, 15), 75) == 5);
  CHECK(max_interval(ParallaxMap(3, 3, 0), 75) == 75);
}

TEST_CASE("side information round trip") {
  Rng rng(2);
  ParallaxMap p(7, 9);
  for (auto& v : p.col_offsets) v = static_cast<int>(uniform_index(rng, 16));
  for (auto& v : p.row_offsets) v = static_cast<int>(uniform_index(rng, 16));
  CHECK(decode_parallax(encode_parallax(p)) == p);

  const ParallaxMap zero(20, 20, 0);
  CHECK(encode_parallax(zero).size() <= 8);
  ParallaxMap grad(20, 20);
  for (int i = 1; i <= 20; ++i)
    for (int j = 1; j < 20; ++j) grad.col(i, j) = 3;
  for (int i = 1; i < 20; ++i)
    for (int j = 1; j <= 20; ++j) grad.row(i, j) = 7;
  CHECK(encode_parallax(grad).size() * 8 < (grad.col_offsets.size() + grad.row_offsets.size()) * 4);

  ShadowModel s = SceneSpec::default_shadow();
  s.quadrant[2].line1.b = -41.25f;
  CHECK(decode_shadow(encode_shadow(s)) == s);
  auto bytes = encode_shadow(s);
  bytes.pop_back();
  try {
    decode_shadow(bytes);
    FAIL("no error");
  } catch (const PayloadError& e) {
    CHECK(e.section() == "SHAD");
  }
}

TEST_CASE("parallax closed loop") {
  for (auto [px, py] : {std::pair{0, 3}, std::pair{5, 5}, std::pair{12, 1}}) {
    const EiaGrid g = scene(6, 6, px, py, true, 20 + px);
    const ParallaxMap m = detect_parallax(g);
    CHECK(m.col_offsets == std::vector<int>(m.col_offsets.size(), px));
    CHECK(m.row_offsets == std::vector<int>(m.row_offsets.size(), py));
  }
}

TEST_CASE("shadow masks follow the lines") {
  const ShadowModel s = SceneSpec::default_shadow();
  const EiShadow e = ei_shadow(s, 1, 1, 8, 8, 75);
  const auto mask = shadow_mask(e, 75);
  std::size_t count = 0;
  for (int v = 0; v < 75; ++v)
    for (int u = 0; u < 75; ++u) {
      CHECK(bool(mask[v * 75 + u]) == e.in_shadow(u, v));
      count += mask[v * 75 + u] ? 1 : 0;
    }
  CHECK(count > 0);
  CHECK(count < 75 * 75 / 2);
  const EiShadow t = e.transpose();
  CHECK(t.in_shadow(10, 3) == e.in_shadow(3, 10));
}
