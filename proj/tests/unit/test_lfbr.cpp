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
#include "emr4d/lfbr.hpp"
#include "emr4d/rng.hpp"
#include "emr4d/synth.hpp"

using namespace emr4d;

TEST_CASE("constant models synthesise constant frames") {
  const auto blocks = block_layout(3, 38, 19, 4);
  std::vector<MixtureModel> models(blocks.size());
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    ExpertParams e = single_kernel_geometry(blocks[b].width, blocks[b].height, blocks[b].frames);
    e.mu(3) = 40.0 + 10 * b;
    models[b].experts = {e};
  }
  const auto frames = synthesize_frames(models, blocks, 3, 38);
  REQUIRE(frames.size() == 3);
  CHECK(frames[0].at(0, 0) == 40);
  CHECK(frames[2].at(37, 37) == 70);
  models.pop_back();
  CHECK_THROWS(synthesize_frames(models, blocks, 3, 38));
}

TEST_CASE("deblocking ramp") {
  Plane t(38, 38);
  for (int y = 0; y < 38; ++y)
    for (int x = 0; x < 38; ++x) t.at(x, y) = x < 19 ? 100 : 200;
  deblock_tile(t, 19);
  const std::vector<int> want = {100, 100, 120, 140, 160, 180, 200, 200};
  for (int x = 15; x <= 22; ++x) CHECK(t.at(x, 5) == want[x - 15]);
  Plane again = t;
  deblock_tile(again, 19);
  for (std::size_t i = 0; i < t.px.size(); ++i) CHECK(std::abs(t.px[i] - again.px[i]) <= 1);
  Plane flat(38, 38, 77);
  deblock_tile(flat, 19);
  CHECK(flat == Plane(38, 38, 77));
}

TEST_CASE("post filter") {
  Rng rng(8);
  Plane noisy(38, 38);
  for (auto& v : noisy.px) v = static_cast<std::uint8_t>(128 + (uniform01(rng) < 0.1 ? 60 : 0));
  Plane same = noisy;
  post_filter_tile(same, 0);
  CHECK(same == noisy);
  const auto var = [](const Plane& p) {
    double m = 0, s = 0;
    for (auto v : p.px) m += v;
    m /= p.px.size();
    for (auto v : p.px) s += (v - m) * (v - m);
    return s / p.px.size();
  };
  Plane f = noisy;
  post_filter_tile(f, 20);
  CHECK(var(f) < var(noisy));
  Plane g = noisy;
  post_filter_tile(g, 20);
  CHECK(f == g);
}

TEST_CASE("gap prediction count") {
  const Plane a(75, 75, 50), b(75, 75, 50);
  const std::vector<int> offsets(5, 4);
  const std::vector<EiShadow> sh(6);
  const auto tiles = predict_gap(a, b, offsets, sh, 0);
  CHECK(tiles.size() == 4);
  for (const auto& t : tiles) CHECK(t == Plane(75, 75, 50));
  CHECK_THROWS(predict_gap(a, b, std::vector<int>(5, 16), sh, 0));
}

namespace {

Scene make_scene(int px, int py, bool shadows) {
  SceneSpec s;
  s.rows = s.cols = 6;
  s.parallax_x = px;
  s.parallax_y = py;
  s.shadows = shadows;
  s.seed = 31;
  return generate(s);
}

}  // namespace

TEST_CASE("interval 1 returns the key grid") {
  const Scene sc = make_scene(4, 4, true);
  const EiaGrid g = rgb_to_yuv(sc.image, 6, 6, 75);
  const EiaGrid key = extract_key_eia(g, 1);
  const EiaGrid full = reconstruct_full_eia(key, sc.parallax, sc.shadow);
  CHECK(full.planes == g.planes);
}

TEST_CASE("translated content is recovered between anchors") {
  const Scene sc = make_scene(4, 3, false);
  const EiaGrid g = rgb_to_yuv(sc.image, 6, 6, 75);
  const EiaGrid full = reconstruct_full_eia(extract_key_eia(g, 5), sc.parallax, sc.shadow);
  for (int j : {1, 2, 3, 4}) {
    const Plane want = g.ei(Channel::Y, 0, j), got = full.ei(Channel::Y, 0, j);
    int worst = 0;
    for (int v = 10; v < 65; ++v)
      for (int u = 10; u < 65; ++u) worst = std::max(worst, std::abs(want.at(u, v) - got.at(u, v)));
    CHECK(worst <= 1);
  }
  // key EIs are copied verbatim
  CHECK(full.ei(Channel::Y, 5, 5) == g.ei(Channel::Y, 5, 5));
}
