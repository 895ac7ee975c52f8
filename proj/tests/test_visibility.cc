// Copyright 2026 The tvis Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "tvis/visibility.h"

using namespace tvis;

namespace {

const SensitivityParams kParams;

// Same pixel pitch and distance as the default display, smaller raster.
DisplayGeometry small_display(int w, int h) {
  DisplayGeometry g;
  const double pitch = g.width_mm / g.width_px;
  g.width_px = w;
  g.height_px = h;
  g.width_mm = pitch * w;
  g.height_mm = pitch * h;
  return g;
}

PatchVolume cosine_patch(PatchDims d, double mean, double amp, int kt, int kv,
                         int kh) {
  PatchVolume p{Volume(d)};
  for (int t = 0; t < d.t; ++t)
    for (int y = 0; y < d.v; ++y)
      for (int x = 0; x < d.h; ++x)
        p.volume.at(t, y, x) =
            mean + amp * std::cos(std::numbers::pi * kt * t / (d.t - 1)) *
                       std::cos(std::numbers::pi * kv * y / (d.v - 1)) *
                       std::cos(std::numbers::pi * kh * x / (d.h - 1));
  return p;
}

}  // namespace

TEST_CASE("Minkowski pooling closed forms") {
  Volume v(PatchDims{3, 2, 2});
  v.at(0, 0, 0) = 100.0;  // k_t = 0 never contributes
  v.at(0, 1, 1) = -50.0;
  v.at(1, 0, 1) = 3.0;
  v.at(2, 1, 0) = -4.0;
  CHECK(minkowski_pool(v, 2.0) == doctest::Approx(5.0));
  CHECK(minkowski_pool(v, 1.0) == doctest::Approx(7.0));
  CHECK(minkowski_pool(v, 64.0) == doctest::Approx(4.0).epsilon(0.02));
  CHECK(minkowski_pool(Volume(PatchDims{3, 2, 2}), 2.0) == 0.0);
  CHECK_THROWS_AS(minkowski_pool(v, 0.5), InputError);
}

TEST_CASE("result from pooled contrast") {
  const PatchResult zero = result_from_pooled(0.0, kParams);
  CHECK(zero.psi == 0.5);
  CHECK(zero.p_norm == 0.0);
  const PatchResult half = result_from_pooled(1.40463, kParams);
  CHECK(half.p_norm == doctest::Approx(0.5).epsilon(1e-4));
}

TEST_CASE("single temporal component has a closed form") {
  const DisplayGeometry g;
  const FrequencyAxes axes = component_frequencies(kCalibratedPatch, g);
  for (double mean : {30.0, 80.0}) {
    const int kt = 2, kv = 3, kh = 5;
    const double amp = 0.4;
    const PatchVolume p = cosine_patch(kCalibratedPatch, mean, amp, kt, kv, kh);
    const double sens =
        linear_sensitivity({axes.t[kt], axes.h[kh], axes.v[kv], 12.0}, kParams);
    const double expected = sens * amp / std::max(mean, kParams.l_min);
    const PatchResult r = patch_probability(p, 12.0, kParams, g);
    CHECK(r.c_m == doctest::Approx(expected).epsilon(1e-9));
    CHECK(r.psi == doctest::Approx(psychometric(expected, kParams)));
  }
}

TEST_CASE("static and constant patches are invisible") {
  const DisplayGeometry g;
  const PatchVolume flat{Volume(kCalibratedPatch, 90.0)};
  const PatchResult r = patch_probability(flat, 0.0, kParams, g);
  CHECK(r.c_m < 1e-12);
  CHECK(r.p_norm < 1e-12);
  const PatchVolume still = cosine_patch(kCalibratedPatch, 80, 40, 0, 7, 9);
  CHECK(patch_probability(still, 0.0, kParams, g).c_m < 1e-9);
}

TEST_CASE("fused analyzer matches the reference pipeline") {
  const DisplayGeometry g;
  const PatchDims d{9, 11, 13};
  const FrequencyAxes axes = component_frequencies(d, g);
  PatchAnalyzer analyzer(d, axes, kParams);
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(20.0, 150.0);
  for (int trial = 0; trial < 5; ++trial) {
    PatchVolume p{Volume(d)};
    for (double& x : p.volume.values) x = u(rng);
    const double ecc = 8.0 * trial;
    const PatchResult ref = patch_probability(p, ecc, kParams, g, true);
    const PatchResult got = analyzer.analyze(p.volume.values, ecc);
    CHECK(got.c_m == doctest::Approx(ref.c_m).epsilon(1e-10));
    CHECK(got.p_norm == doctest::Approx(ref.p_norm).epsilon(1e-10));
  }
  CHECK_THROWS_AS(analyzer.analyze(std::vector<double>(5), 0.0), InputError);
}

TEST_CASE("window size is checked") {
  const DisplayGeometry g;
  const PatchVolume p{Volume(PatchDims{9, 11, 13}, 60.0)};
  CHECK_THROWS_AS(patch_probability(p, 0.0, kParams, g), InputError);
  CHECK_NOTHROW(patch_probability(p, 0.0, kParams, g, true));
}

TEST_CASE("pooled contrast is linear in amplitude and falls with eccentricity") {
  const DisplayGeometry g;
  const PatchVolume a = cosine_patch(kCalibratedPatch, 80, 1.0, 4, 2, 2);
  const PatchVolume b = cosine_patch(kCalibratedPatch, 80, 2.0, 4, 2, 2);
  const double ca = patch_probability(a, 5.0, kParams, g).c_m;
  CHECK(patch_probability(b, 5.0, kParams, g).c_m == doctest::Approx(2 * ca));
  double prev = 1e300;
  for (double e : {0.0, 5.0, 10.0, 20.0, 30.0, 40.0}) {
    const double c = patch_probability(a, e, kParams, g).c_m;
    CHECK(c <= prev);
    prev = c;
  }
}

TEST_CASE("video analysis layout and worker determinism") {
  const DisplayGeometry g = small_display(230, 150);
  const int frames = 55;
  GeneratedFrames src(g.width_px, g.height_px, frames,
                      [&](int i, std::span<float> out) {
                        for (int y = 0; y < g.height_px; ++y)
                          for (int x = 0; x < g.width_px; ++x)
                            out[static_cast<size_t>(y) * g.width_px + x] =
                                static_cast<float>(
                                    60 + 20 * std::sin(0.7 * i + 0.05 * x) *
                                             std::cos(0.03 * y));
                      });
  std::vector<int> asked;
  const GazeTrack track = [&](int f) {
    asked.push_back(f);
    return GazePoint{10.0 * f, 75.0};
  };
  AnalyzeOptions one;
  const VisibilityMap m1 = analyze_video(src, track, g, kParams, one);
  CHECK(m1.n_t == 2);
  CHECK(m1.n_x == 3);
  CHECK(m1.n_y == 2);
  CHECK(m1.cells.size() == 12);
  CHECK(asked == std::vector<int>{12, 37});
  CHECK(m1.coverage() == doctest::Approx(50.0 * 213 * 142 / (55.0 * 230 * 150)));
  const auto& c = m1.at(1, 2, 1);
  CHECK(c.t_idx == 1);
  CHECK(c.x_idx == 2);
  CHECK(c.y_idx == 1);
  CHECK(c.ecc_deg == doctest::Approx(eccentricity_deg(g, {370, 75}, {177.5, 106.5})));

  AnalyzeOptions four;
  four.workers = 4;
  const VisibilityMap m4 = analyze_video(src, track, g, kParams, four);
  REQUIRE(m4.cells.size() == m1.cells.size());
  for (size_t i = 0; i < m1.cells.size(); ++i) {
    CHECK(m4.cells[i].c_m == m1.cells[i].c_m);
    CHECK(m4.cells[i].p_norm == m1.cells[i].p_norm);
  }

  AnalyzeOptions bad;
  bad.workers = 0;
  CHECK_THROWS_AS(analyze_video(src, GazePoint{}, g, kParams, bad), InputError);
  CHECK_THROWS_AS(analyze_video(src, GazePoint{}, small_display(240, 150), kParams),
                  InputError);
  GeneratedFrames few(g.width_px, g.height_px, 10, [](int, std::span<float>) {});
  CHECK_THROWS_AS(analyze_video(few, GazePoint{}, g, kParams), InputError);
}

TEST_CASE("parallel_for visits every index once and propagates errors") {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), 8, [&](int, size_t i) { hits[i]++; });
  for (int h : hits) CHECK(h == 1);
  CHECK_THROWS(parallel_for(10, 3, [](int, size_t i) {
    if (i == 7) throw InputError("boom");
  }));
}
