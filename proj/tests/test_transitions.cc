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
#include <random>

#include "doctest.h"
#include "tvis/transitions.h"

using namespace tvis;

namespace {

const SensitivityParams kParams;
const DisplayGeometry kGeom;

void make_pair(int w, int h, Image& s, Image& t) {
  s = Image(w, h);
  t = Image(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      s.at(x, y) = static_cast<float>(0.5 + 0.25 * std::sin(x * 0.05) * std::cos(y * 0.031));
      t.at(x, y) = static_cast<float>(
          0.45 + 0.3 * std::cos(x * 0.021 + y * 0.043) * std::sin(y * 0.017 + 1));
    }
}

}  // namespace

TEST_CASE("blend") {
  Image a(2, 1, 0.2f), b(2, 1, 0.6f);
  CHECK(blend(a, b, 0.0).at(1, 0) == doctest::Approx(0.2));
  CHECK(blend(a, b, 0.25).at(0, 0) == doctest::Approx(0.3));
  CHECK(blend(a, b, 1.0).at(0, 0) == doctest::Approx(0.6));
  CHECK_THROWS_AS(blend(a, b, 1.5), InputError);
  CHECK_THROWS_AS(blend(a, Image(3, 1), 0.5), InputError);
}

TEST_CASE("closed-form evaluator matches the literal pipeline") {
  Image s, t;
  make_pair(142, 80, s, t);
  const TransitionModel model(s, t, kParams, kGeom);
  CHECK(model.sub_windows() == 2);
  for (auto [a0, da, e] : {std::array<double, 3>{0.0, 0.05, 0.0},
                           {0.3, 0.02, 10.0},
                           {0.6, 0.2, 30.0}}) {
    const double literal = window_probability(s, t, a0, da, e, kParams, kGeom);
    CHECK(model.probability(a0, da, e) == doctest::Approx(literal).epsilon(1e-6));
  }
  CHECK(model.probability(0.4, 0.0, 5.0) == 0.0);
  Image small(40, 40);
  CHECK_THROWS_AS(TransitionModel(small, small, kParams, kGeom), InputError);
}

TEST_CASE("probability grows with the step and falls with eccentricity") {
  Image s, t;
  make_pair(71, 71, s, t);
  const TransitionModel model(s, t, kParams, kGeom);
  double prev = 0.0;
  for (double d = 0.001; d < 0.5; d *= 1.5) {
    const double p = model.probability(0.2, d, 10.0);
    CHECK(p >= prev);
    prev = p;
  }
  CHECK(model.probability(0.2, 0.05, 0.0) >= model.probability(0.2, 0.05, 30.0));
}

TEST_CASE("solve_step hits the target probability") {
  Image s, t;
  make_pair(142, 142, s, t);
  const TransitionModel model(s, t, kParams, kGeom);
  for (double pd : {0.1, 0.5, 0.9}) {
    const StepResult r = solve_step(model, 0.1, pd, 10.0);
    if (!r.finishes && !r.minimal) {
      CHECK(r.probability == doctest::Approx(pd).epsilon(1e-4));
      CHECK(model.probability(0.1, r.delta_alpha, 10.0) <= pd + 1e-4);
    }
  }
  const StepResult last = solve_step(model, 0.995, 0.9, 30.0);
  CHECK(last.finishes);
  CHECK(last.delta_alpha == doctest::Approx(0.005));
  CHECK_THROWS_AS(solve_step(model, 0.1, 1.0, 0.0), InputError);
  CHECK_THROWS_AS(solve_step(model, 1.0, 0.5, 0.0), InputError);
}

TEST_CASE("schedules are monotone in eccentricity and target") {
  Image s, t;
  make_pair(142, 142, s, t);
  const TransitionModel model(s, t, kParams, kGeom);
  const std::vector<double> eccs{30, 0, 10, 20, 10};
  std::vector<TransitionSchedule> by_pd;
  for (double pd : {0.1, 0.5, 0.9}) {
    const TransitionSchedule sc = build_schedule(model, pd, eccs, kGeom, 2);
    CHECK(sc.eccentricities == std::vector<double>{0, 10, 20, 30});
    for (size_t i = 0; i < sc.alphas.size(); ++i) {
      const auto& a = sc.alphas[i];
      CHECK(a.front() == 0.0);
      CHECK(a.back() == 1.0);
      for (size_t j = 1; j < a.size(); ++j) CHECK(a[j] > a[j - 1]);
      CHECK(sc.flags[i].size() + 1 == a.size());
      if (i > 0) CHECK(sc.windows(i) <= sc.windows(i - 1));
    }
    by_pd.push_back(sc);
  }
  for (size_t i = 0; i < 4; ++i) {
    CHECK(by_pd[0].windows(i) >= by_pd[1].windows(i));
    CHECK(by_pd[1].windows(i) >= by_pd[2].windows(i));
  }
  const TransitionSchedule& sc = by_pd[1];
  const TransitionSchedule back = TransitionSchedule::from_json(sc.to_json());
  CHECK(back.alphas == sc.alphas);
  CHECK(back.flags == sc.flags);

  nlohmann::json bad = sc.to_json();
  bad["sequences"][0]["alpha"][1] = 2.0;
  CHECK_THROWS_AS(TransitionSchedule::from_json(bad), InputError);
  nlohmann::json swapped = sc.to_json();
  std::swap(swapped["sequences"][0], swapped["sequences"][1]);
  CHECK_THROWS_AS(TransitionSchedule::from_json(swapped), InputError);
}

TEST_CASE("adaptive interpolation") {
  TransitionSchedule sc;
  sc.p_d = 0.5;
  sc.fps = 120;
  sc.eccentricities = {0, 20};
  sc.alphas = {{0, 0.25, 0.5, 0.75, 1.0}, {0, 0.5, 1.0}};
  sc.flags = {{0, 0, 0, 1}, {0, 1}};
  CHECK(adaptive_alpha(sc, 0, 0.5) == doctest::Approx(0.5));
  CHECK(adaptive_alpha(sc, 0, 0.125) == doctest::Approx(0.125));
  CHECK(adaptive_alpha(sc, -5, 0.3) == doctest::Approx(adaptive_alpha(sc, 0, 0.3)));
  CHECK(adaptive_alpha(sc, 90, 0.3) == doctest::Approx(adaptive_alpha(sc, 20, 0.3)));
  CHECK(adaptive_windows(sc, 0) == 4);
  CHECK(adaptive_windows(sc, 10) == doctest::Approx(3));
  CHECK(adaptive_windows(sc, 20) == 2);
  CHECK(adaptive_alpha(sc, 10, 1.0) == doctest::Approx(1.0));
  CHECK(adaptive_alpha(sc, 10, 0.0) == 0.0);
}

TEST_CASE("adaptive playback never reverses and takes the scheduled time") {
  TransitionSchedule sc;
  sc.p_d = 0.5;
  sc.fps = 120;
  sc.eccentricities = {0, 10, 30};
  sc.alphas = {{0, 0.1, 0.2, 0.35, 0.5, 0.7, 1.0}, {0, 0.3, 0.6, 1.0}, {0, 0.6, 1.0}};
  sc.flags = {{0, 0, 0, 0, 0, 1}, {0, 0, 1}, {0, 1}};
  // Fixed gaze: 2 windows of 25 frames.
  AdaptiveTransition fixed(sc);
  int frames = 0;
  while (!fixed.done() && frames < 1000) {
    fixed.step(30.0);
    ++frames;
  }
  CHECK(std::abs(frames - 50) <= 1);

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> ecc(0.0, 40.0);
  AdaptiveTransition wander(sc);
  double prev = 0.0;
  int n = 0;
  while (!wander.done() && n < 10000) {
    const double a = wander.step(ecc(rng));
    CHECK(a >= prev);
    prev = a;
    ++n;
  }
  CHECK(wander.done());
  CHECK(n <= 150 + 1);
  CHECK(n >= 50 - 1);
}

TEST_CASE("rendered transition starts at the source and ends at the target") {
  Image s, t;
  make_pair(71, 71, s, t);
  TransitionSchedule sc;
  sc.p_d = 0.5;
  sc.fps = 120;
  sc.eccentricities = {0};
  sc.alphas = {{0, 0.5, 1.0}};
  sc.flags = {{0, 1}};
  const auto frames = render_transition(
      s, t, sc, [](int) { return GazePoint{0, 0}; }, {100, 100}, kGeom);
  CHECK(std::abs(static_cast<int>(frames.size()) - 51) <= 1);
  CHECK(frames.front().pixels == s.pixels);
  CHECK(frames.back().pixels == blend(s, t, 1.0).pixels);
  const auto capped = render_transition(
      s, t, sc, [](int) { return GazePoint{0, 0}; }, {100, 100}, kGeom, 10);
  CHECK(capped.size() == 10);
}
