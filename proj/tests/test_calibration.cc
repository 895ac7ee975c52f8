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


#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "doctest.h"
#include "tvis/calibration.h"
#include "tvis/visibility.h"

using namespace tvis;

namespace {

const SensitivityParams kParams;
const DisplayGeometry kGeom;

std::filesystem::path temp_file(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "tvis_test_calibration";
  std::filesystem::create_directories(dir);
  return dir / name;
}

double uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Binomial counts from the Weibull form with a portable Bernoulli draw.
std::vector<DetectionRecord> simulate_detections(const SensitivityParams& p,
                                                 const std::vector<double>& c_m,
                                                 int trials, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<DetectionRecord> out;
  for (size_t i = 0; i < c_m.size(); ++i) {
    const double psi = psychometric(c_m[i], p);
    int correct = 0;
    for (int k = 0; k < trials; ++k) correct += uniform(rng) < psi;
    out.push_back({"s" + std::to_string(i), c_m[i], trials, correct});
  }
  return out;
}

}  // namespace

TEST_CASE("threshold CSV round trip and header check") {
  const std::vector<ThresholdRecord> recs{{0, 4.54, 10, 25, 0.031},
                                          {9.06, 0, 2.5, 40, 0.5}};
  const auto path = temp_file("thr.csv").string();
  write_threshold_csv(path, recs);
  CHECK(read_threshold_csv(path) == recs);
  CHECK(recs[1].saturated());
  CHECK_FALSE(recs[0].saturated());
  std::ofstream(path) << "a,b,c\n1,2,3\n";
  CHECK_THROWS_AS(read_threshold_csv(path), InputError);
  CHECK_THROWS_AS(read_threshold_csv(temp_file("missing.csv").string()),
                  InputError);
}

TEST_CASE("detection CSV validation") {
  const auto path = temp_file("det.csv").string();
  std::ofstream(path) << "id,c_jnd,trials,correct\na,0.5,20,15\nb,1.5,20,19\n";
  const auto d = read_detection_csv(path);
  REQUIRE(d.size() == 2);
  CHECK(d[1].id == "b");
  CHECK(d[1].correct == 19);
  std::ofstream(path) << "id,c_jnd,trials,correct\na,0.5,20,25\n";
  CHECK_THROWS_AS(read_detection_csv(path), InputError);
}

TEST_CASE("De Lange fit recovers an exact cubic") {
  const std::array<double, 4> a = kParams.a;
  std::vector<DeLangeSample> samples;
  for (double f : {0.5, 1.0, 2.5, 5.0, 10.0, 20.0, 30.0, 60.0}) {
    const double u = std::log1p(f);
    samples.push_back({f, std::expm1(s_delange(u, a))});
  }
  const DeLangeFit fit = fit_delange(samples, 3);
  REQUIRE(fit.a.size() == 4);
  for (int i = 0; i < 4; ++i) CHECK(fit.a[i] == doctest::Approx(a[i]).epsilon(1e-8));
  CHECK(fit.r2 == doctest::Approx(1.0));
  CHECK(fit.cubic()[2] == fit.a[2]);
  CHECK_THROWS_AS(fit_delange(samples, 2).cubic(), InputError);
  CHECK_THROWS_AS(fit_delange(std::span(samples).first(4), 3), InputError);
  std::vector<DeLangeSample> flat(6, DeLangeSample{5.0, 10.0});
  CHECK_THROWS_AS(fit_delange(flat, 3), InputError);
}

TEST_CASE("synthetic grid and nominal thresholds") {
  const auto recs = synthesize_thresholds(kParams, kGeom, ThresholdModel::kNominal);
  CHECK(recs.size() == 162);
  for (const auto& r : recs) {
    const double ref = threshold_contrast({r.f_t, r.f_h, r.f_v, r.e}, kParams);
    CHECK(r.threshold == doctest::Approx(std::min(0.5, ref)));
  }
  CHECK(shape_loss(recs, kParams, kGeom,
                   {.mode = ThresholdModel::kNominal}) < 1e-20);
}

TEST_CASE("pooled predictor matches the full grating pipeline") {
  const std::vector<ThresholdRecord> recs{{0, 0, 10, 10, 0.1},
                                          {4.54, 0, 5, 25, 0.1},
                                          {4.54, 4.54, 20, 40, 0.1}};
  const GratingSpec tmpl;
  const ThresholdPredictor pred(recs, ThresholdModel::kPooled, kGeom, tmpl,
                                kParams.r, kParams.l_min);
  const std::vector<double> th = pred.thresholds(kParams);
  for (size_t i = 0; i < recs.size(); ++i) {
    GratingSpec s = tmpl;
    s.f_h = recs[i].f_h;
    s.f_v = recs[i].f_v;
    s.f_t = recs[i].f_t;
    s.contrast = 0.1;
    const double c_m =
        patch_probability(generate_grating(s, kGeom), recs[i].e, kParams, kGeom)
            .c_m;
    // C_M is linear in contrast, so the threshold is where it reaches 1.
    CHECK(th[i] == doctest::Approx(0.1 / c_m).epsilon(1e-9));
  }
  CHECK_THROWS_AS(ThresholdPredictor(recs, ThresholdModel::kPooled, kGeom, tmpl,
                                     0.5, 50.0),
                  InputError);
}

TEST_CASE("shape fit recovers parameters from a perturbed start") {
  SensitivityParams truth;
  truth.b8 = 0.03;
  const auto recs = synthesize_thresholds(truth, kGeom, ThresholdModel::kNominal);
  SensitivityParams start = truth;
  start.b1 *= 1.1;
  start.b2 *= 0.8;
  start.b4 *= 1.3;
  start.b8 = 0.0;
  ShapeFitOptions opt;
  opt.mode = ThresholdModel::kNominal;
  opt.restarts = 2;
  const ShapeFit fit = fit_shape_params(recs, start, kGeom, opt);
  CHECK(fit.loss < 1e-10);
  CHECK(fit.r2 > 0.999999);
  REQUIRE(fit.adjusted_r2.has_value());
  CHECK(fit.params.b1 == doctest::Approx(truth.b1).epsilon(1e-3));
  CHECK(fit.params.b8 == doctest::Approx(truth.b8).epsilon(1e-2));
  // Non-fitted parameters are carried over.
  CHECK(fit.params.a == start.a);
  CHECK(fit.params.beta0 == start.beta0);
  for (double v : {fit.params.b1, fit.params.b2, fit.params.b3, fit.params.b4,
                   fit.params.b6, fit.params.b7, fit.params.b8}) {
    CHECK(v >= 0.0);
  }
  const auto j = fit.to_json();
  CHECK(j.contains("loss"));

  CHECK_THROWS_AS(fit_shape_params(std::span(recs).first(5), start, kGeom, opt),
                  InputError);
}

TEST_CASE("saturated records are excluded by default") {
  auto recs = synthesize_thresholds(kParams, kGeom, ThresholdModel::kNominal);
  const size_t saturated =
      std::count_if(recs.begin(), recs.end(), [](auto& r) { return r.saturated(); });
  CHECK(saturated > 0);
  ShapeFitOptions opt;
  opt.mode = ThresholdModel::kNominal;
  opt.restarts = 1;
  const ShapeFit fit = fit_shape_params(recs, kParams, kGeom, opt);
  CHECK(fit.n_records == static_cast<int>(recs.size() - saturated));
  opt.saturated = SaturatedPolicy::kInclude;
  CHECK(fit_shape_params(recs, kParams, kGeom, opt).n_records ==
        static_cast<int>(recs.size()));
}

TEST_CASE("fold assignment") {
  const auto f = fold_assignment(162, 5, 42);
  CHECK(f == fold_assignment(162, 5, 42));
  CHECK(f != fold_assignment(162, 5, 43));
  std::array<int, 5> count{};
  for (int i : f) {
    REQUIRE(i >= 0);
    REQUIRE(i < 5);
    ++count[i];
  }
  for (int c : count) CHECK((c == 32 || c == 33));
  CHECK_THROWS_AS(fold_assignment(3, 5, 1), InputError);
  CHECK_THROWS_AS(fold_assignment(10, 1, 1), InputError);
}

TEST_CASE("bounded draw is in range and roughly uniform") {
  std::mt19937_64 rng(9);
  std::array<int, 7> hist{};
  for (int i = 0; i < 70000; ++i) {
    const uint64_t v = bounded_draw(7, rng);
    REQUIRE(v < 7);
    ++hist[v];
  }
  for (int h : hist) CHECK(std::abs(h - 10000) < 400);
  CHECK_THROWS_AS(bounded_draw(0, rng), InputError);
}

TEST_CASE("cross-validation is order independent") {
  auto recs = synthesize_thresholds(kParams, kGeom, ThresholdModel::kNominal);
  ShapeFitOptions opt;
  opt.mode = ThresholdModel::kNominal;
  opt.restarts = 1;
  const CvReport a = cross_validate(recs, 3, 7, kParams, kGeom, opt, 1);
  std::mt19937_64 rng(1);
  std::shuffle(recs.begin(), recs.end(), rng);
  const CvReport b = cross_validate(recs, 3, 7, kParams, kGeom, opt, 3);
  REQUIRE(a.folds.size() == 3);
  for (size_t i = 0; i < 3; ++i) {
    CHECK(a.folds[i].n_test == b.folds[i].n_test);
    CHECK(a.folds[i].test_loss == doctest::Approx(b.folds[i].test_loss));
  }
  CHECK(a.mean.size() == CvReport::columns().size());
  CHECK(a.table().find("L_test") != std::string::npos);
  // Sample standard deviation of the test loss column.
  std::vector<double> col;
  for (const auto& f : a.folds) col.push_back(f.test_loss);
  const double m = std::accumulate(col.begin(), col.end(), 0.0) / 3;
  double ss = 0.0;
  for (double v : col) ss += (v - m) * (v - m);
  CHECK(a.stdev[1] == doctest::Approx(std::sqrt(ss / 2)));
}

TEST_CASE("psychometric fit recovers the slope parameters") {
  std::vector<double> levels;
  for (double c = 0.2; c <= 4.0; c += 0.2) levels.push_back(c);
  const auto recs = simulate_detections(kParams, levels, 400, 17);
  PsychometricOptions opt;
  opt.fit_lapse = false;
  opt.start.beta0 = 1.0;
  opt.start.beta1 = 1.0;
  const PsychometricFit fit = fit_psychometric(recs, opt);
  CHECK(std::abs(fit.beta0 / kParams.beta0 - 1) < 0.2);
  CHECK(std::abs(fit.beta1 / kParams.beta1 - 1) < 0.2);
  CHECK_FALSE(fit.r_estimated);
  CHECK(fit.p_l == 0.0);
}

TEST_CASE("psychometric fit estimates r from component magnitudes") {
  SensitivityParams truth;
  truth.r = 2.5;
  PsychometricOptions opt;
  opt.fit_lapse = false;
  std::vector<double> c_m;
  int i = 0;
  for (double c = 0.2; c <= 3.0; c += 0.2) {
    for (int n : {1, 2, 4}) {
      std::vector<double> comps(n, c);
      opt.components["s" + std::to_string(i++)] = comps;
      c_m.push_back(c * std::pow(n, 1.0 / truth.r));
    }
  }
  const auto recs = simulate_detections(truth, c_m, 400, 5);
  const PsychometricFit fit = fit_psychometric(recs, opt);
  CHECK(fit.r_estimated);
  CHECK(std::abs(fit.r / truth.r - 1) < 0.2);
}

TEST_CASE("psychometric fit rejects degenerate data") {
  std::vector<DetectionRecord> two{{"a", 1, 10, 7}, {"b", 2, 10, 9}};
  CHECK_THROWS_AS(fit_psychometric(two), InputError);
  std::vector<DetectionRecord> perfect{{"a", 1, 10, 10}, {"b", 2, 10, 10},
                                       {"c", 3, 10, 10}};
  CHECK_THROWS_AS(fit_psychometric(perfect), InputError);
  std::vector<DetectionRecord> chance{{"a", 1, 10, 5}, {"b", 2, 10, 4},
                                      {"c", 3, 10, 5}};
  CHECK_THROWS_AS(fit_psychometric(chance), InputError);
}
