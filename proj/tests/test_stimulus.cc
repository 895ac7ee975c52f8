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

#include "doctest.h"
#include "tvis/dct.h"
#include "tvis/stimulus.h"

using namespace tvis;

namespace {

const SensitivityParams kParams;

}  // namespace

TEST_CASE("grating values follow the closed form") {
  const DisplayGeometry g;
  GratingSpec s;
  s.f_h = 2.0;
  s.f_v = 1.0;
  s.f_t = 10.0;
  s.contrast = 0.3;
  s.temporal_phase = 0.4;
  const PatchVolume p = generate_grating(s, g);
  CHECK(p.dims() == kCalibratedPatch);
  const double dpp = degrees_per_pixel(g);
  const double l0 = code_to_luminance(g, 0.5);
  for (auto [t, y, x] : {std::array<int, 3>{0, 35, 35}, {7, 30, 41}, {24, 35, 0},
                         {13, 3, 68}}) {
    const double xd = (x - 35) * dpp, yd = (y - 35) * dpp;
    const double r = std::hypot(xd, yd);
    const double w = r <= 1.0 ? 1.0 : std::exp(-0.5 * std::pow((r - 1.0) / 0.1, 2));
    const double expected =
        l0 * (1 + 0.3 * w * std::cos(2 * std::numbers::pi * 2.0 * xd) *
                      std::cos(2 * std::numbers::pi * 1.0 * yd) *
                      std::cos(2 * std::numbers::pi * 10.0 * t / 120.0 + 0.4));
    CHECK(p.volume.at(t, y, x) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("uniform flicker lands on the expected temporal index") {
  const DisplayGeometry g;
  GratingSpec s;
  s.f_t = 10.0;  // k = 10 * 2 * 24 / 120 = 4
  s.contrast = 0.2;
  s.window_diameter = 100.0;  // whole patch inside the window
  const SpectrumPatch sp =
      normalize_amplitudes(dct3_separable(generate_grating(s, g)));
  const double l0 = code_to_luminance(g, 0.5);
  CHECK(sp.dc_luminance() == doctest::Approx(l0));
  CHECK(sp.delta_l.at(4, 0, 0) == doctest::Approx(0.2 * l0));
  for (int t = 1; t < 25; ++t) {
    if (t != 4) CHECK(std::abs(sp.delta_l.at(t, 0, 0)) < 1e-9);
  }
}

TEST_CASE("Nyquist and validation errors") {
  const DisplayGeometry g;
  GratingSpec s;
  s.contrast = 0.1;
  s.f_t = 60.0;
  CHECK_NOTHROW(generate_grating(s, g));
  s.f_t = 60.5;
  CHECK_THROWS_AS(generate_grating(s, g), InputError);
  s.f_t = 10.0;
  s.f_h = 0.5 * pixels_per_degree(g) + 0.1;
  CHECK_THROWS_AS(generate_grating(s, g), InputError);

  GratingSpec bad;
  bad.contrast = 1.2;
  CHECK_THROWS_AS(bad.validate(), InputError);
  bad.contrast = 0.5;
  bad.background = 0.8;  // 0.8 * 1.5 > 1
  CHECK_THROWS_AS(bad.validate(), InputError);
  bad.background = 0.0;
  CHECK_THROWS_AS(bad.validate(), InputError);
  GratingSpec neg;
  neg.f_h = -1;
  CHECK_THROWS_AS(neg.validate(), InputError);
  GratingSpec tiny;
  tiny.n_frames = 1;
  CHECK_THROWS_AS(tiny.validate(), InputError);
}

TEST_CASE("grating JSON round trip") {
  GratingSpec s;
  s.f_h = 4.54;
  s.f_t = 30;
  s.contrast = 0.05;
  s.falloff_sigma = 0.2;
  s.size_px = 41;
  const GratingSpec r = GratingSpec::from_json(s.to_json());
  CHECK(r.to_json() == s.to_json());
  CHECK_THROWS_AS(GratingSpec::from_json({{"contrast", "high"}}), InputError);
  CHECK_THROWS_AS(GratingSpec::from_json({{"contrast", 2.0}}), InputError);
}

TEST_CASE("static version removes all temporal energy") {
  const DisplayGeometry g;
  GratingSpec s;
  s.f_h = 1.0;
  s.f_t = 5.0;
  s.contrast = 0.4;
  const PatchVolume p = generate_grating(s, g);
  CHECK(pooled_contrast(p, 0.0, kParams, g) > 1.0);
  const PatchVolume st = static_version(p);
  CHECK(pooled_contrast(st, 0.0, kParams, g) < 1e-9);
  for (int t = 1; t < 25; ++t) {
    CHECK(st.volume.at(t, 20, 30) == doctest::Approx(st.volume.at(0, 20, 30)));
  }
}

TEST_CASE("scale_to_jnd hits the target and keeps the static content") {
  const DisplayGeometry g;
  GratingSpec s;
  s.f_h = 2.0;
  s.f_v = 0.5;
  s.f_t = 10.0;
  s.contrast = 0.2;
  const PatchVolume p = generate_grating(s, g);
  for (double target : {0.0, 0.5, 1.0, 3.0}) {
    for (double e : {0.0, 20.0}) {
      const PatchVolume q = scale_to_jnd(p, target, e, kParams, g);
      CHECK(pooled_contrast(q, e, kParams, g) ==
            doctest::Approx(target).epsilon(1e-9));
      const PatchVolume a = static_version(p), b = static_version(q);
      for (size_t i = 0; i < a.volume.values.size(); i += 997) {
        CHECK(b.volume.values[i] == doctest::Approx(a.volume.values[i]));
      }
    }
  }
  CHECK_THROWS_AS(scale_to_jnd(p, -1.0, 0.0, kParams, g), InputError);
  CHECK_THROWS_AS(scale_to_jnd(static_version(p), 1.0, 0.0, kParams, g),
                  InputError);
}
