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

#include "tvis/stimulus.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "tvis/visibility.h"

namespace tvis {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_nyquist(double f, double limit, const char* axis) {
  // A tiny slack keeps f exactly at the limit (e.g. 60 Hz at 120 fps) valid.
  if (f > limit * (1.0 + 1e-12)) {
    throw InputError(std::string("generate_grating: ") + axis + " frequency " +
                     std::to_string(f) + " exceeds the Nyquist limit " +
                     std::to_string(limit));
  }
}

}  // namespace

void GratingSpec::validate() const {
  if (!(f_h >= 0.0) || !(f_v >= 0.0) || !(f_t >= 0.0)) {
    throw InputError("grating: frequencies must be >= 0");
  }
  if (!(background > 0.0 && background <= 1.0)) {
    throw InputError("grating: background must be in (0, 1]");
  }
  // Luminance stays within [0, peak] only while background (1 + c) <= 1.
  if (!(contrast >= 0.0 && contrast <= 1.0 &&
        background * (1.0 + contrast) <= 1.0 + 1e-12)) {
    throw InputError("grating: contrast " + std::to_string(contrast) +
                     " is not displayable around background " +
                     std::to_string(background));
  }
  if (!(window_diameter > 0.0) || !(falloff_sigma >= 0.0)) {
    throw InputError("grating: window diameter must be > 0, sigma >= 0");
  }
  if (n_frames < 2 || size_px < 2) {
    throw InputError("grating: need at least 2 frames and 2 pixels");
  }
}

nlohmann::json GratingSpec::to_json() const {
  return {{"f_h_cpd", f_h},
          {"f_v_cpd", f_v},
          {"f_t_hz", f_t},
          {"contrast", contrast},
          {"background", background},
          {"window_diameter_deg", window_diameter},
          {"falloff_sigma_deg", falloff_sigma},
          {"temporal_phase_rad", temporal_phase},
          {"n_frames", n_frames},
          {"size_px", size_px}};
}

GratingSpec GratingSpec::from_json(const nlohmann::json& j) {
  GratingSpec s;
  try {
    s.f_h = j.value("f_h_cpd", s.f_h);
    s.f_v = j.value("f_v_cpd", s.f_v);
    s.f_t = j.value("f_t_hz", s.f_t);
    s.contrast = j.value("contrast", s.contrast);
    s.background = j.value("background", s.background);
    s.window_diameter = j.value("window_diameter_deg", s.window_diameter);
    s.falloff_sigma = j.value("falloff_sigma_deg", s.falloff_sigma);
    s.temporal_phase = j.value("temporal_phase_rad", s.temporal_phase);
    s.n_frames = j.value("n_frames", s.n_frames);
    s.size_px = j.value("size_px", s.size_px);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("grating: ") + e.what());
  }
  s.validate();
  return s;
}

PatchVolume generate_grating(const GratingSpec& spec,
                             const DisplayGeometry& geom) {
  spec.validate();
  geom.validate();
  const double dpp = degrees_per_pixel(geom);
  check_nyquist(spec.f_h, 0.5 / dpp, "horizontal");
  check_nyquist(spec.f_v, 0.5 / dpp, "vertical");
  check_nyquist(spec.f_t, 0.5 * geom.frame_rate, "temporal");

  const int n = spec.size_px;
  const double center = 0.5 * (n - 1);
  const double radius = 0.5 * spec.window_diameter;
  std::vector<double> spatial(static_cast<size_t>(n) * n);
  for (int y = 0; y < n; ++y) {
    const double yd = (y - center) * dpp;
    for (int x = 0; x < n; ++x) {
      const double xd = (x - center) * dpp;
      const double rr = std::hypot(xd, yd);
      double w = 1.0;
      if (rr > radius) {
        w = spec.falloff_sigma > 0.0
                ? std::exp(-0.5 * std::pow((rr - radius) / spec.falloff_sigma,
                                           2))
                : 0.0;
      }
      spatial[static_cast<size_t>(y) * n + x] =
          w * std::cos(kTwoPi * spec.f_h * xd) * std::cos(kTwoPi * spec.f_v * yd);
    }
  }

  const double l0 = code_to_luminance(geom, spec.background);
  PatchVolume patch{Volume(PatchDims{spec.n_frames, n, n})};
  for (int t = 0; t < spec.n_frames; ++t) {
    const double m =
        spec.contrast *
        std::cos(kTwoPi * spec.f_t * t / geom.frame_rate + spec.temporal_phase);
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) {
        patch.volume.at(t, y, x) =
            l0 * (1.0 + m * spatial[static_cast<size_t>(y) * n + x]);
      }
    }
  }
  return patch;
}

PatchVolume static_version(const PatchVolume& patch) {
  SpectrumPatch spectrum = normalize_amplitudes(dct3_separable(patch));
  const size_t frame = spectrum.dims().frame_size();
  std::fill(spectrum.delta_l.values.begin() + static_cast<long>(frame),
            spectrum.delta_l.values.end(), 0.0);
  PatchVolume out = dct3_inverse(spectrum);
  out.origin_frame = patch.origin_frame;
  out.origin_x = patch.origin_x;
  out.origin_y = patch.origin_y;
  return out;
}

double pooled_contrast(const PatchVolume& patch, double eccentricity_deg,
                       const SensitivityParams& params,
                       const DisplayGeometry& geom) {
  return patch_probability(patch, eccentricity_deg, params, geom, true).c_m;
}

PatchVolume scale_to_jnd(const PatchVolume& patch, double target_c_jnd,
                         double eccentricity_deg,
                         const SensitivityParams& params,
                         const DisplayGeometry& geom) {
  if (!(target_c_jnd >= 0.0)) {
    throw InputError("scale_to_jnd: target must be >= 0");
  }
  const PatchVolume base = static_version(patch);
  // Residuals at rounding level are not temporal content.
  double residual = 0.0, level = 0.0;
  for (size_t i = 0; i < base.volume.values.size(); ++i) {
    residual = std::max(
        residual, std::abs(patch.volume.values[i] - base.volume.values[i]));
    level = std::max(level, std::abs(base.volume.values[i]));
  }
  const double current =
      pooled_contrast(patch, eccentricity_deg, params, geom);
  if (!(current > 0.0) || residual <= 1e-9 * std::max(level, 1.0)) {
    throw InputError("scale_to_jnd: patch has no visible temporal energy");
  }
  // The transform is linear and the DC term is untouched, so scaling the
  // residual against the static projection scales C_M by the same factor.
  const double factor = target_c_jnd / current;
  PatchVolume out = patch;
  for (size_t i = 0; i < out.volume.values.size(); ++i) {
    const double s = base.volume.values[i];
    out.volume.values[i] = s + factor * (patch.volume.values[i] - s);
  }
  return out;
}

}  // namespace tvis
