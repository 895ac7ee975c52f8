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

#include "tvis/geometry.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace tvis {
namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

struct Vec3 {
  double x, y, z;
};

// Ray from the eye to a screen pixel, in millimeters.
Vec3 eye_ray(const DisplayGeometry& g, GazePoint p) {
  const double pitch_x = g.width_mm / g.width_px;
  const double pitch_y = g.height_mm / g.height_px;
  return {(p.x - 0.5 * g.width_px) * pitch_x,
          (p.y - 0.5 * g.height_px) * pitch_y, g.viewing_distance_mm};
}

double require_number(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw InputError(std::string("geometry: missing numeric key '") + key +
                     "'");
  }
  return j.at(key).get<double>();
}

}  // namespace

void DisplayGeometry::validate() const {
  if (width_px <= 0 || height_px <= 0) {
    throw InputError("geometry: pixel dimensions must be positive");
  }
  if (!(width_mm > 0) || !(height_mm > 0) || !(viewing_distance_mm > 0)) {
    throw InputError("geometry: physical sizes must be positive");
  }
  if (!(peak_luminance > 0) || !(frame_rate > 0)) {
    throw InputError("geometry: peak luminance and frame rate must be > 0");
  }
  if (!(black_luminance >= 0) || !(black_luminance < peak_luminance)) {
    throw InputError("geometry: need 0 <= black luminance < peak luminance");
  }
}

DisplayGeometry& DisplayGeometry::with_contrast_ratio(double ratio) {
  if (!(ratio > 1)) throw InputError("geometry: contrast ratio must be > 1");
  black_luminance = peak_luminance / ratio;
  return *this;
}

DisplayGeometry DisplayGeometry::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InputError("geometry: expected a JSON object");
  DisplayGeometry g;
  g.width_px = static_cast<int>(require_number(j, "width_px"));
  g.height_px = static_cast<int>(require_number(j, "height_px"));
  g.width_mm = require_number(j, "width_mm");
  g.height_mm = require_number(j, "height_mm");
  g.viewing_distance_mm = require_number(j, "distance_mm");
  g.peak_luminance = require_number(j, "peak_cdm2");
  g.frame_rate = require_number(j, "fps");
  g.black_luminance = 0.0;
  if (j.contains("black_cdm2")) {
    g.black_luminance = require_number(j, "black_cdm2");
  } else if (j.contains("contrast_ratio")) {
    g.with_contrast_ratio(require_number(j, "contrast_ratio"));
  }
  g.validate();
  return g;
}

nlohmann::json DisplayGeometry::to_json() const {
  return {{"width_px", width_px},       {"height_px", height_px},
          {"width_mm", width_mm},       {"height_mm", height_mm},
          {"distance_mm", viewing_distance_mm},
          {"peak_cdm2", peak_luminance}, {"black_cdm2", black_luminance},
          {"fps", frame_rate}};
}

double pixel_pitch_mm(const DisplayGeometry& geom) {
  return geom.width_mm / geom.width_px;
}

double degrees_per_pixel(const DisplayGeometry& geom) {
  return std::atan(pixel_pitch_mm(geom) / geom.viewing_distance_mm) *
         kRadToDeg;
}

double local_degrees_per_pixel(const DisplayGeometry& geom, GazePoint where) {
  return eccentricity_deg(geom, {where.x - 0.5, where.y},
                          {where.x + 0.5, where.y});
}

double eccentricity_deg(const DisplayGeometry& geom, GazePoint gaze,
                        GazePoint point) {
  const Vec3 a = eye_ray(geom, gaze);
  const Vec3 b = eye_ray(geom, point);
  const Vec3 c{a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z,
               a.x * b.y - a.y * b.x};
  const double cross = std::sqrt(c.x * c.x + c.y * c.y + c.z * c.z);
  const double dot = a.x * b.x + a.y * b.y + a.z * b.z;
  return std::atan2(cross, dot) * kRadToDeg;
}

double code_to_luminance(const DisplayGeometry& geom, double v) {
  if (!(v >= 0.0 && v <= 1.0)) {
    warn("display value " + std::to_string(v) + " clamped to [0,1]");
    v = std::isnan(v) ? 0.0 : std::clamp(v, 0.0, 1.0);
  }
  return geom.black_luminance +
         (geom.peak_luminance - geom.black_luminance) * v;
}

double srgb_to_linear(double encoded) {
  if (encoded <= 0.04045) return encoded / 12.92;
  return std::pow((encoded + 0.055) / 1.055, 2.4);
}

double linear_to_srgb(double linear) {
  if (linear <= 0.0031308) return 12.92 * linear;
  return 1.055 * std::pow(linear, 1.0 / 2.4) - 0.055;
}

FrequencyAxes component_frequencies(const PatchDims& dims, double frame_rate,
                                    double degrees_per_px) {
  if (dims.t < 2 || dims.h < 2 || dims.v < 2) {
    throw InputError("component_frequencies: each dimension must be >= 2");
  }
  auto axis = [](int n, double samples_per_unit) {
    std::vector<double> f(static_cast<size_t>(n));
    for (int k = 0; k < n; ++k) {
      f[static_cast<size_t>(k)] =
          static_cast<double>(k) / (2.0 * (n - 1)) * samples_per_unit;
    }
    return f;
  };
  return {axis(dims.t, frame_rate), axis(dims.h, 1.0 / degrees_per_px),
          axis(dims.v, 1.0 / degrees_per_px)};
}

FrequencyAxes component_frequencies(const PatchDims& dims,
                                    const DisplayGeometry& geom) {
  return component_frequencies(dims, geom.frame_rate, degrees_per_pixel(geom));
}

}  // namespace tvis
