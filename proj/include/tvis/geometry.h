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

// Physical viewing model. The eye sits on the normal through the screen
// center, viewing_distance_mm away from the panel.

#ifndef TVIS_GEOMETRY_H_
#define TVIS_GEOMETRY_H_

#include <vector>

#include "json.hpp"
#include "tvis/common.h"

namespace tvis {

struct DisplayGeometry {
  int width_px = 3840;
  int height_px = 2160;
  double width_mm = 1218.0;
  double height_mm = 685.0;
  double viewing_distance_mm = 620.0;
  double peak_luminance = 167.33;  // cd/m^2
  double black_luminance = 0.0;    // cd/m^2
  double frame_rate = 120.0;       // Hz

  // Throws InputError when a field is non-positive or black >= peak.
  void validate() const;

  // Sets black_luminance = peak / ratio.
  DisplayGeometry& with_contrast_ratio(double ratio);

  // JSON keys: width_px, height_px, width_mm, height_mm, distance_mm,
  // peak_cdm2, black_cdm2 (optional), contrast_ratio (optional), fps.
  static DisplayGeometry from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

// Screen position in pixels; sub-pixel values and off-screen points allowed.
struct GazePoint {
  double x = 0.0;
  double y = 0.0;
};

double pixel_pitch_mm(const DisplayGeometry& geom);

// Angular size of one pixel at the screen center (horizontal pitch).
double degrees_per_pixel(const DisplayGeometry& geom);
inline double pixels_per_degree(const DisplayGeometry& geom) {
  return 1.0 / degrees_per_pixel(geom);
}

// Angular size of one pixel at an arbitrary screen position, measured along
// the horizontal axis. Used only when local angular scaling is requested.
double local_degrees_per_pixel(const DisplayGeometry& geom, GazePoint where);

// Visual angle between the eye->gaze and eye->point rays, in degrees.
double eccentricity_deg(const DisplayGeometry& geom, GazePoint gaze,
                        GazePoint point);

// Display-linear value v in [0,1] to cd/m^2. Out-of-range values are
// clamped with a warning.
double code_to_luminance(const DisplayGeometry& geom, double v);

// sRGB electro-optical transfer: encoded [0,1] to display-linear [0,1].
double srgb_to_linear(double encoded);
double linear_to_srgb(double linear);

// Physical frequency of each DCT-I index along every patch axis.
// f(k) = k / (2(N-1)) cycles per sample.
struct FrequencyAxes {
  std::vector<double> t;  // Hz
  std::vector<double> h;  // cycles per degree
  std::vector<double> v;  // cycles per degree
};

FrequencyAxes component_frequencies(const PatchDims& dims,
                                    const DisplayGeometry& geom);
FrequencyAxes component_frequencies(const PatchDims& dims, double frame_rate,
                                    double degrees_per_px);

}  // namespace tvis

#endif  // TVIS_GEOMETRY_H_
