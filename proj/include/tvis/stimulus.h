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

// Psychophysical test stimuli: windowed, counterphase-modulated gratings and
// helpers that reshape the temporal content of an existing patch.

#ifndef TVIS_STIMULUS_H_
#define TVIS_STIMULUS_H_

#include "json.hpp"
#include "tvis/dct.h"
#include "tvis/geometry.h"
#include "tvis/model.h"

namespace tvis {

struct GratingSpec {
  double f_h = 0.0;       // cycles per degree
  double f_v = 0.0;       // cycles per degree
  double f_t = 0.0;       // Hz
  double contrast = 0.0;  // Weber amplitude
  double background = 0.5;        // display-linear
  double window_diameter = 2.0;   // degrees
  double falloff_sigma = 0.1;     // degrees, Gaussian beyond the radius
  double temporal_phase = 0.0;    // radians; 0 peaks at the first frame
  int n_frames = 25;
  int size_px = 71;

  // Throws InputError for negative frequencies, a background outside (0,1],
  // a contrast that is negative or not displayable around the background,
  // or fewer than two frames/pixels.
  void validate() const;

  nlohmann::json to_json() const;
  static GratingSpec from_json(const nlohmann::json& j);
};

// L = L0 (1 + c w(x,y) cos(2 pi f_h x) cos(2 pi f_v y) cos(2 pi f_t t + phase))
// with x, y in degrees from the patch center and t = frame / frame_rate.
// Frequencies above the patch Nyquist limit raise InputError.
PatchVolume generate_grating(const GratingSpec& spec,
                             const DisplayGeometry& geom);

// Drops every k_t > 0 component; the result repeats the temporal-mean frame.
PatchVolume static_version(const PatchVolume& patch);

// Pooled C_M of a patch under the full pipeline, any window size.
double pooled_contrast(const PatchVolume& patch, double eccentricity_deg,
                       const SensitivityParams& params,
                       const DisplayGeometry& geom);

// Rescales the temporal (k_t > 0) content so the pooled C_M equals
// target_c_jnd at the given eccentricity. The static content is unchanged.
// Throws InputError when the patch has no temporal energy or the target is
// negative.
PatchVolume scale_to_jnd(const PatchVolume& patch, double target_c_jnd,
                         double eccentricity_deg,
                         const SensitivityParams& params,
                         const DisplayGeometry& geom);

}  // namespace tvis

#endif  // TVIS_STIMULUS_H_
