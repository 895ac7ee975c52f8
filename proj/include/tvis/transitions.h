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


// Imperceptible transitions between two images. Each 25-frame window blends
// linearly from alpha to alpha + delta; delta is chosen so the predicted
// detection probability (normalized scale) of the window equals a target.
// Images wider or taller than one patch are split into 71x71 sub-windows;
// the window probability is their maximum and the applied step their
// minimum solved step.

#ifndef TVIS_TRANSITIONS_H_
#define TVIS_TRANSITIONS_H_

#include <memory>
#include <mutex>
#include <vector>

#include "json.hpp"
#include "tvis/common.h"
#include "tvis/geometry.h"
#include "tvis/model.h"
#include "tvis/visibility.h"

namespace tvis {

// (1 - alpha) source + alpha target, display-linear. Throws InputError on a
// shape mismatch or alpha outside [0,1].
Image blend(const Image& source, const Image& target, double alpha);

// Literal evaluation: renders the window's frames, converts to cd/m^2 and
// runs every complete sub-window through the patch pipeline. Returns the
// maximum p_norm.
double window_probability(const Image& source, const Image& target,
                          double alpha_start, double delta_alpha,
                          double eccentricity_deg,
                          const SensitivityParams& params,
                          const DisplayGeometry& geom,
                          PatchDims patch = kCalibratedPatch);

// Closed-form evaluator for the same quantity. With a linear ramp, every
// k_t > 0 component is delta * P * R(k_t) * D(k_h, k_v), where P is the
// display luminance range, R the normalized DCT of the ramp and D that of
// target - source; the DC term is the luminance at the window's mid alpha.
// Pooling therefore reduces to C_M = delta * P * K(e) / max(DC, L_min).
class TransitionModel {
 public:
  TransitionModel(const Image& source, const Image& target,
                  const SensitivityParams& params, const DisplayGeometry& geom,
                  PatchDims patch = kCalibratedPatch);

  int sub_windows() const { return static_cast<int>(subs_.size()); }
  const SensitivityParams& params() const { return params_; }

  // p_norm of one sub-window.
  double sub_probability(int sub, double alpha_start, double delta_alpha,
                         double eccentricity_deg) const;
  // Maximum over sub-windows.
  double probability(double alpha_start, double delta_alpha,
                     double eccentricity_deg) const;

 private:
  struct Sub {
    double source_dc = 0.0;  // normalized spatial DC of the source, [0,1]
    double diff_dc = 0.0;    // same for target - source
    std::vector<double> weights;  // |D(k_v,k_h)|^r
  };
  double pooled_k(int sub, double eccentricity_deg) const;

  SensitivityParams params_;
  DisplayGeometry geom_;
  PatchDims patch_;
  std::vector<Sub> subs_;
  std::vector<double> ramp_r_;  // |R(k_t)|^r
  FrequencyAxes axes_;
  mutable std::vector<std::pair<double, std::vector<double>>> k_cache_;
  mutable std::unique_ptr<std::mutex> cache_mutex_;
};

struct StepResult {
  double delta_alpha = 0.0;
  double probability = 0.0;  // max over sub-windows at delta_alpha
  // Set when the step is not an interior root: the transition finishes in
  // this window, or even the minimal step exceeds the target.
  bool finishes = false;
  bool minimal = false;
};

inline constexpr double kMinimalStep = 1e-5;

// Brent root of probability(delta) - p_d on [0, 1 - alpha_start] per
// sub-window, then the minimum over sub-windows.
StepResult solve_step(const TransitionModel& model, double alpha_start,
                      double p_d, double eccentricity_deg);

struct TransitionSchedule {
  double p_d = 0.0;
  double fps = 0.0;
  int window_frames = 25;
  std::vector<double> eccentricities;
  // alphas[i] runs from 0 to exactly 1, one entry per window boundary.
  std::vector<std::vector<double>> alphas;
  // Per window: 0 for an optimized window, 1 for the finishing window, 2 for
  // a minimal-step window.
  std::vector<std::vector<int>> flags;

  int windows(size_t i) const {
    return static_cast<int>(alphas.at(i).size()) - 1;
  }
  nlohmann::json to_json() const;
  static TransitionSchedule from_json(const nlohmann::json& j);
};

// Greedy solve_step iteration per eccentricity, run concurrently.
TransitionSchedule build_schedule(const TransitionModel& model, double p_d,
                                  const std::vector<double>& eccentricities,
                                  const DisplayGeometry& geom,
                                  int workers = 1);

// Alpha on the common normalized-progress axis u in [0,1], interpolated
// linearly between the two schedules bracketing e (clamped outside).
double adaptive_alpha(const TransitionSchedule& schedule, double e,
                      double progress);
// Windows to completion at e, interpolated the same way.
double adaptive_windows(const TransitionSchedule& schedule, double e);

// Frame-by-frame playback under a changing eccentricity. Alpha is kept as
// state: each frame finds the progress at which the curve for the current
// eccentricity reaches the present alpha and advances it by one frame, so
// alpha never decreases.
class AdaptiveTransition {
 public:
  explicit AdaptiveTransition(const TransitionSchedule& schedule);
  double alpha() const { return alpha_; }
  bool done() const { return alpha_ >= 1.0; }
  // Advances one frame at eccentricity e and returns the new alpha.
  double step(double e);

 private:
  const TransitionSchedule& schedule_;
  double alpha_ = 0.0;
};

// Renders frames (display-linear) until alpha reaches 1 or max_frames. The
// eccentricity of each frame is measured from gaze(frame) to the image
// center, with the image's top-left corner at `position` on screen.
std::vector<Image> render_transition(const Image& source, const Image& target,
                                     const TransitionSchedule& schedule,
                                     const GazeTrack& gaze, GazePoint position,
                                     const DisplayGeometry& geom,
                                     int max_frames = 100000);

}  // namespace tvis

#endif  // TVIS_TRANSITIONS_H_
