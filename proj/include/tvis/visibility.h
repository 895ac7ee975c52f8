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

// Detection probability of temporal change, per patch and per video.
//
// A patch's Weber contrasts are scaled by the linear sensitivity at each
// component's frequency (so 1.0 is one JND), pooled with a Minkowski sum over
// every component that varies in time, and mapped through the psychometric
// function.

#ifndef TVIS_VISIBILITY_H_
#define TVIS_VISIBILITY_H_

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "tvis/dct.h"
#include "tvis/geometry.h"
#include "tvis/model.h"

namespace tvis {

struct PatchResult {
  double c_m = 0.0;     // pooled JND-scaled contrast
  double psi = 0.0;     // 2AFC proportion correct
  double p_norm = 0.0;  // guess-corrected detection probability
};

// C_JND(k) = linear_sensitivity(k, e) * C(k).
Volume jnd_scale(const Volume& contrast, const FrequencyAxes& axes,
                 double eccentricity_deg, const SensitivityParams& params);

// (sum over k_t > 0 of |c|^r)^(1/r). Throws InputError when r < 1.
double minkowski_pool(const Volume& c_jnd, double r);

PatchResult result_from_pooled(double c_m, const SensitivityParams& params);

// Full pipeline for one window. Windows other than 25x71x71 are rejected
// unless allow_other_dims is set.
PatchResult patch_probability(const PatchVolume& patch,
                              double eccentricity_deg,
                              const SensitivityParams& params,
                              const DisplayGeometry& geom,
                              bool allow_other_dims = false);

// Fused transform + scaling + pooling for a fixed window size. One instance
// per thread; instances are cheap apart from their scratch buffers.
class PatchAnalyzer {
 public:
  PatchAnalyzer(PatchDims dims, const FrequencyAxes& axes,
                const SensitivityParams& params);

  const PatchDims& dims() const { return dims_; }

  // Scratch input of dims().size() values in Volume order; fill it with
  // luminance (cd/m^2) and call run().
  std::span<double> input() { return in_; }
  PatchResult run(double eccentricity_deg);
  // As run(), but with sensitivities from a different frequency grid.
  PatchResult run(double eccentricity_deg, const SensitivityGrid& grid);

  PatchResult analyze(std::span<const double> luminance,
                      double eccentricity_deg);

 private:
  PatchDims dims_;
  SensitivityParams params_;
  std::shared_ptr<const Dct3Plan> plan_;
  SensitivityGrid grid_;
  std::vector<double> weights_;  // amplitude weights, rows with k_t > 0
  double dc_weight_ = 0.0;
  std::vector<double> in_;
  std::vector<double> scratch_;
  std::vector<double> out_;
  std::vector<double> sensitivity_;
};

// Read-only frame provider; read() must be safe to call concurrently.
class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual int width() const = 0;
  virtual int height() const = 0;
  virtual int frame_count() const = 0;
  // Writes the frame's luminance in cd/m^2, row-major.
  virtual void read(int index, std::span<float> luminance) const = 0;
};

// Frames already converted to luminance.
class LuminanceFrames : public FrameSource {
 public:
  explicit LuminanceFrames(std::vector<Image> frames);
  int width() const override;
  int height() const override;
  int frame_count() const override;
  void read(int index, std::span<float> luminance) const override;
  const std::vector<Image>& frames() const { return frames_; }

 private:
  std::vector<Image> frames_;
};

// Frames produced on demand, e.g. synthetic test content.
class GeneratedFrames : public FrameSource {
 public:
  using Generator = std::function<void(int index, std::span<float>)>;
  GeneratedFrames(int width, int height, int count, Generator gen);
  int width() const override { return width_; }
  int height() const override { return height_; }
  int frame_count() const override { return count_; }
  void read(int index, std::span<float> luminance) const override;

 private:
  int width_, height_, count_;
  Generator gen_;
};

struct VisibilityCell {
  int t_idx = 0;
  int x_idx = 0;
  int y_idx = 0;
  double ecc_deg = 0.0;
  double c_m = 0.0;
  double psi = 0.0;
  double p_norm = 0.0;
};

struct VisibilityMap {
  PatchDims patch;
  int n_t = 0;
  int n_x = 0;
  int n_y = 0;
  int frames_total = 0;
  int width_px = 0;
  int height_px = 0;
  std::vector<GazePoint> window_gaze;  // one per time window
  std::vector<VisibilityCell> cells;   // ordered by t, then y, then x

  const VisibilityCell& at(int t, int x, int y) const {
    return cells[(static_cast<size_t>(t) * n_y + y) * n_x + x];
  }
  // Fraction of pixels x frames covered by complete patches.
  double coverage() const;
};

// Gaze location as a function of frame index.
using GazeTrack = std::function<GazePoint(int frame)>;

struct AnalyzeOptions {
  PatchDims patch = kCalibratedPatch;
  bool allow_other_dims = false;
  int workers = 1;
  // Derive each patch's frequency axes from the local pixel size instead of
  // the screen-center value.
  bool local_scaling = false;
};

// Splits the video into non-overlapping complete patches (partial border
// patches are skipped) and evaluates each at the eccentricity of its center.
// The gaze for a time window is taken at the window's middle frame. Output is
// identical for any worker count.
VisibilityMap analyze_video(const FrameSource& frames, const GazeTrack& gaze,
                            const DisplayGeometry& geom,
                            const SensitivityParams& params,
                            const AnalyzeOptions& options = {});
VisibilityMap analyze_video(const FrameSource& frames, GazePoint gaze,
                            const DisplayGeometry& geom,
                            const SensitivityParams& params,
                            const AnalyzeOptions& options = {});

// Runs fn(worker, index) for index in [0, count) on `workers` threads.
void parallel_for(size_t count, int workers,
                  const std::function<void(int, size_t)>& fn);

}  // namespace tvis

#endif  // TVIS_VISIBILITY_H_
