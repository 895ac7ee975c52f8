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

#include "tvis/visibility.h"

#include <Eigen/Core>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

namespace tvis {

Volume jnd_scale(const Volume& contrast, const FrequencyAxes& axes,
                 double eccentricity_deg, const SensitivityParams& params) {
  const PatchDims& d = contrast.dims;
  if (axes.t.size() != static_cast<size_t>(d.t) ||
      axes.h.size() != static_cast<size_t>(d.h) ||
      axes.v.size() != static_cast<size_t>(d.v)) {
    throw InputError("jnd_scale: frequency axes do not match the volume");
  }
  SensitivityGrid grid(axes, params);
  Volume out(d);
  grid.fill(eccentricity_deg, out.values);
  for (size_t i = 0; i < out.values.size(); ++i) {
    out.values[i] *= contrast.values[i];
  }
  return out;
}

double minkowski_pool(const Volume& c_jnd, double r) {
  if (!(r >= 1.0)) throw InputError("minkowski_pool: r must be >= 1");
  double sum = 0.0;
  for (size_t i = c_jnd.dims.frame_size(); i < c_jnd.values.size(); ++i) {
    const double c = std::abs(c_jnd.values[i]);
    if (c > 0.0) sum += std::pow(c, r);
  }
  return std::pow(sum, 1.0 / r);
}

PatchResult result_from_pooled(double c_m, const SensitivityParams& params) {
  PatchResult res;
  res.c_m = c_m;
  res.psi = psychometric(c_m, params);
  res.p_norm = normalized_probability(res.psi, params);
  return res;
}

PatchResult patch_probability(const PatchVolume& patch,
                              double eccentricity_deg,
                              const SensitivityParams& params,
                              const DisplayGeometry& geom,
                              bool allow_other_dims) {
  if (!allow_other_dims && !(patch.dims() == kCalibratedPatch)) {
    throw InputError("patch_probability: window " +
                     format_patch_dims(patch.dims()) +
                     " differs from the calibrated 25x71x71");
  }
  const SpectrumPatch spectrum = normalize_amplitudes(dct3_separable(patch));
  const Volume contrast = weber_contrast(spectrum, params.l_min);
  const Volume scaled = jnd_scale(
      contrast, component_frequencies(patch.dims(), geom), eccentricity_deg,
      params);
  return result_from_pooled(minkowski_pool(scaled, params.r), params);
}

PatchAnalyzer::PatchAnalyzer(PatchDims dims, const FrequencyAxes& axes,
                             const SensitivityParams& params)
    : dims_(dims),
      params_(params),
      plan_(shared_plan(dims)),
      grid_(axes, params),
      in_(dims.size()),
      scratch_(dims.size()),
      out_(dims.size()),
      sensitivity_(dims.size()) {
  const auto wt = amplitude_weights(dims.t);
  const auto wv = amplitude_weights(dims.v);
  const auto wh = amplitude_weights(dims.h);
  weights_.reserve(dims.size() - dims.frame_size());
  for (int t = 1; t < dims.t; ++t) {
    for (int y = 0; y < dims.v; ++y) {
      for (int x = 0; x < dims.h; ++x) weights_.push_back(wt[t] * wv[y] * wh[x]);
    }
  }
  dc_weight_ = wt[0] * wv[0] * wh[0];
}

PatchResult PatchAnalyzer::run(double eccentricity_deg) {
  return run(eccentricity_deg, grid_);
}

PatchResult PatchAnalyzer::run(double eccentricity_deg,
                               const SensitivityGrid& grid) {
  using Eigen::ArrayXd;
  plan_->execute(in_.data(), scratch_.data(), out_.data());
  const double dc = out_[0] * dc_weight_;
  const double inv_denom = 1.0 / std::max(dc, params_.l_min);
  grid.fill(eccentricity_deg, sensitivity_);
  // Components with k_t = 0 hold the static content and are skipped.
  const size_t skip = dims_.frame_size();
  const Eigen::Index n = static_cast<Eigen::Index>(weights_.size());
  const Eigen::Map<const ArrayXd> raw(out_.data() + skip, n);
  const Eigen::Map<const ArrayXd> sens(sensitivity_.data() + skip, n);
  const Eigen::Map<const ArrayXd> w(weights_.data(), n);
  const ArrayXd jnd = raw.abs() * w * sens * inv_denom;
  // log(0) = -inf maps to exp(-inf) = 0, so zero components drop out.
  const double sum = (jnd.log() * params_.r).exp().sum();
  return result_from_pooled(std::pow(sum, 1.0 / params_.r), params_);
}

PatchResult PatchAnalyzer::analyze(std::span<const double> luminance,
                                   double eccentricity_deg) {
  if (luminance.size() != dims_.size()) {
    throw InputError("PatchAnalyzer: luminance size does not match window");
  }
  std::copy(luminance.begin(), luminance.end(), in_.data());
  return run(eccentricity_deg);
}

LuminanceFrames::LuminanceFrames(std::vector<Image> frames)
    : frames_(std::move(frames)) {
  for (const Image& f : frames_) {
    if (!f.same_shape(frames_.front())) {
      throw InputError("frame size mismatch within the sequence");
    }
  }
}

int LuminanceFrames::width() const {
  return frames_.empty() ? 0 : frames_.front().width;
}
int LuminanceFrames::height() const {
  return frames_.empty() ? 0 : frames_.front().height;
}
int LuminanceFrames::frame_count() const {
  return static_cast<int>(frames_.size());
}

void LuminanceFrames::read(int index, std::span<float> luminance) const {
  const Image& f = frames_.at(static_cast<size_t>(index));
  std::copy(f.pixels.begin(), f.pixels.end(), luminance.begin());
}

GeneratedFrames::GeneratedFrames(int width, int height, int count,
                                 Generator gen)
    : width_(width), height_(height), count_(count), gen_(std::move(gen)) {}

void GeneratedFrames::read(int index, std::span<float> luminance) const {
  gen_(index, luminance);
}

double VisibilityMap::coverage() const {
  const double total =
      static_cast<double>(frames_total) * width_px * height_px;
  if (total <= 0.0) return 0.0;
  return static_cast<double>(n_t) * patch.t * n_x * patch.h * n_y * patch.v /
         total;
}

void parallel_for(size_t count, int workers,
                  const std::function<void(int, size_t)>& fn) {
  const int n = std::max(1, std::min<int>(workers, static_cast<int>(count)));
  if (n <= 1) {
    for (size_t i = 0; i < count; ++i) fn(0, i);
    return;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(n));
  for (int w = 0; w < n; ++w) {
    pool.emplace_back([&, w] {
      for (size_t i = next++; i < count; i = next++) {
        try {
          fn(w, i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

VisibilityMap analyze_video(const FrameSource& frames, const GazeTrack& gaze,
                            const DisplayGeometry& geom,
                            const SensitivityParams& params,
                            const AnalyzeOptions& options) {
  geom.validate();
  params.validate();
  const PatchDims& pd = options.patch;
  if (!options.allow_other_dims && !(pd == kCalibratedPatch)) {
    throw InputError("analyze_video: window " + format_patch_dims(pd) +
                     " differs from the calibrated 25x71x71");
  }
  if (options.workers < 1) throw InputError("worker count must be >= 1");
  if (frames.width() != geom.width_px || frames.height() != geom.height_px) {
    throw InputError("frame size " + std::to_string(frames.width()) + "x" +
                     std::to_string(frames.height()) +
                     " does not match the display geometry " +
                     std::to_string(geom.width_px) + "x" +
                     std::to_string(geom.height_px));
  }
  if (frames.frame_count() < pd.t) {
    throw InputError("analyze_video: need at least " + std::to_string(pd.t) +
                     " frames, got " + std::to_string(frames.frame_count()));
  }

  VisibilityMap map;
  map.patch = pd;
  map.n_t = frames.frame_count() / pd.t;
  map.n_x = frames.width() / pd.h;
  map.n_y = frames.height() / pd.v;
  map.frames_total = frames.frame_count();
  map.width_px = frames.width();
  map.height_px = frames.height();
  map.cells.resize(static_cast<size_t>(map.n_t) * map.n_x * map.n_y);

  const FrequencyAxes axes = component_frequencies(pd, geom);
  std::vector<std::optional<PatchAnalyzer>> analyzers(
      static_cast<size_t>(options.workers));

  const size_t frame_px = static_cast<size_t>(frames.width()) * frames.height();
  std::vector<std::vector<float>> window(static_cast<size_t>(pd.t),
                                         std::vector<float>(frame_px));
  const size_t patches_per_window = static_cast<size_t>(map.n_x) * map.n_y;

  for (int w = 0; w < map.n_t; ++w) {
    const int first = w * pd.t;
    parallel_for(static_cast<size_t>(pd.t), options.workers,
                 [&](int, size_t t) {
                   frames.read(first + static_cast<int>(t), window[t]);
                 });
    const GazePoint g = gaze(first + pd.t / 2);
    map.window_gaze.push_back(g);

    parallel_for(patches_per_window, options.workers, [&](int worker,
                                                          size_t idx) {
      auto& slot = analyzers[static_cast<size_t>(worker)];
      if (!slot) slot.emplace(pd, axes, params);
      PatchAnalyzer& analyzer = *slot;
      const int px = static_cast<int>(idx % map.n_x);
      const int py = static_cast<int>(idx / map.n_x);
      const int x0 = px * pd.h;
      const int y0 = py * pd.v;
      double* in = analyzer.input().data();
      for (int t = 0; t < pd.t; ++t) {
        const float* frame = window[static_cast<size_t>(t)].data();
        for (int y = 0; y < pd.v; ++y) {
          const float* src =
              frame + static_cast<size_t>(y0 + y) * frames.width() + x0;
          std::copy(src, src + pd.h, in);
          in += pd.h;
        }
      }
      const GazePoint center{x0 + 0.5 * pd.h, y0 + 0.5 * pd.v};
      const double ecc = eccentricity_deg(geom, g, center);
      PatchResult res;
      if (options.local_scaling) {
        const SensitivityGrid local(
            component_frequencies(pd, geom.frame_rate,
                                  local_degrees_per_pixel(geom, center)),
            params);
        res = analyzer.run(ecc, local);
      } else {
        res = analyzer.run(ecc);
      }
      VisibilityCell& cell =
          map.cells[static_cast<size_t>(w) * patches_per_window + idx];
      cell = {w, px, py, ecc, res.c_m, res.psi, res.p_norm};
    });
  }
  return map;
}

VisibilityMap analyze_video(const FrameSource& frames, GazePoint gaze,
                            const DisplayGeometry& geom,
                            const SensitivityParams& params,
                            const AnalyzeOptions& options) {
  return analyze_video(
      frames, [gaze](int) { return gaze; }, geom, params, options);
}

}  // namespace tvis
