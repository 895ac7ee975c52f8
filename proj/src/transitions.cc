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


#include "tvis/transitions.h"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_roots.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "tvis/dct.h"

namespace tvis {
namespace {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void check_pair(const Image& source, const Image& target) {
  if (!source.same_shape(target)) {
    throw InputError("transition: source and target sizes differ");
  }
}

int sub_count(const Image& img, const PatchDims& patch) {
  const int n = (img.width / patch.h) * (img.height / patch.v);
  if (n == 0) {
    throw InputError("transition: image smaller than one " +
                     std::to_string(patch.h) + "x" + std::to_string(patch.v) +
                     " window");
  }
  return n;
}

struct BrentInput {
  const TransitionModel* model;
  int sub;
  double alpha;
  double p_d;
  double ecc;
};

double brent_fn(double delta, void* data) {
  const auto* in = static_cast<const BrentInput*>(data);
  return in->model->sub_probability(in->sub, in->alpha, delta, in->ecc) -
         in->p_d;
}

// Piecewise-linear alpha of one stored sequence at normalized progress u.
double sequence_alpha(const std::vector<double>& alphas, double u) {
  const int n = static_cast<int>(alphas.size()) - 1;
  if (n <= 0) return 1.0;
  const double pos = std::clamp(u, 0.0, 1.0) * n;
  const int i = std::min(static_cast<int>(pos), n - 1);
  const double f = pos - i;
  return alphas[i] + f * (alphas[i + 1] - alphas[i]);
}

// Bracketing schedule indices and the weight of the upper one.
std::tuple<size_t, size_t, double> bracket(const TransitionSchedule& s,
                                           double e) {
  const auto& es = s.eccentricities;
  if (es.empty()) throw InputError("schedule has no eccentricities");
  if (e <= es.front()) return {0, 0, 0.0};
  if (e >= es.back()) return {es.size() - 1, es.size() - 1, 0.0};
  const size_t hi = static_cast<size_t>(
      std::upper_bound(es.begin(), es.end(), e) - es.begin());
  const size_t lo = hi - 1;
  return {lo, hi, (e - es[lo]) / (es[hi] - es[lo])};
}

}  // namespace

Image blend(const Image& source, const Image& target, double alpha) {
  check_pair(source, target);
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw InputError("blend: alpha must be in [0,1]");
  }
  Image out(source.width, source.height);
  for (size_t i = 0; i < out.pixels.size(); ++i) {
    out.pixels[i] = static_cast<float>((1.0 - alpha) * source.pixels[i] +
                                       alpha * target.pixels[i]);
  }
  return out;
}

double window_probability(const Image& source, const Image& target,
                          double alpha_start, double delta_alpha,
                          double eccentricity_deg,
                          const SensitivityParams& params,
                          const DisplayGeometry& geom, PatchDims patch) {
  check_pair(source, target);
  if (!(delta_alpha >= 0.0) || !(alpha_start >= 0.0) ||
      alpha_start + delta_alpha > 1.0 + 1e-12) {
    throw InputError("window_probability: need 0 <= alpha, delta and "
                     "alpha + delta <= 1");
  }
  sub_count(source, patch);
  std::vector<Image> frames;
  for (int n = 0; n < patch.t; ++n) {
    const double a = std::min(
        1.0, alpha_start + delta_alpha * n / static_cast<double>(patch.t - 1));
    frames.push_back(blend(source, target, a));
  }
  PatchAnalyzer analyzer(patch, component_frequencies(patch, geom), params);
  double best = 0.0;
  for (int py = 0; py + patch.v <= source.height; py += patch.v) {
    for (int px = 0; px + patch.h <= source.width; px += patch.h) {
      double* in = analyzer.input().data();
      for (const Image& f : frames) {
        for (int y = 0; y < patch.v; ++y) {
          for (int x = 0; x < patch.h; ++x) {
            *in++ = code_to_luminance(geom, f.at(px + x, py + y));
          }
        }
      }
      best = std::max(best, analyzer.run(eccentricity_deg).p_norm);
    }
  }
  return best;
}

TransitionModel::TransitionModel(const Image& source, const Image& target,
                                 const SensitivityParams& params,
                                 const DisplayGeometry& geom, PatchDims patch)
    : params_(params),
      geom_(geom),
      patch_(patch),
      axes_(component_frequencies(patch, geom)),
      cache_mutex_(std::make_unique<std::mutex>()) {
  check_pair(source, target);
  params.validate();
  geom.validate();
  sub_count(source, patch);
  const std::vector<double> mv_raw = dct1_matrix(patch.v);
  const std::vector<double> mh_raw = dct1_matrix(patch.h);
  const Eigen::Map<const RowMatrix> mv(mv_raw.data(), patch.v, patch.v);
  const Eigen::Map<const RowMatrix> mh(mh_raw.data(), patch.h, patch.h);
  const auto wt = amplitude_weights(patch.t);
  const auto wv = amplitude_weights(patch.v);
  const auto wh = amplitude_weights(patch.h);

  // Normalized temporal spectrum of the ramp n / (N_t - 1).
  std::vector<double> ramp(static_cast<size_t>(patch.t));
  for (int n = 0; n < patch.t; ++n) ramp[n] = n / double(patch.t - 1);
  std::vector<double> ramp_hat = dct1_forward(ramp);
  for (int k = 0; k < patch.t; ++k) ramp_hat[k] *= wt[k];
  ramp_r_.resize(static_cast<size_t>(patch.t));
  for (int k = 0; k < patch.t; ++k) ramp_r_[k] = std::pow(std::abs(ramp_hat[k]), params.r);

  RowMatrix s(patch.v, patch.h), d(patch.v, patch.h);
  for (int py = 0; py + patch.v <= source.height; py += patch.v) {
    for (int px = 0; px + patch.h <= source.width; px += patch.h) {
      for (int y = 0; y < patch.v; ++y) {
        for (int x = 0; x < patch.h; ++x) {
          s(y, x) = source.at(px + x, py + y);
          d(y, x) = target.at(px + x, py + y) - s(y, x);
        }
      }
      const RowMatrix d_hat = mv * d * mh.transpose();
      const double s_dc = (mv.row(0) * s * mh.row(0).transpose())(0, 0);
      Sub sub;
      sub.source_dc = s_dc * wv[0] * wh[0];
      sub.diff_dc = d_hat(0, 0) * wv[0] * wh[0];
      sub.weights.resize(patch.frame_size());
      for (int y = 0; y < patch.v; ++y) {
        for (int x = 0; x < patch.h; ++x) {
          sub.weights[static_cast<size_t>(y) * patch.h + x] =
              std::pow(std::abs(d_hat(y, x) * wv[y] * wh[x]), params.r);
        }
      }
      subs_.push_back(std::move(sub));
    }
  }
}

double TransitionModel::pooled_k(int sub, double eccentricity_deg) const {
  std::lock_guard<std::mutex> lock(*cache_mutex_);
  auto it = std::find_if(k_cache_.begin(), k_cache_.end(), [&](const auto& c) {
    return c.first == eccentricity_deg;
  });
  if (it == k_cache_.end()) {
    const SensitivityGrid grid(axes_, params_);
    std::vector<double> sens(grid.size());
    grid.fill(eccentricity_deg, sens);
    const size_t frame = patch_.frame_size();
    for (double& v : sens) v = std::pow(v, params_.r);
    std::vector<double> ks;
    for (const Sub& s : subs_) {
      double sum = 0.0;
      for (int t = 1; t < patch_.t; ++t) {
        const double* row = sens.data() + t * frame;
        double acc = 0.0;
        for (size_t j = 0; j < frame; ++j) acc += s.weights[j] * row[j];
        sum += ramp_r_[t] * acc;
      }
      ks.push_back(std::pow(sum, 1.0 / params_.r));
    }
    k_cache_.emplace_back(eccentricity_deg, std::move(ks));
    it = std::prev(k_cache_.end());
  }
  return it->second[static_cast<size_t>(sub)];
}

double TransitionModel::sub_probability(int sub, double alpha_start,
                                        double delta_alpha,
                                        double eccentricity_deg) const {
  const Sub& s = subs_.at(static_cast<size_t>(sub));
  const double range = geom_.peak_luminance - geom_.black_luminance;
  const double dc =
      geom_.black_luminance +
      range * (s.source_dc + (alpha_start + 0.5 * delta_alpha) * s.diff_dc);
  const double c_m = std::abs(delta_alpha) * range *
                     pooled_k(sub, eccentricity_deg) /
                     std::max(dc, params_.l_min);
  return normalized_probability(psychometric(c_m, params_), params_);
}

double TransitionModel::probability(double alpha_start, double delta_alpha,
                                    double eccentricity_deg) const {
  double best = 0.0;
  for (int i = 0; i < sub_windows(); ++i) {
    best = std::max(best, sub_probability(i, alpha_start, delta_alpha,
                                          eccentricity_deg));
  }
  return best;
}

StepResult solve_step(const TransitionModel& model, double alpha_start,
                      double p_d, double eccentricity_deg) {
  if (!(p_d > 0.0 && p_d < 1.0)) {
    throw InputError("solve_step: p_d must be in (0,1)");
  }
  if (!(alpha_start >= 0.0 && alpha_start < 1.0)) {
    throw InputError("solve_step: alpha_start must be in [0,1)");
  }
  gsl_set_error_handler_off();
  const double hi = 1.0 - alpha_start;
  StepResult best;
  best.delta_alpha = hi;
  best.finishes = true;
  gsl_root_fsolver* solver = gsl_root_fsolver_alloc(gsl_root_fsolver_brent);
  for (int sub = 0; sub < model.sub_windows(); ++sub) {
    BrentInput in{&model, sub, alpha_start, p_d, eccentricity_deg};
    if (brent_fn(hi, &in) <= 0.0) continue;  // finishes within this window
    const double lo = std::min(kMinimalStep, hi);
    if (brent_fn(lo, &in) >= 0.0) {
      if (lo < best.delta_alpha) {
        best.delta_alpha = lo;
        best.finishes = false;
        best.minimal = true;
      }
      continue;
    }
    gsl_function fn{&brent_fn, &in};
    gsl_root_fsolver_set(solver, &fn, lo, hi);
    double root = 0.5 * (lo + hi);
    for (int iter = 0; iter < 200; ++iter) {
      if (gsl_root_fsolver_iterate(solver) != GSL_SUCCESS) break;
      root = gsl_root_fsolver_root(solver);
      const double a = gsl_root_fsolver_x_lower(solver);
      const double b = gsl_root_fsolver_x_upper(solver);
      if (gsl_root_test_interval(a, b, 1e-13, 1e-12) == GSL_SUCCESS) break;
    }
    if (std::abs(brent_fn(root, &in)) > 0.005) {
      warn("solve_step: Brent bracket did not reach the target probability");
    }
    if (root < best.delta_alpha) {
      best.delta_alpha = root;
      best.finishes = false;
      best.minimal = false;
    }
  }
  gsl_root_fsolver_free(solver);
  if (best.minimal) {
    warn("solve_step: even the minimal step exceeds the target probability");
  }
  best.probability =
      model.probability(alpha_start, best.delta_alpha, eccentricity_deg);
  return best;
}

nlohmann::json TransitionSchedule::to_json() const {
  nlohmann::json seq = nlohmann::json::array();
  for (size_t i = 0; i < eccentricities.size(); ++i) {
    seq.push_back({{"ecc_deg", eccentricities[i]},
                   {"alpha", alphas[i]},
                   {"flags", flags[i]}});
  }
  return {{"p_d", p_d},
          {"fps", fps},
          {"window_frames", window_frames},
          {"window_seconds", window_frames / fps},
          {"flag_legend", {"optimized", "finishing", "minimal_step"}},
          {"sequences", seq}};
}

TransitionSchedule TransitionSchedule::from_json(const nlohmann::json& j) {
  TransitionSchedule s;
  try {
    s.p_d = j.at("p_d").get<double>();
    s.fps = j.at("fps").get<double>();
    s.window_frames = j.at("window_frames").get<int>();
    for (const auto& q : j.at("sequences")) {
      s.eccentricities.push_back(q.at("ecc_deg").get<double>());
      s.alphas.push_back(q.at("alpha").get<std::vector<double>>());
      s.flags.push_back(q.value("flags", std::vector<int>{}));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("schedule: ") + e.what());
  }
  if (s.eccentricities.empty()) throw InputError("schedule: no sequences");
  for (size_t i = 0; i < s.alphas.size(); ++i) {
    const auto& a = s.alphas[i];
    if (a.size() < 2 || a.front() != 0.0 || a.back() != 1.0 ||
        !std::is_sorted(a.begin(), a.end())) {
      throw InputError("schedule: alpha sequences must rise from 0 to 1");
    }
    if (i > 0 && !(s.eccentricities[i] > s.eccentricities[i - 1])) {
      throw InputError("schedule: eccentricities must be increasing");
    }
  }
  return s;
}

TransitionSchedule build_schedule(const TransitionModel& model, double p_d,
                                  const std::vector<double>& eccentricities,
                                  const DisplayGeometry& geom, int workers) {
  if (eccentricities.empty()) {
    throw InputError("build_schedule: no eccentricities");
  }
  TransitionSchedule s;
  s.p_d = p_d;
  s.fps = geom.frame_rate;
  s.eccentricities = eccentricities;
  std::sort(s.eccentricities.begin(), s.eccentricities.end());
  s.eccentricities.erase(
      std::unique(s.eccentricities.begin(), s.eccentricities.end()),
      s.eccentricities.end());
  s.alphas.resize(s.eccentricities.size());
  s.flags.resize(s.eccentricities.size());
  parallel_for(s.eccentricities.size(), workers, [&](int, size_t i) {
    std::vector<double>& alphas = s.alphas[i];
    std::vector<int>& flags = s.flags[i];
    double alpha = 0.0;
    alphas.push_back(alpha);
    while (alpha < 1.0) {
      const StepResult r = solve_step(model, alpha, p_d, s.eccentricities[i]);
      alpha = r.finishes ? 1.0 : std::min(1.0, alpha + r.delta_alpha);
      alphas.push_back(alpha);
      flags.push_back(r.finishes ? 1 : (r.minimal ? 2 : 0));
    }
  });
  return s;
}

double adaptive_alpha(const TransitionSchedule& schedule, double e,
                      double progress) {
  const auto [lo, hi, w] = bracket(schedule, e);
  const double a = sequence_alpha(schedule.alphas[lo], progress);
  if (w == 0.0) return a;
  return (1.0 - w) * a + w * sequence_alpha(schedule.alphas[hi], progress);
}

double adaptive_windows(const TransitionSchedule& schedule, double e) {
  const auto [lo, hi, w] = bracket(schedule, e);
  return (1.0 - w) * schedule.windows(lo) + w * schedule.windows(hi);
}

AdaptiveTransition::AdaptiveTransition(const TransitionSchedule& schedule)
    : schedule_(schedule) {}

double AdaptiveTransition::step(double e) {
  if (done()) return alpha_;
  // Smallest progress whose alpha reaches the current state.
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 64; ++i) {
    const double mid = 0.5 * (lo + hi);
    (adaptive_alpha(schedule_, e, mid) >= alpha_ ? hi : lo) = mid;
  }
  const double frames =
      adaptive_windows(schedule_, e) * schedule_.window_frames;
  const double u = hi + 1.0 / std::max(frames, 1.0);
  alpha_ = u >= 1.0 ? 1.0 : std::max(alpha_, adaptive_alpha(schedule_, e, u));
  return alpha_;
}

std::vector<Image> render_transition(const Image& source, const Image& target,
                                     const TransitionSchedule& schedule,
                                     const GazeTrack& gaze, GazePoint position,
                                     const DisplayGeometry& geom,
                                     int max_frames) {
  check_pair(source, target);
  const GazePoint center{position.x + 0.5 * source.width,
                         position.y + 0.5 * source.height};
  AdaptiveTransition state(schedule);
  std::vector<Image> frames;
  for (int f = 0; f < max_frames; ++f) {
    frames.push_back(blend(source, target, state.alpha()));
    if (state.done()) break;
    state.step(eccentricity_deg(geom, gaze(f), center));
  }
  return frames;
}

}  // namespace tvis
