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

#include "tvis/model.h"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace tvis {
namespace {

constexpr double kCffMaxHz = 120.0;
constexpr double kCffScanStepHz = 0.5;
constexpr double kCffResolutionHz = 0.01;

void require_nonnegative(double v, const char* name) {
  if (!(v >= 0.0)) {
    throw InputError(std::string("params: ") + name + " must be >= 0");
  }
}

template <typename T>
void read_if(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

void SensitivityParams::validate() const {
  require_nonnegative(b1, "b1");
  require_nonnegative(b2, "b2");
  require_nonnegative(b3, "b3");
  require_nonnegative(b4, "b4");
  require_nonnegative(b6, "b6");
  require_nonnegative(b7, "b7");
  require_nonnegative(b8, "b8");
  if (!(r >= 1.0)) throw InputError("params: r must be >= 1");
  if (!(l_min > 0.0)) throw InputError("params: l_min must be > 0");
  if (!(p_g > 0.0 && p_g < 1.0)) throw InputError("params: p_g not in (0,1)");
  if (!(p_l >= 0.0 && p_l < 1.0)) throw InputError("params: p_l not in [0,1)");
  if (!(beta0 > 0.0) || !(beta1 > 0.0)) {
    throw InputError("params: beta0 and beta1 must be > 0");
  }
}

std::array<double, 10> SensitivityParams::shape_vector() const {
  return {b1, b2, b3, b4, b5[0], b5[1], b5[2], b6, b7, b8};
}

void SensitivityParams::set_shape_vector(const std::array<double, 10>& v) {
  b1 = v[0];
  b2 = v[1];
  b3 = v[2];
  b4 = v[3];
  b5 = {v[4], v[5], v[6]};
  b6 = v[7];
  b7 = v[8];
  b8 = v[9];
}

nlohmann::json SensitivityParams::to_json() const {
  return {{"a", a},       {"b1", b1},       {"b2", b2},   {"b3", b3},
          {"b4", b4},     {"b5", b5},       {"b6", b6},   {"b7", b7},
          {"b8", b8},     {"r", r},         {"l_min", l_min},
          {"p_g", p_g},   {"p_l", p_l},     {"beta0", beta0},
          {"beta1", beta1}};
}

SensitivityParams SensitivityParams::from_json(const nlohmann::json& j,
                                               const SensitivityParams& base) {
  if (!j.is_object()) throw InputError("params: expected a JSON object");
  SensitivityParams p = base;
  try {
    read_if(j, "a", p.a);
    read_if(j, "b1", p.b1);
    read_if(j, "b2", p.b2);
    read_if(j, "b3", p.b3);
    read_if(j, "b4", p.b4);
    read_if(j, "b5", p.b5);
    read_if(j, "b6", p.b6);
    read_if(j, "b7", p.b7);
    read_if(j, "b8", p.b8);
    read_if(j, "r", p.r);
    read_if(j, "l_min", p.l_min);
    read_if(j, "p_g", p.p_g);
    read_if(j, "p_l", p.p_l);
    read_if(j, "beta0", p.beta0);
    read_if(j, "beta1", p.beta1);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("params: ") + e.what());
  }
  p.validate();
  return p;
}

double power_transform(double x, double lambda1, double lambda2) {
  const double shifted = x + lambda2;
  if (!(shifted > 0.0)) {
    throw InputError("power_transform: x + lambda2 must be > 0");
  }
  if (lambda1 == 0.0) {
    return lambda2 == 1.0 ? std::log1p(x) : std::log(shifted);
  }
  return (std::pow(shifted, lambda1) - 1.0) / lambda1;
}

double inverse_power_transform(double y, double lambda1, double lambda2) {
  if (lambda1 == 0.0) {
    return lambda2 == 1.0 ? std::expm1(y) : std::exp(y) - lambda2;
  }
  return std::pow(lambda1 * y + 1.0, 1.0 / lambda1) - lambda2;
}

double pow_zero_safe(double x, double p) {
  if (x == 0.0) return p > 0.0 ? 0.0 : 1.0;
  return std::pow(x, p);
}

double s_delange(double ft_log, std::span<const double> a) {
  double acc = 0.0;
  for (size_t i = a.size(); i-- > 0;) acc = acc * ft_log + a[i];
  return acc;
}

double s_delange(double ft_log, const std::array<double, 4>& a) {
  return s_delange(ft_log, std::span<const double>(a));
}

double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double s_softplus(double ft_log, const SensitivityParams& params) {
  return softplus(s_delange(ft_log, params.a));
}

double q_exponent(double s, const SensitivityParams& params) {
  return params.b5[0] * s * s + params.b5[1] * s + params.b5[2];
}

double scale_t(double fh_log, double fv_log, double e_log,
               const SensitivityParams& params) {
  const double s = fh_log + fv_log;
  return params.b1 - params.b2 * pow_zero_safe(s, params.b3) -
         params.b4 * pow_zero_safe(e_log, q_exponent(s, params));
}

double shift_u(double ft_log, double fh_log, double fv_log, double e_log,
               const SensitivityParams& params) {
  return ft_log - params.b6 + params.b7 * (fh_log + fv_log) +
         params.b8 * e_log;
}

double log_sensitivity(const StimulusCoords& c,
                       const SensitivityParams& params) {
  const double ft = power_transform(c.f_t);
  const double fh = power_transform(c.f_h);
  const double fv = power_transform(c.f_v);
  const double e = power_transform(c.e);
  return scale_t(fh, fv, e, params) *
         s_softplus(shift_u(ft, fh, fv, e, params), params);
}

double linear_sensitivity(const StimulusCoords& c,
                          const SensitivityParams& params) {
  return std::max(0.0, std::expm1(log_sensitivity(c, params)));
}

double threshold_contrast(const StimulusCoords& c,
                          const SensitivityParams& params) {
  const double s = linear_sensitivity(c, params);
  return s > 0.0 ? 1.0 / s : std::numeric_limits<double>::infinity();
}

double psychometric(double c_m, const SensitivityParams& params) {
  if (!(c_m >= 0.0)) throw InputError("psychometric: C_M must be >= 0");
  const double detect = -std::expm1(-std::pow(c_m / params.beta0, params.beta1));
  return params.p_g + (1.0 - params.p_g) * (1.0 - params.p_l) * detect;
}

double normalized_probability(double psi, const SensitivityParams& params) {
  if (psi < params.p_g) {
    warn("probability " + std::to_string(psi) +
         " below the guess rate; clamped to 0");
    return 0.0;
  }
  return std::min(1.0, (psi - params.p_g) / (1.0 - params.p_g));
}

std::optional<double> critical_flicker_frequency(
    double f_h, double f_v, double e, double c_max,
    const SensitivityParams& params) {
  if (!(c_max > 0.0 && c_max <= 1.0)) {
    throw InputError("critical_flicker_frequency: C_max must be in (0,1]");
  }
  const double needed = 1.0 / c_max;
  auto visible = [&](double ft) {
    return linear_sensitivity({ft, f_h, f_v, e}, params) >= needed;
  };
  const int steps = static_cast<int>(std::lround(kCffMaxHz / kCffScanStepHz));
  int last = -1;
  for (int i = 0; i <= steps; ++i) {
    if (visible(i * kCffScanStepHz)) last = i;
  }
  if (last < 0) return std::nullopt;
  if (last == steps) return kCffMaxHz;
  double lo = last * kCffScanStepHz;
  double hi = lo + kCffScanStepHz;
  while (hi - lo > kCffResolutionHz) {
    const double mid = 0.5 * (lo + hi);
    (visible(mid) ? lo : hi) = mid;
  }
  return lo;
}

SensitivityGrid::SensitivityGrid(const FrequencyAxes& axes,
                                 const SensitivityParams& params)
    : params_(params), nt_(axes.t.size()) {
  ft_log_.reserve(nt_);
  softplus_t_.reserve(nt_);
  for (double ft : axes.t) {
    const double u = power_transform(ft);
    ft_log_.push_back(u);
    softplus_t_.push_back(s_softplus(u - params.b6, params));
  }
  const size_t ns = axes.h.size() * axes.v.size();
  s_.resize(static_cast<Eigen::Index>(ns));
  compressed_.resize(static_cast<Eigen::Index>(ns));
  q_.resize(static_cast<Eigen::Index>(ns));
  Eigen::Index j = 0;
  for (double fv : axes.v) {
    for (double fh : axes.h) {
      const double s = power_transform(fh) + power_transform(fv);
      s_[j] = s;
      compressed_[j] = params.b1 - params.b2 * pow_zero_safe(s, params.b3);
      q_[j] = q_exponent(s, params);
      ++j;
    }
  }
}

void SensitivityGrid::fill(double eccentricity_deg,
                           std::span<double> out) const {
  if (out.size() != size()) {
    throw InputError("SensitivityGrid::fill: output size mismatch");
  }
  using Eigen::ArrayXd;
  const double el = power_transform(eccentricity_deg);
  const Eigen::Index ns = s_.size();
  ArrayXd scale(ns);
  if (el > 0.0) {
    scale = params_.b4 * (q_ * std::log(el)).exp();
  } else {
    scale = (q_ > 0.0).select(ArrayXd::Zero(ns),
                              ArrayXd::Constant(ns, params_.b4));
  }
  scale = compressed_ - scale;

  const bool unshifted = params_.b7 == 0.0 && params_.b8 == 0.0;
  for (size_t t = 0; t < nt_; ++t) {
    Eigen::Map<ArrayXd> row(out.data() + t * static_cast<size_t>(ns), ns);
    if (unshifted) {
      row = (scale * softplus_t_[t]).expm1().max(0.0);
    } else {
      const ArrayXd u = (ft_log_[t] - params_.b6 + params_.b8 * el) +
                        params_.b7 * s_;
      ArrayXd poly = ArrayXd::Constant(ns, params_.a[3]);
      for (int i = 2; i >= 0; --i) poly = poly * u + params_.a[i];
      const ArrayXd sp = poly.max(0.0) + (-poly.abs()).exp().log1p();
      row = (scale * sp).expm1().max(0.0);
    }
  }
}

}  // namespace tvis
