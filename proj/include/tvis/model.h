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

// Eccentricity-dependent spatio-temporal contrast sensitivity.
//
// All frequencies and the eccentricity enter the model through the power
// transform ln(x + 1). The foveal temporal curve is a cubic polynomial in the
// transformed temporal frequency, kept positive with a softplus. Spatial
// frequency and eccentricity then scale the curve vertically (T) and shift it
// along the temporal axis (U):
//
//   S = T(s, e) * softplus(poly(U(f_t, s, e)))
//   T = b1 - b2 s^b3 - b4 e^q(s),   q(s) = b51 s^2 + b52 s + b53
//   U = f_t - b6 + b7 s + b8 e
//
// where s is the sum of the transformed horizontal and vertical spatial
// frequencies. S is a log-domain sensitivity; exp(S) - 1 is the linear
// sensitivity (reciprocal of the threshold Weber contrast).

#ifndef TVIS_MODEL_H_
#define TVIS_MODEL_H_

#include <array>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"
#include "tvis/geometry.h"

namespace tvis {

struct SensitivityParams {
  std::array<double, 4> a{3.2714, 0.3830, 0.7669, -0.2555};
  double b1 = 1.0051;
  double b2 = 0.1830;
  double b3 = 0.9517;
  double b4 = 0.0173;
  std::array<double, 3> b5{-0.1375, 0.3753, 2.3855};
  double b6 = 0.0;
  double b7 = 0.0;
  double b8 = 0.0;
  double r = 1.9932;     // Minkowski exponent over DCT components
  double l_min = 50.0;   // cd/m^2, floor of the Weber denominator
  double p_g = 0.5;      // guess rate (2AFC)
  double p_l = 0.0;      // lapse rate
  double beta0 = 1.7934;
  double beta1 = 1.5;

  static SensitivityParams defaults() { return {}; }

  // Throws InputError on b_i < 0 (i != 5), r < 1, l_min <= 0, p_g outside
  // (0,1), p_l outside [0,1), or non-positive beta0/beta1.
  void validate() const;

  // The ten shape parameters fitted to threshold data, in the order
  // b1 b2 b3 b4 b51 b52 b53 b6 b7 b8.
  std::array<double, 10> shape_vector() const;
  void set_shape_vector(const std::array<double, 10>& v);

  nlohmann::json to_json() const;
  // Starts from `base` and overrides every key present in `j`.
  static SensitivityParams from_json(const nlohmann::json& j,
                                     const SensitivityParams& base);
  static SensitivityParams from_json(const nlohmann::json& j) {
    return from_json(j, SensitivityParams());
  }
};

// Physical stimulus coordinates: f_t in Hz, f_h/f_v in cpd, e in degrees.
struct StimulusCoords {
  double f_t = 0.0;
  double f_h = 0.0;
  double f_v = 0.0;
  double e = 0.0;
};

// Two-parameter Box-Cox transform; the model always uses (0, 1).
double power_transform(double x, double lambda1 = 0.0, double lambda2 = 1.0);
double inverse_power_transform(double y, double lambda1 = 0.0,
                               double lambda2 = 1.0);

// x^p with 0^p = 0 for p > 0 and 0^p = 1 for p <= 0.
double pow_zero_safe(double x, double p);

// Log-sensitivity polynomial of the foveal uniform-field temporal curve.
double s_delange(double ft_log, const std::array<double, 4>& a);
double s_delange(double ft_log, std::span<const double> a);
double softplus(double x);
double s_softplus(double ft_log, const SensitivityParams& params);

double q_exponent(double spatial_log_sum, const SensitivityParams& params);
double scale_t(double fh_log, double fv_log, double e_log,
               const SensitivityParams& params);
double shift_u(double ft_log, double fh_log, double fv_log, double e_log,
               const SensitivityParams& params);

double log_sensitivity(const StimulusCoords& c,
                       const SensitivityParams& params);
// max(0, exp(S) - 1).
double linear_sensitivity(const StimulusCoords& c,
                          const SensitivityParams& params);
// 1 / linear_sensitivity; +infinity where the sensitivity is zero.
double threshold_contrast(const StimulusCoords& c,
                          const SensitivityParams& params);

// Weibull psychometric function for a 2AFC task:
// p_g + (1 - p_g)(1 - p_l)(1 - exp(-(c_m / beta0)^beta1)).
double psychometric(double c_m, const SensitivityParams& params);
// (psi - p_g) / (1 - p_g), clamped to [0, 1].
double normalized_probability(double psi, const SensitivityParams& params);

// Highest temporal frequency in [0, 120] Hz whose threshold is at most
// c_max, resolved to 0.01 Hz. Empty when no frequency qualifies.
std::optional<double> critical_flicker_frequency(
    double f_h, double f_v, double e, double c_max,
    const SensitivityParams& params);

// Linear sensitivity evaluated over a full DCT index grid for one
// eccentricity. The eccentricity-independent factors are cached at
// construction; fill() is the hot loop of the patch pipeline.
class SensitivityGrid {
 public:
  SensitivityGrid(const FrequencyAxes& axes, const SensitivityParams& params);

  // Writes linear sensitivities in Volume order (t, v, h).
  void fill(double eccentricity_deg, std::span<double> out) const;
  size_t size() const { return nt_ * static_cast<size_t>(s_.size()); }

 private:
  SensitivityParams params_;
  size_t nt_;
  std::vector<double> ft_log_;
  std::vector<double> softplus_t_;  // valid when b7 == b8 == 0
  // Per spatial index (v, h):
  Eigen::ArrayXd s_;           // transformed f_h + transformed f_v
  Eigen::ArrayXd compressed_;  // b1 - b2 * s^b3
  Eigen::ArrayXd q_;           // exponent of the eccentricity term
};

}  // namespace tvis

#endif  // TVIS_MODEL_H_
