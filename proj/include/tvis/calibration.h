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


// Refitting the sensitivity model: the De Lange polynomial, the ten shape
// parameters against threshold measurements, the psychometric function
// against 2AFC detection counts, and k-fold cross-validation.
//
// Shape fits compare log sensitivities, ln(1 + 1/threshold), between model
// and data. In pooled mode the model threshold of a record is the contrast at
// which the windowed grating it describes pools to C_M = 1; in nominal mode
// it is the point threshold at the grating's nominal frequency.

#ifndef TVIS_CALIBRATION_H_
#define TVIS_CALIBRATION_H_

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "tvis/geometry.h"
#include "tvis/model.h"
#include "tvis/stimulus.h"

namespace tvis {

inline constexpr double kSaturatedThreshold = 0.49;

struct ThresholdRecord {
  double f_h = 0.0;  // cpd
  double f_v = 0.0;  // cpd
  double f_t = 0.0;  // Hz
  double e = 0.0;    // degrees
  double threshold = 0.0;

  bool saturated() const { return threshold >= kSaturatedThreshold; }
  bool operator==(const ThresholdRecord&) const = default;
};

struct DetectionRecord {
  std::string id;
  double c_jnd = 0.0;
  int trials = 0;
  int correct = 0;
};

// Header: f_h_cpd,f_v_cpd,f_t_hz,ecc_deg,threshold
std::vector<ThresholdRecord> read_threshold_csv(const std::string& path);
void write_threshold_csv(const std::string& path,
                         std::span<const ThresholdRecord> records);
// Header: id,c_jnd,trials,correct
std::vector<DetectionRecord> read_detection_csv(const std::string& path);

// ---------------------------------------------------------------------------
// De Lange polynomial.

struct DeLangeSample {
  double f_t = 0.0;          // Hz
  double sensitivity = 0.0;  // 1 / threshold contrast
};

struct DeLangeFit {
  std::vector<double> a;  // a_0 .. a_n
  double r2 = 0.0;
  // Copies a into a 4-coefficient array; throws unless degree == 3.
  std::array<double, 4> cubic() const;
};

// Least squares of ln(1 + S) on powers of ln(1 + f_t). Throws InputError
// with fewer than degree + 2 samples or a rank-deficient design.
DeLangeFit fit_delange(std::span<const DeLangeSample> samples, int degree);

// ---------------------------------------------------------------------------
// Shape parameters.

enum class ThresholdModel { kPooled, kNominal };
enum class SaturatedPolicy { kExclude, kCensor, kInclude };

// Predicts ln(1 + 1/threshold) for a fixed set of records.
class ThresholdPredictor {
 public:
  ThresholdPredictor(std::vector<ThresholdRecord> records, ThresholdModel mode,
                     const DisplayGeometry& geom,
                     const GratingSpec& stimulus_template, double r,
                     double l_min);

  size_t size() const { return records_.size(); }
  const std::vector<ThresholdRecord>& records() const { return records_; }
  void predict(const SensitivityParams& params, std::span<double> out) const;
  std::vector<double> thresholds(const SensitivityParams& params) const;

 private:
  struct Component {
    uint32_t index;  // into the reduced sensitivity grid
    double weight;   // |C|^r at unit grating contrast
  };
  std::vector<ThresholdRecord> records_;
  ThresholdModel mode_;
  double r_;
  size_t grid_size_ = 0;
  FrequencyAxes axes_;                   // reduced to the k_t rows in use
  std::vector<double> eccentricities_;   // distinct values
  std::vector<size_t> ecc_of_record_;
  std::vector<std::vector<Component>> components_;
};

struct ShapeFitOptions {
  ThresholdModel mode = ThresholdModel::kPooled;
  SaturatedPolicy saturated = SaturatedPolicy::kExclude;
  double r = 1.7;  // fixed Minkowski exponent
  int restarts = 4;
  uint64_t seed = 1;
  int max_iterations = 200;
  GratingSpec stimulus;  // window and background of the measured gratings
};

struct ShapeFit {
  SensitivityParams params;
  double loss = 0.0;  // mean squared log-sensitivity error
  double r2 = 0.0;
  std::optional<double> adjusted_r2;  // k = 19; absent when n <= 20
  int n_records = 0;
  int starts_converged = 0;
  nlohmann::json to_json() const;
};

// Raised when no start converges; carries the best parameters found.
class FitError : public std::runtime_error {
 public:
  FitError(const std::string& what, ShapeFit best)
      : std::runtime_error(what), best_(std::move(best)) {}
  const ShapeFit& best() const { return best_; }

 private:
  ShapeFit best_;
};

inline constexpr int kModelParameterCount = 19;
inline constexpr size_t kMinShapeRecords = 12;

// Box-constrained least squares over b1..b8 (b_i >= 0 except b5), keeping a,
// r and the psychometric parameters of `initial`. Start 0 is `initial`;
// further starts are seeded perturbations of it.
ShapeFit fit_shape_params(std::span<const ThresholdRecord> records,
                          const SensitivityParams& initial,
                          const DisplayGeometry& geom,
                          const ShapeFitOptions& options = {});

// Loss of fixed parameters on a record set (same residuals as the fit).
double shape_loss(std::span<const ThresholdRecord> records,
                  const SensitivityParams& params, const DisplayGeometry& geom,
                  const ShapeFitOptions& options = {});

// Records predicted by `params` on the experiment grid (9 spatial pairs from
// {0, 4.54, 9.06} cpd, f_t in {2.5, 5, 10, 20, 30, 60} Hz, e in {10, 25,
// 40} deg). Thresholds above 0.5 are clipped to 0.5 (saturated).
std::vector<ThresholdRecord> synthesize_thresholds(
    const SensitivityParams& params, const DisplayGeometry& geom,
    ThresholdModel mode = ThresholdModel::kPooled,
    const GratingSpec& stimulus_template = {});

// ---------------------------------------------------------------------------
// Cross-validation.

struct CvFold {
  int fold = 0;
  double train_loss = 0.0;
  double test_loss = 0.0;
  SensitivityParams params;
  int n_train = 0;
  int n_test = 0;
};

struct CvReport {
  std::vector<CvFold> folds;
  // Mean and sample standard deviation over folds, columns as in table().
  std::vector<double> mean;
  std::vector<double> stdev;

  static const std::vector<std::string>& columns();
  std::vector<double> row(const CvFold& f) const;
  std::string table() const;
  nlohmann::json to_json() const;
};

// Seeded partition into k folds (records sorted canonically first, so the
// split does not depend on input order). Folds are fitted concurrently.
CvReport cross_validate(std::span<const ThresholdRecord> records, int k,
                        uint64_t seed, const SensitivityParams& initial,
                        const DisplayGeometry& geom,
                        const ShapeFitOptions& options = {},
                        int workers = 1);

// Fold index per record position, after canonical sorting.
std::vector<int> fold_assignment(size_t n, int k, uint64_t seed);

// ---------------------------------------------------------------------------
// Psychometric function.

struct PsychometricOptions {
  SensitivityParams start;
  bool fit_lapse = true;
  double max_lapse = 0.2;
  // Per-stimulus C_JND component magnitudes. When every record id has an
  // entry, C_M is re-pooled for each candidate r and r is estimated;
  // otherwise C_M is the record's nominal c_jnd and r stays at start.r.
  std::map<std::string, std::vector<double>> components;
};

struct PsychometricFit {
  double r = 0.0;
  double beta0 = 0.0;
  double beta1 = 0.0;
  double p_l = 0.0;
  double log_likelihood = 0.0;
  bool r_estimated = false;
  nlohmann::json to_json() const;
};

// Binomial maximum likelihood with p_g fixed at start.p_g. Throws InputError
// with fewer than 3 distinct c_jnd levels or degenerate responses.
PsychometricFit fit_psychometric(std::span<const DetectionRecord> records,
                                 const PsychometricOptions& options = {});

// Deterministic draw in [0, bound) from a 64-bit Mersenne Twister, identical
// across standard libraries.
uint64_t bounded_draw(uint64_t bound, std::mt19937_64& rng);

}  // namespace tvis

#endif  // TVIS_CALIBRATION_H_
