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


#include "tvis/calibration.h"

#include <ceres/ceres.h>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <set>
#include <tuple>

#include "tvis/io.h"
#include "tvis/visibility.h"

namespace tvis {
namespace {

constexpr std::array<double, 3> kExperimentSpatial{0.0, 4.54, 9.06};
constexpr std::array<double, 6> kExperimentTemporal{2.5, 5, 10, 20, 30, 60};
constexpr std::array<double, 3> kExperimentEcc{10.0, 25.0, 40.0};

// Bounds of the shape vector b1 b2 b3 b4 b51 b52 b53 b6 b7 b8.
constexpr std::array<double, 10> kLower{0, 0, 0, 0, -10, -10, -10, 0, 0, 0};
constexpr std::array<double, 10> kUpper{10, 10, 10, 10, 10, 10, 10,
                                        10, 10, 10};

double measured_log_sensitivity(const ThresholdRecord& r) {
  return std::log1p(1.0 / r.threshold);
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

void validate_record(const ThresholdRecord& r) {
  if (!(r.f_h >= 0.0 && r.f_v >= 0.0 && r.f_t >= 0.0 && r.e >= 0.0)) {
    throw InputError("threshold record: coordinates must be >= 0");
  }
  if (!(r.threshold > 0.0)) {
    throw InputError("threshold record: threshold must be > 0");
  }
}

// Records used by a fit and the residual rule applied to each.
struct FitSet {
  std::vector<ThresholdRecord> records;
  std::vector<bool> censored;
};

FitSet select_records(std::span<const ThresholdRecord> records,
                      SaturatedPolicy policy) {
  FitSet set;
  for (const ThresholdRecord& r : records) {
    validate_record(r);
    if (r.saturated() && policy == SaturatedPolicy::kExclude) continue;
    set.records.push_back(r);
    set.censored.push_back(r.saturated() && policy == SaturatedPolicy::kCensor);
  }
  return set;
}

// Censored records bound the sensitivity from above only.
double residual(double predicted, double measured, bool censored) {
  const double d = predicted - measured;
  return censored ? std::max(0.0, d) : d;
}

class ShapeResiduals {
 public:
  ShapeResiduals(const ThresholdPredictor* predictor,
                 const std::vector<double>* measured,
                 const std::vector<bool>* censored, SensitivityParams base)
      : predictor_(predictor),
        measured_(measured),
        censored_(censored),
        base_(base) {}

  bool operator()(double const* const* p, double* out) const {
    SensitivityParams params = base_;
    std::array<double, 10> v;
    std::copy(p[0], p[0] + 10, v.begin());
    params.set_shape_vector(v);
    std::vector<double> pred(measured_->size());
    predictor_->predict(params, pred);
    for (size_t i = 0; i < pred.size(); ++i) {
      out[i] = residual(pred[i], (*measured_)[i], (*censored_)[i]);
      if (!std::isfinite(out[i])) return false;
    }
    return true;
  }

 private:
  const ThresholdPredictor* predictor_;
  const std::vector<double>* measured_;
  const std::vector<bool>* censored_;
  SensitivityParams base_;
};

struct Evaluation {
  double loss = 0.0;
  double r2 = 0.0;
};

Evaluation evaluate(const ThresholdPredictor& predictor,
                    const std::vector<double>& measured,
                    const std::vector<bool>& censored,
                    const SensitivityParams& params) {
  std::vector<double> pred(measured.size());
  predictor.predict(params, pred);
  const double n = static_cast<double>(measured.size());
  const double mean = std::accumulate(measured.begin(), measured.end(), 0.0) / n;
  double ss_res = 0.0, ss_tot = 0.0;
  for (size_t i = 0; i < pred.size(); ++i) {
    const double d = residual(pred[i], measured[i], censored[i]);
    ss_res += d * d;
    ss_tot += (measured[i] - mean) * (measured[i] - mean);
  }
  Evaluation ev;
  ev.loss = ss_res / n;
  ev.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
  return ev;
}

std::tuple<double, double, double, double, double> record_key(
    const ThresholdRecord& r) {
  return {r.f_h, r.f_v, r.f_t, r.e, r.threshold};
}

std::vector<ThresholdRecord> canonical(std::span<const ThresholdRecord> in) {
  std::vector<ThresholdRecord> out(in.begin(), in.end());
  std::sort(out.begin(), out.end(),
            [](const ThresholdRecord& a, const ThresholdRecord& b) {
              return record_key(a) < record_key(b);
            });
  return out;
}

}  // namespace

uint64_t bounded_draw(uint64_t bound, std::mt19937_64& rng) {
  if (bound == 0) throw InputError("bounded_draw: bound must be > 0");
  // Rejection sampling removes modulo bias.
  const uint64_t limit = std::numeric_limits<uint64_t>::max() -
                         std::numeric_limits<uint64_t>::max() % bound;
  uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

// ---------------------------------------------------------------------------

std::vector<ThresholdRecord> read_threshold_csv(const std::string& path) {
  const auto rows =
      read_csv(path, {"f_h_cpd", "f_v_cpd", "f_t_hz", "ecc_deg", "threshold"});
  std::vector<ThresholdRecord> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    ThresholdRecord rec{parse_number(r[0], path), parse_number(r[1], path),
                        parse_number(r[2], path), parse_number(r[3], path),
                        parse_number(r[4], path)};
    validate_record(rec);
    out.push_back(rec);
  }
  return out;
}

void write_threshold_csv(const std::string& path,
                         std::span<const ThresholdRecord> records) {
  std::string text = "f_h_cpd,f_v_cpd,f_t_hz,ecc_deg,threshold\n";
  for (const auto& r : records) {
    text += fixed(r.f_h, 4) + "," + fixed(r.f_v, 4) + "," + fixed(r.f_t, 4) +
            "," + fixed(r.e, 4) + "," + fixed(r.threshold, 12) + "\n";
  }
  write_text(path, text);
}

std::vector<DetectionRecord> read_detection_csv(const std::string& path) {
  const auto rows = read_csv(path, {"id", "c_jnd", "trials", "correct"});
  std::vector<DetectionRecord> out;
  for (const auto& r : rows) {
    DetectionRecord d{r[0], parse_number(r[1], path), parse_int(r[2], path),
                      parse_int(r[3], path)};
    if (d.trials < 0 || d.correct < 0 || d.correct > d.trials) {
      throw InputError(path + ": need 0 <= correct <= trials");
    }
    if (!(d.c_jnd >= 0.0)) throw InputError(path + ": c_jnd must be >= 0");
    out.push_back(d);
  }
  return out;
}

// ---------------------------------------------------------------------------

std::array<double, 4> DeLangeFit::cubic() const {
  if (a.size() != 4) throw InputError("De Lange fit is not cubic");
  return {a[0], a[1], a[2], a[3]};
}

DeLangeFit fit_delange(std::span<const DeLangeSample> samples, int degree) {
  if (degree < 0) throw InputError("fit_delange: degree must be >= 0");
  const size_t need = static_cast<size_t>(degree) + 2;
  if (samples.size() < need) {
    throw InputError("fit_delange: need at least " + std::to_string(need) +
                     " samples");
  }
  const Eigen::Index n = static_cast<Eigen::Index>(samples.size());
  Eigen::MatrixXd x(n, degree + 1);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const DeLangeSample& s = samples[static_cast<size_t>(i)];
    if (!(s.f_t >= 0.0) || !(s.sensitivity >= 0.0)) {
      throw InputError("fit_delange: samples must be >= 0");
    }
    const double u = power_transform(s.f_t);
    double p = 1.0;
    for (int j = 0; j <= degree; ++j, p *= u) x(i, j) = p;
    y(i) = power_transform(s.sensitivity);
  }
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() < degree + 1) {
    throw InputError("fit_delange: design matrix is rank deficient");
  }
  const Eigen::VectorXd coef = qr.solve(y);
  const Eigen::VectorXd res = y - x * coef;
  const double ss_res = res.squaredNorm();
  const double ss_tot = (y.array() - y.mean()).square().sum();
  DeLangeFit fit;
  fit.a.assign(coef.data(), coef.data() + coef.size());
  // Constant data has no variance to explain; an exact fit counts as 1.
  fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot
                        : (ss_res <= 1e-24 * n ? 1.0 : 0.0);
  return fit;
}

// ---------------------------------------------------------------------------

ThresholdPredictor::ThresholdPredictor(std::vector<ThresholdRecord> records,
                                       ThresholdModel mode,
                                       const DisplayGeometry& geom,
                                       const GratingSpec& stimulus_template,
                                       double r, double l_min)
    : records_(std::move(records)), mode_(mode), r_(r) {
  if (!(r >= 1.0)) throw InputError("predictor: r must be >= 1");
  if (!(l_min > 0.0)) throw InputError("predictor: l_min must be > 0");
  for (const auto& rec : records_) validate_record(rec);
  for (const auto& rec : records_) {
    auto it = std::find(eccentricities_.begin(), eccentricities_.end(), rec.e);
    ecc_of_record_.push_back(static_cast<size_t>(it - eccentricities_.begin()));
    if (it == eccentricities_.end()) eccentricities_.push_back(rec.e);
  }
  if (mode_ == ThresholdModel::kNominal) return;

  // Unit-contrast spectra of every record's grating. The largest contrast
  // the background can display is used and divided out again.
  GratingSpec spec = stimulus_template;
  spec.contrast = std::min(1.0, 1.0 / spec.background - 1.0);
  if (!(spec.contrast > 0.0)) {
    throw InputError("predictor: background leaves no contrast headroom");
  }
  const PatchDims dims{spec.n_frames, spec.size_px, spec.size_px};
  const FrequencyAxes full = component_frequencies(dims, geom);
  const size_t frame = dims.frame_size();

  std::vector<std::vector<std::pair<size_t, double>>> raw(records_.size());
  std::set<int> rows;
  for (size_t i = 0; i < records_.size(); ++i) {
    spec.f_h = records_[i].f_h;
    spec.f_v = records_[i].f_v;
    spec.f_t = records_[i].f_t;
    const SpectrumPatch s =
        normalize_amplitudes(dct3_separable(generate_grating(spec, geom)));
    const double denom = std::max(s.dc_luminance(), l_min) * spec.contrast;
    double peak = 0.0;
    for (size_t k = frame; k < s.delta_l.values.size(); ++k) {
      peak = std::max(peak, std::abs(s.delta_l.values[k]));
    }
    for (size_t k = frame; k < s.delta_l.values.size(); ++k) {
      const double c = std::abs(s.delta_l.values[k]);
      // Exact zeros of the symmetric spectrum and rounding noise drop out.
      if (c > 1e-13 * peak) {
        raw[i].emplace_back(k, c / denom);
        rows.insert(static_cast<int>(k / frame));
      }
    }
    if (raw[i].empty()) {
      throw InputError("predictor: record grating has no temporal content");
    }
  }
  std::vector<int> row_of(static_cast<size_t>(dims.t), -1);
  axes_.h = full.h;
  axes_.v = full.v;
  for (int t : rows) {
    row_of[static_cast<size_t>(t)] = static_cast<int>(axes_.t.size());
    axes_.t.push_back(full.t[static_cast<size_t>(t)]);
  }
  grid_size_ = axes_.t.size() * frame;
  components_.resize(records_.size());
  for (size_t i = 0; i < records_.size(); ++i) {
    for (const auto& [k, c] : raw[i]) {
      const size_t idx =
          static_cast<size_t>(row_of[k / frame]) * frame + k % frame;
      components_[i].push_back(
          {static_cast<uint32_t>(idx), std::pow(c, r_)});
    }
  }
}

void ThresholdPredictor::predict(const SensitivityParams& params,
                                 std::span<double> out) const {
  if (out.size() != records_.size()) {
    throw InputError("predict: output size mismatch");
  }
  if (mode_ == ThresholdModel::kNominal) {
    for (size_t i = 0; i < records_.size(); ++i) {
      const auto& r = records_[i];
      out[i] = std::log1p(linear_sensitivity({r.f_t, r.f_h, r.f_v, r.e}, params));
    }
    return;
  }
  const SensitivityGrid grid(axes_, params);
  std::vector<std::vector<double>> sens(eccentricities_.size());
  for (size_t e = 0; e < eccentricities_.size(); ++e) {
    sens[e].resize(grid_size_);
    grid.fill(eccentricities_[e], sens[e]);
  }
  Eigen::ArrayXd s, w;
  for (size_t i = 0; i < records_.size(); ++i) {
    const auto& comps = components_[i];
    const auto& table = sens[ecc_of_record_[i]];
    s.resize(static_cast<Eigen::Index>(comps.size()));
    w.resize(s.size());
    for (size_t j = 0; j < comps.size(); ++j) {
      s[static_cast<Eigen::Index>(j)] = table[comps[j].index];
      w[static_cast<Eigen::Index>(j)] = comps[j].weight;
    }
    const double sum = (w * (s.log() * r_).exp()).sum();
    // C_M of the unit-contrast grating equals its pooled sensitivity.
    out[i] = std::log1p(std::pow(sum, 1.0 / r_));
  }
}

std::vector<double> ThresholdPredictor::thresholds(
    const SensitivityParams& params) const {
  std::vector<double> s(records_.size());
  predict(params, s);
  for (double& v : s) {
    const double lin = std::expm1(v);
    v = lin > 0.0 ? 1.0 / lin : std::numeric_limits<double>::infinity();
  }
  return s;
}

nlohmann::json ShapeFit::to_json() const {
  nlohmann::json j{{"params", params.to_json()},
                   {"loss", loss},
                   {"r2", r2},
                   {"n_records", n_records},
                   {"starts_converged", starts_converged}};
  j["adjusted_r2"] = adjusted_r2 ? nlohmann::json(*adjusted_r2) : nullptr;
  return j;
}

ShapeFit fit_shape_params(std::span<const ThresholdRecord> records,
                          const SensitivityParams& initial,
                          const DisplayGeometry& geom,
                          const ShapeFitOptions& options) {
  initial.validate();
  if (options.restarts < 1) throw InputError("fit: restarts must be >= 1");
  const FitSet set = select_records(records, options.saturated);
  std::set<std::tuple<double, double, double, double>> distinct;
  for (const auto& r : set.records) distinct.insert({r.f_h, r.f_v, r.f_t, r.e});
  if (distinct.size() < kMinShapeRecords) {
    throw InputError("fit_shape_params: need at least " +
                     std::to_string(kMinShapeRecords) +
                     " distinct records, got " +
                     std::to_string(distinct.size()));
  }
  SensitivityParams base = initial;
  base.r = options.r;
  const ThresholdPredictor predictor(set.records, options.mode, geom,
                                     options.stimulus, options.r, base.l_min);
  std::vector<double> measured;
  for (const auto& r : set.records) {
    measured.push_back(measured_log_sensitivity(r));
  }

  std::mt19937_64 rng(options.seed);
  ShapeFit best;
  best.loss = std::numeric_limits<double>::infinity();
  int converged = 0;
  for (int start = 0; start < options.restarts; ++start) {
    std::array<double, 10> x = base.shape_vector();
    if (start > 0) {
      for (size_t i = 0; i < x.size(); ++i) {
        const double u = uniform01(rng);
        x[i] = x[i] != 0.0 ? x[i] * (0.7 + 0.6 * u) : 0.05 * u;
        x[i] = std::clamp(x[i], kLower[i], kUpper[i]);
      }
    }
    ceres::Problem problem;
    auto* cost = new ceres::DynamicNumericDiffCostFunction<ShapeResiduals,
                                                           ceres::CENTRAL>(
        new ShapeResiduals(&predictor, &measured, &set.censored, base));
    cost->AddParameterBlock(10);
    cost->SetNumResiduals(static_cast<int>(measured.size()));
    problem.AddResidualBlock(cost, nullptr, x.data());
    for (int i = 0; i < 10; ++i) {
      problem.SetParameterLowerBound(x.data(), i, kLower[i]);
      problem.SetParameterUpperBound(x.data(), i, kUpper[i]);
    }
    ceres::Solver::Options so;
    so.linear_solver_type = ceres::DENSE_QR;
    so.max_num_iterations = options.max_iterations;
    so.function_tolerance = 1e-14;
    so.gradient_tolerance = 1e-14;
    so.parameter_tolerance = 1e-12;
    so.num_threads = 1;
    so.logging_type = ceres::SILENT;
    ceres::Solver::Summary summary;
    ceres::Solve(so, &problem, &summary);

    SensitivityParams fitted = base;
    fitted.set_shape_vector(x);
    const Evaluation ev = evaluate(predictor, measured, set.censored, fitted);
    if (summary.termination_type == ceres::CONVERGENCE) ++converged;
    if (ev.loss < best.loss) {
      best.params = fitted;
      best.loss = ev.loss;
      best.r2 = ev.r2;
    }
  }
  best.n_records = static_cast<int>(measured.size());
  best.starts_converged = converged;
  const double n = best.n_records;
  if (n > kModelParameterCount + 1) {
    best.adjusted_r2 =
        1.0 - (1.0 - best.r2) * (n - 1.0) / (n - kModelParameterCount - 1.0);
  }
  if (converged == 0) {
    throw FitError("fit_shape_params: no start converged", best);
  }
  return best;
}

double shape_loss(std::span<const ThresholdRecord> records,
                  const SensitivityParams& params, const DisplayGeometry& geom,
                  const ShapeFitOptions& options) {
  const FitSet set = select_records(records, options.saturated);
  if (set.records.empty()) throw InputError("shape_loss: no records");
  const ThresholdPredictor predictor(set.records, options.mode, geom,
                                     options.stimulus, options.r,
                                     params.l_min);
  std::vector<double> measured;
  for (const auto& r : set.records) {
    measured.push_back(measured_log_sensitivity(r));
  }
  SensitivityParams p = params;
  p.r = options.r;
  return evaluate(predictor, measured, set.censored, p).loss;
}

std::vector<ThresholdRecord> synthesize_thresholds(
    const SensitivityParams& params, const DisplayGeometry& geom,
    ThresholdModel mode, const GratingSpec& stimulus_template) {
  std::vector<ThresholdRecord> grid;
  for (double fh : kExperimentSpatial) {
    for (double fv : kExperimentSpatial) {
      for (double ft : kExperimentTemporal) {
        for (double e : kExperimentEcc) grid.push_back({fh, fv, ft, e, 1.0});
      }
    }
  }
  const ThresholdPredictor predictor(grid, mode, geom, stimulus_template,
                                     params.r, params.l_min);
  const std::vector<double> th = predictor.thresholds(params);
  for (size_t i = 0; i < grid.size(); ++i) {
    grid[i].threshold = std::min(0.5, th[i]);
  }
  return grid;
}

// ---------------------------------------------------------------------------

std::vector<int> fold_assignment(size_t n, int k, uint64_t seed) {
  if (k < 2) throw InputError("cross_validate: need at least 2 folds");
  if (n < static_cast<size_t>(k)) {
    throw InputError("cross_validate: fewer records than folds");
  }
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::mt19937_64 rng(seed);
  for (size_t i = n; i > 1; --i) {
    std::swap(order[i - 1], order[bounded_draw(i, rng)]);
  }
  std::vector<int> fold(n);
  for (size_t i = 0; i < n; ++i) fold[order[i]] = static_cast<int>(i % k);
  return fold;
}

const std::vector<std::string>& CvReport::columns() {
  static const std::vector<std::string> cols{
      "L_train", "L_test", "b1",  "b2", "b3", "b4",
      "b5_1",    "b5_2",   "b5_3", "b6", "b7", "b8"};
  return cols;
}

std::vector<double> CvReport::row(const CvFold& f) const {
  std::vector<double> r{f.train_loss, f.test_loss};
  for (double v : f.params.shape_vector()) r.push_back(v);
  return r;
}

std::string CvReport::table() const {
  // Losses span many decades, so they print in scientific notation.
  auto line = [](const std::string& label, const std::vector<double>& vals,
                 int decimals) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%-8s", label.c_str());
    std::string out = buf;
    for (size_t i = 0; i < vals.size(); ++i) {
      if (i < 2) {
        std::snprintf(buf, sizeof(buf), " %10.3e", vals[i]);
      } else {
        std::snprintf(buf, sizeof(buf), " %10s", fixed(vals[i], decimals).c_str());
      }
      out += buf;
    }
    return out + "\n";
  };
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%-8s", "CV-fold");
  std::string out = buf;
  for (const auto& c : columns()) {
    std::snprintf(buf, sizeof(buf), " %10s", c.c_str());
    out += buf;
  }
  out += "\n";
  for (const CvFold& f : folds) out += line(std::to_string(f.fold), row(f), 3);
  out += line("Mean", mean, 3);
  out += line("Stdev", stdev, 3);
  return out;
}

nlohmann::json CvReport::to_json() const {
  nlohmann::json j;
  j["columns"] = columns();
  j["folds"] = nlohmann::json::array();
  for (const CvFold& f : folds) {
    j["folds"].push_back({{"fold", f.fold},
                          {"n_train", f.n_train},
                          {"n_test", f.n_test},
                          {"values", row(f)},
                          {"params", f.params.to_json()}});
  }
  j["mean"] = mean;
  j["stdev"] = stdev;
  j["loss_note"] =
      "mean squared error of ln(1 + 1/threshold); not comparable to losses "
      "computed with a different loss definition";
  return j;
}

CvReport cross_validate(std::span<const ThresholdRecord> records, int k,
                        uint64_t seed, const SensitivityParams& initial,
                        const DisplayGeometry& geom,
                        const ShapeFitOptions& options, int workers) {
  const FitSet usable = select_records(records, options.saturated);
  const std::vector<ThresholdRecord> sorted = canonical(usable.records);
  const std::vector<int> fold = fold_assignment(sorted.size(), k, seed);
  CvReport report;
  report.folds.resize(static_cast<size_t>(k));
  parallel_for(static_cast<size_t>(k), std::max(1, workers),
               [&](int, size_t f) {
                 std::vector<ThresholdRecord> train, test;
                 for (size_t i = 0; i < sorted.size(); ++i) {
                   (fold[i] == static_cast<int>(f) ? test : train)
                       .push_back(sorted[i]);
                 }
                 const ShapeFit fit =
                     fit_shape_params(train, initial, geom, options);
                 CvFold& out = report.folds[f];
                 out.fold = static_cast<int>(f) + 1;
                 out.train_loss = fit.loss;
                 out.test_loss = shape_loss(test, fit.params, geom, options);
                 out.params = fit.params;
                 out.n_train = static_cast<int>(train.size());
                 out.n_test = static_cast<int>(test.size());
               });
  const size_t cols = CvReport::columns().size();
  report.mean.assign(cols, 0.0);
  report.stdev.assign(cols, 0.0);
  for (const CvFold& f : report.folds) {
    const auto r = report.row(f);
    for (size_t c = 0; c < cols; ++c) report.mean[c] += r[c] / k;
  }
  for (const CvFold& f : report.folds) {
    const auto r = report.row(f);
    for (size_t c = 0; c < cols; ++c) {
      report.stdev[c] += std::pow(r[c] - report.mean[c], 2) / (k - 1);
    }
  }
  for (double& s : report.stdev) s = std::sqrt(s);
  return report;
}

// ---------------------------------------------------------------------------

namespace {

struct PsychometricProblem {
  const std::vector<DetectionRecord>* records;
  const std::vector<const std::vector<double>*>* components;
  const PsychometricOptions* options;
  bool fit_r;
};

struct PsychometricPoint {
  double r, beta0, beta1, p_l;
};

PsychometricPoint decode(const gsl_vector* u, const PsychometricProblem& pb) {
  PsychometricPoint p{pb.options->start.r, 0.0, 0.0, 0.0};
  size_t i = 0;
  if (pb.fit_r) p.r = 1.0 + std::exp(gsl_vector_get(u, i++));
  p.beta0 = std::exp(gsl_vector_get(u, i++));
  p.beta1 = std::exp(gsl_vector_get(u, i++));
  if (pb.options->fit_lapse) {
    const double z = gsl_vector_get(u, i++);
    p.p_l = pb.options->max_lapse / (1.0 + std::exp(-z));
  } else {
    p.p_l = pb.options->start.p_l;
  }
  return p;
}

double pool(const std::vector<double>& c, double r) {
  double s = 0.0;
  for (double v : c) s += std::pow(std::abs(v), r);
  return std::pow(s, 1.0 / r);
}

double log_likelihood(const PsychometricPoint& p,
                      const PsychometricProblem& pb) {
  SensitivityParams params = pb.options->start;
  params.beta0 = p.beta0;
  params.beta1 = p.beta1;
  params.p_l = p.p_l;
  double ll = 0.0;
  for (size_t i = 0; i < pb.records->size(); ++i) {
    const DetectionRecord& d = (*pb.records)[i];
    const double c_m =
        pb.fit_r ? pool(*(*pb.components)[i], p.r) : d.c_jnd;
    const double psi = std::clamp(psychometric(c_m, params), 1e-12, 1 - 1e-12);
    ll += d.correct * std::log(psi) + (d.trials - d.correct) * std::log1p(-psi);
  }
  return ll;
}

double negative_ll(const gsl_vector* u, void* data) {
  const auto& pb = *static_cast<const PsychometricProblem*>(data);
  const double ll = log_likelihood(decode(u, pb), pb);
  return std::isfinite(ll) ? -ll : std::numeric_limits<double>::max();
}

}  // namespace

nlohmann::json PsychometricFit::to_json() const {
  return {{"r", r},
          {"beta0", beta0},
          {"beta1", beta1},
          {"p_l", p_l},
          {"log_likelihood", log_likelihood},
          {"r_estimated", r_estimated}};
}

PsychometricFit fit_psychometric(std::span<const DetectionRecord> records,
                                 const PsychometricOptions& options) {
  gsl_set_error_handler_off();
  options.start.validate();
  if (!(options.max_lapse > 0.0 && options.max_lapse < 1.0)) {
    throw InputError("fit_psychometric: max_lapse must be in (0,1)");
  }
  std::vector<DetectionRecord> recs;
  std::set<double> levels;
  long trials = 0, correct = 0;
  bool above_chance = false;
  for (const DetectionRecord& d : records) {
    if (d.trials <= 0) continue;
    if (d.correct < 0 || d.correct > d.trials || !(d.c_jnd >= 0.0)) {
      throw InputError("fit_psychometric: invalid record " + d.id);
    }
    recs.push_back(d);
    levels.insert(d.c_jnd);
    trials += d.trials;
    correct += d.correct;
    if (static_cast<double>(d.correct) / d.trials > options.start.p_g) {
      above_chance = true;
    }
  }
  if (levels.size() < 3) {
    throw InputError("fit_psychometric: need at least 3 distinct C_JND levels");
  }
  if (correct == trials) {
    throw InputError("fit_psychometric: every trial correct, slope undefined");
  }
  if (!above_chance) {
    throw InputError("fit_psychometric: responses are at chance everywhere");
  }

  std::vector<const std::vector<double>*> comps;
  bool fit_r = !options.components.empty();
  for (const DetectionRecord& d : recs) {
    auto it = options.components.find(d.id);
    if (it == options.components.end()) {
      if (fit_r) {
        throw InputError("fit_psychometric: no components for id " + d.id);
      }
      comps.push_back(nullptr);
    } else {
      comps.push_back(&it->second);
    }
  }
  PsychometricProblem pb{&recs, &comps, &options, fit_r};

  const size_t dim = 2 + (fit_r ? 1 : 0) + (options.fit_lapse ? 1 : 0);
  gsl_vector* x = gsl_vector_alloc(dim);
  gsl_vector* step = gsl_vector_alloc(dim);
  {
    size_t i = 0;
    if (fit_r) gsl_vector_set(x, i++, std::log(std::max(options.start.r - 1.0, 1e-3)));
    gsl_vector_set(x, i++, std::log(options.start.beta0));
    gsl_vector_set(x, i++, std::log(options.start.beta1));
    if (options.fit_lapse) {
      const double q = std::clamp(options.start.p_l / options.max_lapse, 0.05, 0.95);
      gsl_vector_set(x, i++, std::log(q / (1.0 - q)));
    }
  }
  gsl_multimin_function fn{&negative_ll, dim, &pb};
  gsl_multimin_fminimizer* s =
      gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, dim);
  // Two passes: a restart from the first optimum guards against the simplex
  // collapsing early.
  for (int pass = 0; pass < 2; ++pass) {
    gsl_vector_set_all(step, 0.3);
    gsl_multimin_fminimizer_set(s, &fn, x, step);
    for (int iter = 0; iter < 5000; ++iter) {
      if (gsl_multimin_fminimizer_iterate(s) != GSL_SUCCESS) break;
      if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), 1e-9) ==
          GSL_SUCCESS) {
        break;
      }
    }
    gsl_vector_memcpy(x, gsl_multimin_fminimizer_x(s));
  }
  const PsychometricPoint p = decode(x, pb);
  PsychometricFit fit{p.r, p.beta0, p.beta1, p.p_l, log_likelihood(p, pb),
                      fit_r};
  gsl_multimin_fminimizer_free(s);
  gsl_vector_free(step);
  gsl_vector_free(x);
  return fit;
}

}  // namespace tvis
