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

#include "tvis/dct.h"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

namespace tvis {
namespace {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixView = Eigen::Map<RowMatrix>;
using ConstMatrixView = Eigen::Map<const RowMatrix>;

void check_dims(const PatchDims& d) {
  if (d.t < 2 || d.h < 2 || d.v < 2) {
    throw InputError("DCT-I needs at least 2 samples along every axis");
  }
}

// Applies a 1-D transform along `axis` (0 = t, 1 = v, 2 = h) in place.
void transform_axis(std::vector<double>& data, const PatchDims& d, int axis) {
  const int n = axis == 0 ? d.t : (axis == 1 ? d.v : d.h);
  const size_t stride = axis == 0   ? d.frame_size()
                        : axis == 1 ? static_cast<size_t>(d.h)
                                    : 1;
  std::vector<double> line(static_cast<size_t>(n));
  for (int t = 0; t < (axis == 0 ? 1 : d.t); ++t) {
    for (int y = 0; y < (axis == 1 ? 1 : d.v); ++y) {
      for (int x = 0; x < (axis == 2 ? 1 : d.h); ++x) {
        const size_t base = (static_cast<size_t>(t) * d.v + y) * d.h + x;
        for (int k = 0; k < n; ++k) line[k] = data[base + k * stride];
        const std::vector<double> y_k = dct1_forward(line);
        for (int k = 0; k < n; ++k) data[base + k * stride] = y_k[k];
      }
    }
  }
}

}  // namespace

std::vector<double> dct1_matrix(int n) {
  if (n < 2) throw InputError("DCT-I needs at least 2 samples");
  std::vector<double> m(static_cast<size_t>(n) * n);
  for (int k = 0; k < n; ++k) {
    double* row = m.data() + static_cast<size_t>(k) * n;
    row[0] = 1.0;
    row[n - 1] = (k % 2 == 0) ? 1.0 : -1.0;
    for (int j = 1; j < n - 1; ++j) {
      // Reduce k*j modulo the period 2(N-1) so the cosine argument stays
      // small and exact symmetries survive rounding.
      const long phase = (static_cast<long>(k) * j) % (2L * (n - 1));
      row[j] = 2.0 * std::cos(std::numbers::pi * static_cast<double>(phase) /
                              (n - 1));
    }
  }
  return m;
}

Dct3Plan::Dct3Plan(PatchDims dims)
    : dims_(dims),
      mt_(dct1_matrix(dims.t)),
      mv_(dct1_matrix(dims.v)),
      mh_(dct1_matrix(dims.h)) {}

void Dct3Plan::execute(const double* in, double* scratch, double* out) const {
  const int nt = dims_.t;
  const int nv = dims_.v;
  const int nh = dims_.h;
  const ConstMatrixView mt(mt_.data(), nt, nt);
  const ConstMatrixView mv(mv_.data(), nv, nv);
  const ConstMatrixView mh(mh_.data(), nh, nh);
  // Along h: every (t, v) row times Mh^T.
  MatrixView(out, nt * nv, nh).noalias() =
      ConstMatrixView(in, nt * nv, nh) * mh.transpose();
  // Along v: Mv times each frame.
  const size_t frame = dims_.frame_size();
  for (int t = 0; t < nt; ++t) {
    MatrixView(scratch + t * frame, nv, nh).noalias() =
        mv * ConstMatrixView(out + t * frame, nv, nh);
  }
  // Along t: Mt times the (t, v*h) matrix.
  MatrixView(out, nt, nv * nh).noalias() =
      mt * ConstMatrixView(scratch, nt, nv * nh);
}

std::shared_ptr<const Dct3Plan> shared_plan(const PatchDims& dims) {
  check_dims(dims);
  static std::mutex cache_mutex;
  static std::map<std::tuple<int, int, int>, std::shared_ptr<const Dct3Plan>>
      cache;
  std::lock_guard<std::mutex> lock(cache_mutex);
  auto& slot = cache[{dims.t, dims.h, dims.v}];
  if (!slot) slot = std::make_shared<const Dct3Plan>(dims);
  return slot;
}

std::vector<double> dct1_forward(std::span<const double> x) {
  const int n = static_cast<int>(x.size());
  if (n < 2) throw InputError("dct1_forward: need at least 2 samples");
  const std::vector<double> m = dct1_matrix(n);
  std::vector<double> y(x.size());
  Eigen::Map<Eigen::VectorXd>(y.data(), n).noalias() =
      ConstMatrixView(m.data(), n, n) *
      Eigen::Map<const Eigen::VectorXd>(x.data(), n);
  return y;
}

Volume dct3_separable(const PatchVolume& patch) {
  const PatchDims& d = patch.dims();
  check_dims(d);
  if (patch.volume.values.size() != d.size()) {
    throw InputError("dct3_separable: value count does not match dims");
  }
  std::vector<double> scratch(d.size());
  Volume raw(d);
  shared_plan(d)->execute(patch.volume.values.data(), scratch.data(),
                          raw.values.data());
  return raw;
}

Volume dct3_separable(const Volume& values, const std::array<int, 3>& order) {
  check_dims(values.dims);
  Volume raw = values;
  for (int axis : order) transform_axis(raw.values, raw.dims, axis);
  return raw;
}

std::vector<double> amplitude_weights(int n) {
  std::vector<double> w(static_cast<size_t>(n), 2.0 / (2.0 * (n - 1)));
  w.front() = w.back() = 1.0 / (2.0 * (n - 1));
  return w;
}

SpectrumPatch normalize_amplitudes(const Volume& raw) {
  const PatchDims& d = raw.dims;
  check_dims(d);
  const auto wt = amplitude_weights(d.t);
  const auto wv = amplitude_weights(d.v);
  const auto wh = amplitude_weights(d.h);
  SpectrumPatch spectrum{Volume(d)};
  for (int t = 0; t < d.t; ++t) {
    for (int y = 0; y < d.v; ++y) {
      const double w = wt[t] * wv[y];
      for (int x = 0; x < d.h; ++x) {
        spectrum.delta_l.at(t, y, x) = raw.at(t, y, x) * w * wh[x];
      }
    }
  }
  return spectrum;
}

Volume weber_contrast(const SpectrumPatch& spectrum, double l_min) {
  if (!(l_min > 0.0)) throw InputError("weber_contrast: L_min must be > 0");
  const double denom = std::max(spectrum.dc_luminance(), l_min);
  Volume c = spectrum.delta_l;
  for (double& v : c.values) v /= denom;
  return c;
}

PatchVolume dct3_inverse(const SpectrumPatch& spectrum) {
  const PatchDims& d = spectrum.dims();
  check_dims(d);
  // Interior coefficients carry a factor 2 in the forward sum; halving them
  // turns the DCT-I into its own inverse on normalized amplitudes.
  auto half = [](int n) {
    std::vector<double> f(static_cast<size_t>(n), 0.5);
    f.front() = f.back() = 1.0;
    return f;
  };
  const auto ft = half(d.t);
  const auto fv = half(d.v);
  const auto fh = half(d.h);
  std::vector<double> in(d.size());
  size_t i = 0;
  for (int t = 0; t < d.t; ++t) {
    for (int y = 0; y < d.v; ++y) {
      for (int x = 0; x < d.h; ++x, ++i) {
        in[i] = spectrum.delta_l.values[i] * ft[t] * fv[y] * fh[x];
      }
    }
  }
  std::vector<double> scratch(d.size());
  PatchVolume patch{Volume(d)};
  shared_plan(d)->execute(in.data(), scratch.data(),
                          patch.volume.values.data());
  return patch;
}

}  // namespace tvis
