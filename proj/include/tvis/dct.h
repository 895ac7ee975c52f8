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

// Spatio-temporal decomposition of luminance windows with the unnormalized
// DCT-I, y_k = x_0 + (-1)^k x_{N-1} + 2 sum_{n=1}^{N-2} x_n cos(pi k n/(N-1)),
// applied separably along t, v and h.
//
// Normalized amplitudes scale each raw coefficient by w_k / (2(N-1)) per
// axis, with w_k = 1 at k in {0, N-1} and 2 elsewhere. A cosine product of
// amplitude A cd/m^2 then reads back as exactly A at its index, and the
// all-zero index holds the (trapezoidal) mean luminance.

#ifndef TVIS_DCT_H_
#define TVIS_DCT_H_

#include <array>
#include <memory>
#include <span>
#include <vector>

#include "tvis/common.h"

namespace tvis {

// Luminance window in cd/m^2 with its position in the source video.
struct PatchVolume {
  Volume volume;
  int origin_frame = 0;
  int origin_x = 0;
  int origin_y = 0;

  const PatchDims& dims() const { return volume.dims; }
};

// Normalized DCT-I amplitudes; delta_l at (0,0,0) is the DC luminance.
struct SpectrumPatch {
  Volume delta_l;

  double dc_luminance() const { return delta_l.values.front(); }
  const PatchDims& dims() const { return delta_l.dims; }
};

// 1-D transform. Throws InputError when x.size() < 2.
std::vector<double> dct1_forward(std::span<const double> x);

// Raw (unnormalized) 3-D DCT-I coefficients.
Volume dct3_separable(const PatchVolume& patch);
// Same transform, with the separable passes run one axis at a time in the
// given order (0 = t, 1 = v, 2 = h). Used to check axis-order independence.
Volume dct3_separable(const Volume& values, const std::array<int, 3>& order);

SpectrumPatch normalize_amplitudes(const Volume& raw);
// Per-index factor w_k / (2(N-1)) along one axis.
std::vector<double> amplitude_weights(int n);

// C(k) = delta_l(k) / max(dc, l_min). Throws InputError when l_min <= 0.
Volume weber_contrast(const SpectrumPatch& spectrum, double l_min);

PatchVolume dct3_inverse(const SpectrumPatch& spectrum);

// Separable DCT-I for one window size, computed as three dense matrix
// products (one per axis). Immutable; execute() may run concurrently with
// caller-owned buffers.
class Dct3Plan {
 public:
  explicit Dct3Plan(PatchDims dims);

  const PatchDims& dims() const { return dims_; }

  // Raw DCT-I of `in` into `out`, using `scratch`; all three hold
  // dims().size() values and must not alias.
  void execute(const double* in, double* scratch, double* out) const;

 private:
  PatchDims dims_;
  std::vector<double> mt_, mv_, mh_;  // row-major N x N transform matrices
};

// Row-major N x N matrix M with y = M x equal to the DCT-I of x.
std::vector<double> dct1_matrix(int n);

// Shared plan per window size, created on first use.
std::shared_ptr<const Dct3Plan> shared_plan(const PatchDims& dims);

}  // namespace tvis

#endif  // TVIS_DCT_H_
