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


// Temporal-aliasing evaluation: motion compensation by backward warping
// along exported flow, global pooling of a probability map to one flicker
// score, and critical flicker frequency tables.

#ifndef TVIS_ALIASING_H_
#define TVIS_ALIASING_H_

#include <optional>
#include <string>
#include <vector>

#include "tvis/common.h"
#include "tvis/model.h"
#include "tvis/visibility.h"

namespace tvis {

// Forward flow from frame i to frame i + 1, pixels per frame.
struct FlowField {
  int width = 0;
  int height = 0;
  std::vector<float> u;  // dx
  std::vector<float> v;  // dy

  FlowField() = default;
  FlowField(int w, int h)
      : width(w),
        height(h),
        u(static_cast<size_t>(w) * h, 0.0f),
        v(static_cast<size_t>(w) * h, 0.0f) {}
};

// Middlebury .flo: "PIEH", int32 width, int32 height, then interleaved
// float32 (u, v), all little-endian.
FlowField read_flo(const std::string& path);
void write_flo(const std::string& path, const FlowField& flow);

// Loads every flow of a sequence from
//   a directory of .flo files (sorted by name),
//   a JSON manifest {"files": [...]} naming .flo files, or
//   a JSON manifest {"container": "file", "count": N} pointing at N .flo
//   records stored back to back.
// Relative paths in a manifest are resolved against its directory.
std::vector<FlowField> load_flows(const std::string& path);

// Within each window of `window` frames, backward-warps every frame to the
// window's first frame by composing the inter-frame flows (bilinear
// sampling, edge clamp). Needs frames.size() - 1 flows of matching size.
std::vector<Image> motion_compensate(const std::vector<Image>& frames,
                                     const std::vector<FlowField>& flows,
                                     int window = 25);

// (mean over cells of p_norm^beta)^(1/beta). Throws on an empty map.
double flicker_score(const VisibilityMap& map, double beta = 3.0);

struct CffTable {
  std::vector<double> eccentricities;     // columns, degrees
  std::vector<double> spatial_freqs;      // rows, cpd along f_h (f_v = 0)
  double c_max = 0.5;
  std::vector<std::vector<std::optional<double>>> hz;  // [row][col]

  // Header "f_cpd,e_<deg>..."; empty cells mean no visible frequency.
  std::string csv() const;
};

CffTable cff_table(const std::vector<double>& eccentricities,
                   const std::vector<double>& spatial_freqs, double c_max,
                   const SensitivityParams& params);

}  // namespace tvis

#endif  // TVIS_ALIASING_H_
