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

// Shared value types: patch dimensions, dense volumes and single-channel
// images, plus the warning sink used by operations that clamp their inputs.

#ifndef TVIS_COMMON_H_
#define TVIS_COMMON_H_

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tvis {

// Raised for malformed inputs (bad dimensions, out-of-domain arguments).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Extent of a spatio-temporal window: frames x columns x rows.
struct PatchDims {
  int t = 25;
  int h = 71;
  int v = 71;

  size_t size() const {
    return static_cast<size_t>(t) * static_cast<size_t>(h) *
           static_cast<size_t>(v);
  }
  size_t frame_size() const {
    return static_cast<size_t>(h) * static_cast<size_t>(v);
  }
  bool operator==(const PatchDims&) const = default;
};

// The window size the model was calibrated for.
inline constexpr PatchDims kCalibratedPatch{25, 71, 71};

// Parses "25x71x71" (frames x width x height).
PatchDims parse_patch_dims(std::string_view text);
std::string format_patch_dims(const PatchDims& dims);

// Dense t-major volume; element (t, y, x) lives at (t * v + y) * h + x.
struct Volume {
  PatchDims dims;
  std::vector<double> values;

  Volume() = default;
  explicit Volume(PatchDims d, double fill = 0.0)
      : dims(d), values(d.size(), fill) {}

  size_t index(int t, int y, int x) const {
    return (static_cast<size_t>(t) * dims.v + static_cast<size_t>(y)) *
               dims.h +
           static_cast<size_t>(x);
  }
  double& at(int t, int y, int x) { return values[index(t, y, x)]; }
  double at(int t, int y, int x) const { return values[index(t, y, x)]; }
};

// Single-channel float image, row-major.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<float> pixels;

  Image() = default;
  Image(int w, int h, float fill = 0.0f)
      : width(w),
        height(h),
        pixels(static_cast<size_t>(w) * static_cast<size_t>(h), fill) {}

  float& at(int x, int y) {
    return pixels[static_cast<size_t>(y) * width + static_cast<size_t>(x)];
  }
  float at(int x, int y) const {
    return pixels[static_cast<size_t>(y) * width + static_cast<size_t>(x)];
  }
  bool same_shape(const Image& o) const {
    return width == o.width && height == o.height;
  }
};

// Warnings are routed through a replaceable sink (stderr by default).
using WarningSink = std::function<void(const std::string&)>;
void set_warning_sink(WarningSink sink);
void warn(const std::string& message);

}  // namespace tvis

#endif  // TVIS_COMMON_H_
