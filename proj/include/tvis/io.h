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


// File formats: small CSV tables, PNG frames (libpng, pinned compression so
// output bytes are reproducible), frame directories and gaze traces.

#ifndef TVIS_IO_H_
#define TVIS_IO_H_

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "tvis/common.h"
#include "tvis/geometry.h"
#include "tvis/visibility.h"

namespace tvis {

// Comma-separated table with a header row. read_csv checks that the header
// names match `columns` exactly and every row has that many fields; blank
// lines are ignored.
using CsvRow = std::vector<std::string>;
std::vector<CsvRow> read_csv(const std::string& path,
                             const std::vector<std::string>& columns);
double parse_number(const std::string& field, const std::string& context);
int parse_int(const std::string& field, const std::string& context);
// Fixed-point formatting with a pinned number of decimals.
std::string fixed(double v, int decimals = 6);

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);
nlohmann::json read_json(const std::string& path);
void write_json(const std::string& path, const nlohmann::json& j);

// Decoded PNG samples, 1 (gray), 2 (gray+alpha), 3 (RGB) or 4 (RGBA)
// channels of 8 or 16 bits, stored widened to uint16.
struct PngImage {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 0;
  std::vector<uint16_t> samples;
};

PngImage read_png(const std::string& path);

// Display-linear value in [0,1] per pixel. Color is reduced to luminance
// with Rec. 709 weights after linearization; alpha is ignored. Unless
// `linear_input` is set, samples are decoded with the sRGB transfer curve.
Image png_to_linear(const PngImage& png, bool linear_input);
Image read_linear_png(const std::string& path, bool linear_input);

// 8-bit writers. Gray input is display-linear and sRGB-encoded on write
// unless `linear_output` is set.
void write_png_gray(const std::string& path, const Image& linear,
                    bool linear_output = false);
void write_png_rgb(const std::string& path, int width, int height,
                   const std::vector<uint8_t>& rgb);

// Sorted *.png paths in a directory.
std::vector<std::string> list_png_frames(const std::string& dir);

// Streams frames from a PNG directory, converting to cd/m^2 on demand.
class PngDirectoryFrames : public FrameSource {
 public:
  PngDirectoryFrames(const std::string& dir, const DisplayGeometry& geom,
                     bool linear_input);
  int width() const override { return width_; }
  int height() const override { return height_; }
  int frame_count() const override { return static_cast<int>(paths_.size()); }
  void read(int index, std::span<float> luminance) const override;
  const std::vector<std::string>& paths() const { return paths_; }

 private:
  std::vector<std::string> paths_;
  DisplayGeometry geom_;
  bool linear_input_;
  int width_ = 0;
  int height_ = 0;
};

// Gaze trace CSV: frame,x_px,y_px. Frames between samples hold the latest
// earlier sample; frames before the first sample use the first.
GazeTrack read_gaze_trace(const std::string& path);
// "x,y" in pixels.
GazePoint parse_gaze(const std::string& text);

// One row per cell: t_idx,x_idx,y_idx,ecc_deg,C_M,psi,p_norm.
std::string visibility_csv(const VisibilityMap& map);

// p_norm of one time window, nearest-neighbor upsampled and alpha-blended
// over `frame` (display-linear). Pixels outside complete patches are left
// uncolored.
void write_heatmap(const std::string& path, const VisibilityMap& map,
                   int window, const Image& frame);

}  // namespace tvis

#endif  // TVIS_IO_H_
