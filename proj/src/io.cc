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


#include "tvis/io.h"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>

namespace tvis {
namespace {

namespace fs = std::filesystem;

constexpr int kPngCompression = 6;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

CsvRow split_fields(const std::string& line) {
  CsvRow out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

FilePtr open_file(const std::string& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw InputError("cannot open " + path);
  return f;
}

[[noreturn]] void png_error_fn(png_structp, png_const_charp msg) {
  throw InputError(std::string("png: ") + msg);
}
void png_warning_fn(png_structp, png_const_charp) {}

uint8_t to_byte(double v) {
  return static_cast<uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

void write_png(const std::string& path, int width, int height, int color_type,
               int channels, const uint8_t* data) {
  FilePtr f = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                            png_error_fn, png_warning_fn);
  png_infop info = png_create_info_struct(png);
  try {
    png_init_io(png, f.get());
    png_set_compression_level(png, kPngCompression);
    png_set_filter(png, 0, PNG_FILTER_NONE);
    png_set_IHDR(png, info, static_cast<png_uint_32>(width),
                 static_cast<png_uint_32>(height), 8, color_type,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    const size_t stride = static_cast<size_t>(width) * channels;
    for (int y = 0; y < height; ++y) {
      png_write_row(png, const_cast<uint8_t*>(data + y * stride));
    }
    png_write_end(png, nullptr);
  } catch (...) {
    png_destroy_write_struct(&png, &info);
    throw;
  }
  png_destroy_write_struct(&png, &info);
}

}  // namespace

std::vector<CsvRow> read_csv(const std::string& path,
                             const std::vector<std::string>& columns) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  std::string line;
  std::vector<CsvRow> rows;
  bool header = true;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    CsvRow fields = split_fields(line);
    if (header) {
      if (fields != columns) {
        std::string want;
        for (const auto& c : columns) want += (want.empty() ? "" : ",") + c;
        throw InputError(path + ": expected header '" + want + "'");
      }
      header = false;
      continue;
    }
    if (fields.size() != columns.size()) {
      throw InputError(path + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(columns.size()) + " fields");
    }
    rows.push_back(std::move(fields));
  }
  if (header) throw InputError(path + ": missing header");
  return rows;
}

double parse_number(const std::string& field, const std::string& context) {
  try {
    size_t used = 0;
    const double v = std::stod(field, &used);
    if (used != field.size() || !std::isfinite(v)) throw std::exception();
    return v;
  } catch (...) {
    throw InputError(context + ": not a number: '" + field + "'");
  }
}

int parse_int(const std::string& field, const std::string& context) {
  try {
    size_t used = 0;
    const long v = std::stol(field, &used);
    if (used != field.size()) throw std::exception();
    return static_cast<int>(v);
  } catch (...) {
    throw InputError(context + ": not an integer: '" + field + "'");
  }
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v == 0.0 ? 0.0 : v);
  return buf;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  out << text;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json read_json(const std::string& path) {
  try {
    return nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
}

void write_json(const std::string& path, const nlohmann::json& j) {
  write_text(path, j.dump(2) + "\n");
}

PngImage read_png(const std::string& path) {
  FilePtr f = open_file(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                           png_error_fn, png_warning_fn);
  png_infop info = png_create_info_struct(png);
  PngImage img;
  try {
    png_init_io(png, f.get());
    png_read_info(png, info);
    const int color = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) {
      png_set_expand_gray_1_2_4_to_8(png);
    }
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (depth == 16) png_set_swap(png);  // host little-endian samples
    png_read_update_info(png, info);
    img.width = static_cast<int>(png_get_image_width(png, info));
    img.height = static_cast<int>(png_get_image_height(png, info));
    img.channels = png_get_channels(png, info);
    img.bit_depth = png_get_bit_depth(png, info);
    const size_t rowbytes = png_get_rowbytes(png, info);
    std::vector<uint8_t> buf(rowbytes * img.height);
    std::vector<png_bytep> rows(static_cast<size_t>(img.height));
    for (int y = 0; y < img.height; ++y) rows[y] = buf.data() + y * rowbytes;
    png_read_image(png, rows.data());
    const size_t n = static_cast<size_t>(img.width) * img.height * img.channels;
    img.samples.resize(n);
    if (img.bit_depth == 16) {
      for (size_t i = 0; i < n; ++i) {
        img.samples[i] = static_cast<uint16_t>(buf[2 * i] | (buf[2 * i + 1] << 8));
      }
    } else {
      for (size_t i = 0; i < n; ++i) img.samples[i] = buf[i];
    }
  } catch (...) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

Image png_to_linear(const PngImage& png, bool linear_input) {
  const double scale = png.bit_depth == 16 ? 65535.0 : 255.0;
  auto decode = [&](uint16_t s) {
    const double v = s / scale;
    return linear_input ? v : srgb_to_linear(v);
  };
  Image out(png.width, png.height);
  const int ch = png.channels;
  for (size_t i = 0; i < out.pixels.size(); ++i) {
    const uint16_t* p = png.samples.data() + i * ch;
    double v;
    if (ch >= 3) {
      v = 0.2126 * decode(p[0]) + 0.7152 * decode(p[1]) + 0.0722 * decode(p[2]);
    } else {
      v = decode(p[0]);
    }
    out.pixels[i] = static_cast<float>(v);
  }
  return out;
}

Image read_linear_png(const std::string& path, bool linear_input) {
  return png_to_linear(read_png(path), linear_input);
}

void write_png_gray(const std::string& path, const Image& linear,
                    bool linear_output) {
  std::vector<uint8_t> bytes(linear.pixels.size());
  for (size_t i = 0; i < bytes.size(); ++i) {
    const double v = std::clamp<double>(linear.pixels[i], 0.0, 1.0);
    bytes[i] = to_byte(linear_output ? v : linear_to_srgb(v));
  }
  write_png(path, linear.width, linear.height, PNG_COLOR_TYPE_GRAY, 1,
            bytes.data());
}

void write_png_rgb(const std::string& path, int width, int height,
                   const std::vector<uint8_t>& rgb) {
  if (rgb.size() != static_cast<size_t>(width) * height * 3) {
    throw InputError("write_png_rgb: buffer size mismatch");
  }
  write_png(path, width, height, PNG_COLOR_TYPE_RGB, 3, rgb.data());
}

std::vector<std::string> list_png_frames(const std::string& dir) {
  if (!fs::is_directory(dir)) throw InputError("not a directory: " + dir);
  std::vector<std::string> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    if (ext == ".png") out.push_back(entry.path().string());
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw InputError("no PNG frames in " + dir);
  return out;
}

PngDirectoryFrames::PngDirectoryFrames(const std::string& dir,
                                       const DisplayGeometry& geom,
                                       bool linear_input)
    : paths_(list_png_frames(dir)), geom_(geom), linear_input_(linear_input) {
  const PngImage first = read_png(paths_.front());
  width_ = first.width;
  height_ = first.height;
}

void PngDirectoryFrames::read(int index, std::span<float> luminance) const {
  const Image v = read_linear_png(paths_.at(static_cast<size_t>(index)),
                                  linear_input_);
  if (v.width != width_ || v.height != height_) {
    throw InputError("frame size mismatch: " + paths_[index]);
  }
  const double black = geom_.black_luminance;
  const double span = geom_.peak_luminance - geom_.black_luminance;
  for (size_t i = 0; i < v.pixels.size(); ++i) {
    luminance[i] = static_cast<float>(black + span * v.pixels[i]);
  }
}

GazeTrack read_gaze_trace(const std::string& path) {
  const auto rows = read_csv(path, {"frame", "x_px", "y_px"});
  if (rows.empty()) throw InputError(path + ": empty gaze trace");
  std::map<int, GazePoint> samples;
  for (const auto& r : rows) {
    const int frame = parse_int(r[0], path);
    if (frame < 0) throw InputError(path + ": negative frame index");
    samples[frame] = {parse_number(r[1], path), parse_number(r[2], path)};
  }
  return [samples = std::move(samples)](int frame) {
    auto it = samples.upper_bound(frame);
    if (it == samples.begin()) return it->second;
    return std::prev(it)->second;
  };
}

GazePoint parse_gaze(const std::string& text) {
  const CsvRow f = split_fields(text);
  if (f.size() != 2) throw InputError("gaze must be 'x,y': " + text);
  return {parse_number(f[0], "gaze"), parse_number(f[1], "gaze")};
}

std::string visibility_csv(const VisibilityMap& map) {
  std::string out = "t_idx,x_idx,y_idx,ecc_deg,C_M,psi,p_norm\n";
  for (const VisibilityCell& c : map.cells) {
    out += std::to_string(c.t_idx) + "," + std::to_string(c.x_idx) + "," +
           std::to_string(c.y_idx) + "," + fixed(c.ecc_deg) + "," +
           fixed(c.c_m) + "," + fixed(c.psi) + "," + fixed(c.p_norm) + "\n";
  }
  return out;
}

void write_heatmap(const std::string& path, const VisibilityMap& map,
                   int window, const Image& frame) {
  if (frame.width != map.width_px || frame.height != map.height_px) {
    throw InputError("write_heatmap: frame size does not match the map");
  }
  constexpr double kAlpha = 0.5;
  std::vector<uint8_t> rgb(static_cast<size_t>(frame.width) * frame.height * 3);
  for (int y = 0; y < frame.height; ++y) {
    const int py = y / map.patch.v;
    for (int x = 0; x < frame.width; ++x) {
      const int px = x / map.patch.h;
      const double base = std::clamp<double>(frame.at(x, y), 0.0, 1.0);
      double r = base, g = base, b = base;
      if (px < map.n_x && py < map.n_y) {
        // Blue (invisible) through red (always detected).
        const double p = map.at(window, px, py).p_norm;
        r = (1.0 - kAlpha) * base + kAlpha * p;
        g = (1.0 - kAlpha) * base + kAlpha * 0.0;
        b = (1.0 - kAlpha) * base + kAlpha * (1.0 - p);
      }
      uint8_t* o = rgb.data() + (static_cast<size_t>(y) * frame.width + x) * 3;
      o[0] = to_byte(linear_to_srgb(r));
      o[1] = to_byte(linear_to_srgb(g));
      o[2] = to_byte(linear_to_srgb(b));
    }
  }
  write_png_rgb(path, frame.width, frame.height, rgb);
}

}  // namespace tvis
