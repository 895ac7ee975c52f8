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


#include "tvis/aliasing.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "tvis/io.h"

namespace tvis {
namespace {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little,
              ".flo I/O assumes a little-endian host");

constexpr char kFloMagic[4] = {'P', 'I', 'E', 'H'};

FlowField read_flo_stream(std::istream& in, const std::string& name) {
  char magic[4];
  int32_t dims[2];
  if (!in.read(magic, 4) || std::memcmp(magic, kFloMagic, 4) != 0) {
    throw InputError(name + ": missing PIEH magic");
  }
  if (!in.read(reinterpret_cast<char*>(dims), sizeof(dims)) || dims[0] <= 0 ||
      dims[1] <= 0 || dims[0] > 100000 || dims[1] > 100000) {
    throw InputError(name + ": bad flow dimensions");
  }
  FlowField f(dims[0], dims[1]);
  std::vector<float> buf(f.u.size() * 2);
  if (!in.read(reinterpret_cast<char*>(buf.data()),
               static_cast<std::streamsize>(buf.size() * sizeof(float)))) {
    throw InputError(name + ": truncated flow data");
  }
  for (size_t i = 0; i < f.u.size(); ++i) {
    f.u[i] = buf[2 * i];
    f.v[i] = buf[2 * i + 1];
    if (!std::isfinite(f.u[i]) || !std::isfinite(f.v[i])) {
      throw InputError(name + ": non-finite flow value");
    }
  }
  return f;
}

float sample_clamped(const std::vector<float>& img, int w, int h, double x,
                     double y) {
  x = std::clamp(x, 0.0, w - 1.0);
  y = std::clamp(y, 0.0, h - 1.0);
  const int x0 = std::min(static_cast<int>(x), w - 2 < 0 ? 0 : w - 2);
  const int y0 = std::min(static_cast<int>(y), h - 2 < 0 ? 0 : h - 2);
  const int x1 = std::min(x0 + 1, w - 1);
  const int y1 = std::min(y0 + 1, h - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  auto at = [&](int xx, int yy) {
    return static_cast<double>(img[static_cast<size_t>(yy) * w + xx]);
  };
  return static_cast<float>((1 - fy) * ((1 - fx) * at(x0, y0) + fx * at(x1, y0)) +
                            fy * ((1 - fx) * at(x0, y1) + fx * at(x1, y1)));
}

}  // namespace

FlowField read_flo(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  return read_flo_stream(in, path);
}

void write_flo(const std::string& path, const FlowField& flow) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  const int32_t dims[2] = {flow.width, flow.height};
  out.write(kFloMagic, 4);
  out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  for (size_t i = 0; i < flow.u.size(); ++i) {
    const float uv[2] = {flow.u[i], flow.v[i]};
    out.write(reinterpret_cast<const char*>(uv), sizeof(uv));
  }
}

std::vector<FlowField> load_flows(const std::string& path) {
  std::vector<FlowField> out;
  if (fs::is_directory(path)) {
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(path)) {
      if (e.is_regular_file() && e.path().extension() == ".flo") {
        files.push_back(e.path().string());
      }
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) out.push_back(read_flo(f));
    return out;
  }
  const nlohmann::json m = read_json(path);
  const fs::path base = fs::path(path).parent_path();
  auto resolve = [&](const std::string& p) {
    const fs::path q(p);
    return (q.is_absolute() ? q : base / q).string();
  };
  try {
    if (m.contains("files")) {
      for (const auto& f : m.at("files")) {
        out.push_back(read_flo(resolve(f.get<std::string>())));
      }
    } else {
      const std::string file = resolve(m.at("container").get<std::string>());
      const int count = m.at("count").get<int>();
      std::ifstream in(file, std::ios::binary);
      if (!in) throw InputError("cannot open " + file);
      for (int i = 0; i < count; ++i) out.push_back(read_flo_stream(in, file));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
  return out;
}

std::vector<Image> motion_compensate(const std::vector<Image>& frames,
                                     const std::vector<FlowField>& flows,
                                     int window) {
  if (window < 1) throw InputError("motion_compensate: window must be >= 1");
  if (frames.empty()) return {};
  if (flows.size() + 1 != frames.size()) {
    throw InputError("motion_compensate: need " +
                     std::to_string(frames.size() - 1) + " flows, got " +
                     std::to_string(flows.size()));
  }
  const int w = frames.front().width;
  const int h = frames.front().height;
  for (const Image& f : frames) {
    if (f.width != w || f.height != h) {
      throw InputError("motion_compensate: frame size mismatch");
    }
  }
  for (const FlowField& f : flows) {
    if (f.width != w || f.height != h) {
      throw InputError("motion_compensate: flow size does not match frames");
    }
  }
  const size_t n = static_cast<size_t>(w) * h;
  std::vector<Image> out(frames.size());
  const size_t windows = (frames.size() + window - 1) / window;
  parallel_for(windows, 1, [&](int, size_t wi) {
    const size_t first = wi * static_cast<size_t>(window);
    const size_t last = std::min(frames.size(), first + window);
    // Displacement of every reference pixel into the current frame.
    std::vector<double> dx(n, 0.0), dy(n, 0.0);
    out[first] = frames[first];
    for (size_t f = first + 1; f < last; ++f) {
      const FlowField& fl = flows[f - 1];
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const size_t i = static_cast<size_t>(y) * w + x;
          const double px = x + dx[i];
          const double py = y + dy[i];
          dx[i] += sample_clamped(fl.u, w, h, px, py);
          dy[i] += sample_clamped(fl.v, w, h, px, py);
        }
      }
      Image warped(w, h);
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const size_t i = static_cast<size_t>(y) * w + x;
          warped.pixels[i] =
              sample_clamped(frames[f].pixels, w, h, x + dx[i], y + dy[i]);
        }
      }
      out[f] = std::move(warped);
    }
  });
  return out;
}

double flicker_score(const VisibilityMap& map, double beta) {
  if (map.cells.empty()) throw InputError("flicker_score: empty map");
  if (!(beta > 0.0)) throw InputError("flicker_score: beta must be > 0");
  double sum = 0.0;
  for (const VisibilityCell& c : map.cells) sum += std::pow(c.p_norm, beta);
  return std::pow(sum / static_cast<double>(map.cells.size()), 1.0 / beta);
}

std::string CffTable::csv() const {
  std::string out = "f_cpd";
  for (double e : eccentricities) out += ",e_" + fixed(e, 1);
  out += "\n";
  for (size_t r = 0; r < spatial_freqs.size(); ++r) {
    out += fixed(spatial_freqs[r], 3);
    for (const auto& v : hz[r]) out += "," + (v ? fixed(*v, 2) : "");
    out += "\n";
  }
  return out;
}

CffTable cff_table(const std::vector<double>& eccentricities,
                   const std::vector<double>& spatial_freqs, double c_max,
                   const SensitivityParams& params) {
  if (eccentricities.empty() || spatial_freqs.empty()) {
    throw InputError("cff_table: eccentricity and frequency lists must be "
                     "non-empty");
  }
  CffTable t{eccentricities, spatial_freqs, c_max, {}};
  for (double f : spatial_freqs) {
    std::vector<std::optional<double>> row;
    for (double e : eccentricities) {
      row.push_back(critical_flicker_frequency(f, 0.0, e, c_max, params));
    }
    t.hz.push_back(std::move(row));
  }
  return t;
}

}  // namespace tvis
