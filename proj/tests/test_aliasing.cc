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


#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "tvis/aliasing.h"
#include "tvis/io.h"

using namespace tvis;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "tvis_test_aliasing" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

float pattern(double x, double y) {
  return static_cast<float>(0.5 + 0.3 * std::sin(0.21 * x) * std::cos(0.13 * y));
}

// Content moving right by `speed` px per frame, with the matching flow.
void translating(int w, int h, int n, double speed, std::vector<Image>& frames,
                 std::vector<FlowField>& flows) {
  frames.clear();
  flows.clear();
  for (int f = 0; f < n; ++f) {
    Image img(w, h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) img.at(x, y) = pattern(x - speed * f, y);
    frames.push_back(img);
    if (f + 1 < n) {
      FlowField fl(w, h);
      std::fill(fl.u.begin(), fl.u.end(), static_cast<float>(speed));
      flows.push_back(fl);
    }
  }
}

VisibilityMap map_with(std::vector<double> p) {
  VisibilityMap m;
  for (double v : p) {
    VisibilityCell c;
    c.p_norm = v;
    m.cells.push_back(c);
  }
  return m;
}

}  // namespace

TEST_CASE("zero flow is the identity") {
  std::vector<Image> frames;
  std::vector<FlowField> flows;
  translating(20, 10, 6, 0.0, frames, flows);
  for (size_t i = 0; i < frames.size(); ++i) frames[i].at(3, 3) += 0.01f * i;
  const auto out = motion_compensate(frames, flows, 25);
  for (size_t i = 0; i < frames.size(); ++i) CHECK(out[i].pixels == frames[i].pixels);
}

TEST_CASE("translation is undone inside each window") {
  std::vector<Image> frames;
  std::vector<FlowField> flows;
  translating(80, 12, 8, 2.0, frames, flows);
  const auto out = motion_compensate(frames, flows, 5);
  for (int f = 1; f < 5; ++f) {
    for (int x = 0; x + 2 * f < 79; ++x) {
      CHECK(out[f].at(x, 6) == doctest::Approx(frames[0].at(x, 6)).epsilon(1e-5));
    }
  }
  // A new window starts from its own first frame.
  CHECK(out[5].pixels == frames[5].pixels);
  CHECK(out[7].at(10, 6) == doctest::Approx(frames[5].at(10, 6)).epsilon(1e-5));
  // Samples past the edge clamp.
  CHECK(out[4].at(79, 6) == doctest::Approx(frames[4].at(79, 6)));
}

TEST_CASE("fractional flow interpolates bilinearly") {
  std::vector<Image> frames(2, Image(4, 2));
  for (int x = 0; x < 4; ++x) {
    frames[1].at(x, 0) = frames[1].at(x, 1) = static_cast<float>(x);
  }
  FlowField fl(4, 2);
  std::fill(fl.u.begin(), fl.u.end(), 0.25f);
  const auto out = motion_compensate(frames, {fl}, 25);
  CHECK(out[1].at(1, 0) == doctest::Approx(1.25));
  CHECK(out[1].at(3, 1) == doctest::Approx(3.0));
}

TEST_CASE("motion compensation input checks") {
  std::vector<Image> frames(3, Image(4, 4));
  CHECK_THROWS_AS(motion_compensate(frames, {FlowField(4, 4)}, 25), InputError);
  CHECK_THROWS_AS(motion_compensate(frames, {FlowField(4, 4), FlowField(5, 4)}, 25),
                  InputError);
  CHECK_THROWS_AS(motion_compensate(frames, {FlowField(4, 4), FlowField(4, 4)}, 0),
                  InputError);
}

TEST_CASE(".flo files and manifests") {
  const fs::path dir = temp_dir("flo");
  FlowField a(3, 2), b(3, 2);
  for (size_t i = 0; i < a.u.size(); ++i) {
    a.u[i] = 0.5f * i;
    a.v[i] = -1.0f * i;
    b.u[i] = 2.0f;
  }
  write_flo((dir / "f_000.flo").string(), a);
  write_flo((dir / "f_001.flo").string(), b);
  const FlowField r = read_flo((dir / "f_000.flo").string());
  CHECK(r.width == 3);
  CHECK(r.height == 2);
  CHECK(r.u == a.u);
  CHECK(r.v == a.v);
  // The header bytes are the Middlebury tag.
  std::ifstream in(dir / "f_000.flo", std::ios::binary);
  char magic[4];
  in.read(magic, 4);
  CHECK(std::string(magic, 4) == "PIEH");

  CHECK(load_flows(dir.string()).size() == 2);

  write_json((dir / "list.json").string(), {{"files", {"f_001.flo", "f_000.flo"}}});
  const auto listed = load_flows((dir / "list.json").string());
  REQUIRE(listed.size() == 2);
  CHECK(listed[0].u == b.u);

  {
    std::ofstream out(dir / "all.bin", std::ios::binary);
    for (const char* f : {"f_000.flo", "f_001.flo"}) {
      std::ifstream src(dir / f, std::ios::binary);
      out << src.rdbuf();
    }
  }
  write_json((dir / "box.json").string(), {{"container", "all.bin"}, {"count", 2}});
  const auto boxed = load_flows((dir / "box.json").string());
  REQUIRE(boxed.size() == 2);
  CHECK(boxed[1].u == b.u);
  write_json((dir / "short.json").string(), {{"container", "all.bin"}, {"count", 3}});
  CHECK_THROWS_AS(load_flows((dir / "short.json").string()), InputError);

  std::ofstream(dir / "bad.flo") << "XXXXabcdefgh";
  CHECK_THROWS_AS(read_flo((dir / "bad.flo").string()), InputError);
}

TEST_CASE("flicker score closed forms") {
  CHECK(flicker_score(map_with({0.5, 0.5, 0.5})) == doctest::Approx(0.5));
  CHECK(flicker_score(map_with({0.0, 1.0})) == doctest::Approx(std::cbrt(0.5)));
  CHECK(flicker_score(map_with({0.2, 0.4}), 1.0) == doctest::Approx(0.3));
  CHECK(flicker_score(map_with({0.0, 0.0})) == 0.0);
  // Larger beta moves the score toward the maximum.
  CHECK(flicker_score(map_with({0.1, 0.9}), 20.0) >
        flicker_score(map_with({0.1, 0.9}), 2.0));
  CHECK_THROWS_AS(flicker_score(VisibilityMap{}), InputError);
  CHECK_THROWS_AS(flicker_score(map_with({0.1}), 0.0), InputError);
}

TEST_CASE("CFF table") {
  const SensitivityParams p;
  const CffTable t = cff_table({0, 10, 20, 30}, {0, 1, 40}, 0.5, p);
  REQUIRE(t.hz.size() == 3);
  for (size_t r = 0; r < 2; ++r) {
    for (size_t c = 0; c < 4; ++c) {
      CHECK(t.hz[r][c] == critical_flicker_frequency(t.spatial_freqs[r], 0,
                                                     t.eccentricities[c], 0.5, p));
    }
  }
  CHECK(t.hz[0][0].value() > t.hz[0][3].value());
  CHECK_FALSE(t.hz[2][3].has_value());
  const std::string csv = t.csv();
  CHECK(csv.rfind("f_cpd,e_0.0,e_10.0,e_20.0,e_30.0\n", 0) == 0);
  CHECK(csv.find("\n40.000,") != std::string::npos);
  CHECK_THROWS_AS(cff_table({}, {0}, 0.5, p), InputError);
}
