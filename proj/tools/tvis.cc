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


// tvis: command-line front end.
//
// Exit codes: 0 on success, 2 for invalid input (bad flags, missing or
// malformed files, failed validation), 1 for anything else.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tvis/aliasing.h"
#include "tvis/calibration.h"
#include "tvis/io.h"
#include "tvis/stimulus.h"
#include "tvis/transitions.h"
#include "tvis/visibility.h"

namespace fs = std::filesystem;
using namespace tvis;

namespace {

struct Globals {
  std::string config;
  std::string params;
  std::string out = "out";
  int workers = 1;
  uint64_t seed = 1;
};

struct Resolved {
  DisplayGeometry geom;
  SensitivityParams params;
};

// A config file holds {"geometry": {...}, "params": {...}} or the geometry
// keys at top level. A separate params file overrides the config's params.
Resolved resolve(const Globals& g) {
  Resolved r;
  if (!g.config.empty()) {
    if (!fs::exists(g.config)) {
      throw InputError("config file not found: " + g.config);
    }
    const nlohmann::json j = read_json(g.config);
    if (j.contains("geometry") || j.contains("params")) {
      if (j.contains("geometry")) {
        r.geom = DisplayGeometry::from_json(j.at("geometry"));
      }
      if (j.contains("params")) {
        r.params = SensitivityParams::from_json(j.at("params"));
      }
    } else {
      r.geom = DisplayGeometry::from_json(j);
    }
  }
  if (!g.params.empty()) {
    if (!fs::exists(g.params)) {
      throw InputError("params file not found: " + g.params);
    }
    r.params = SensitivityParams::from_json(read_json(g.params), r.params);
  }
  r.geom.validate();
  r.params.validate();
  return r;
}

nlohmann::json provenance(const Resolved& r) {
  return {{"geometry", r.geom.to_json()}, {"params", r.params.to_json()}};
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create " + dir + ": " + ec.message());
}

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

std::string numbered(const std::string& stem, int i, int digits,
                     const std::string& ext) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s%0*d%s", stem.c_str(), digits, i,
                ext.c_str());
  return buf;
}

void require_file(const std::string& path, const char* what) {
  if (!fs::exists(path)) {
    throw InputError(std::string(what) + " not found: " + path);
  }
}

struct GazeOptions {
  std::string gaze;
  std::string trace;
};

void add_gaze(CLI::App* cmd, GazeOptions& o) {
  auto* fixed_gaze =
      cmd->add_option("--gaze", o.gaze, "Fixed gaze point 'x,y' in pixels");
  auto* trace = cmd->add_option("--gaze-trace", o.trace,
                                "Gaze trace CSV: frame,x_px,y_px");
  fixed_gaze->excludes(trace);
}

// Screen center when neither a point nor a trace is given.
GazeTrack make_gaze(const GazeOptions& o, const DisplayGeometry& geom,
                    nlohmann::json& report) {
  if (!o.trace.empty()) {
    require_file(o.trace, "gaze trace");
    report["gaze_trace"] = o.trace;
    return read_gaze_trace(o.trace);
  }
  const GazePoint p = o.gaze.empty()
                          ? GazePoint{0.5 * geom.width_px, 0.5 * geom.height_px}
                          : parse_gaze(o.gaze);
  report["gaze"] = {p.x, p.y};
  return [p](int) { return p; };
}

// ---------------------------------------------------------------------------

struct AnalyzeArgs {
  std::string input;
  GazeOptions gaze;
  bool linear_input = false;
  std::string patch = "25x71x71";
  bool allow_other_dims = false;
  bool local_scaling = false;
  bool no_heatmaps = false;
};

int cmd_analyze(const Globals& g, const AnalyzeArgs& a) {
  const Resolved r = resolve(g);
  const PngDirectoryFrames frames(a.input, r.geom, a.linear_input);
  nlohmann::json report{{"config", provenance(r)}};
  const GazeTrack gaze = make_gaze(a.gaze, r.geom, report);
  AnalyzeOptions opt;
  opt.patch = parse_patch_dims(a.patch);
  opt.allow_other_dims = a.allow_other_dims;
  opt.local_scaling = a.local_scaling;
  opt.workers = g.workers;
  const VisibilityMap map = analyze_video(frames, gaze, r.geom, r.params, opt);

  ensure_dir(g.out);
  write_text(join(g.out, "visibility.csv"), visibility_csv(map));
  if (!a.no_heatmaps) {
    const std::string dir = join(g.out, "heatmaps");
    ensure_dir(dir);
    for (int w = 0; w < map.n_t; ++w) {
      const Image frame = read_linear_png(
          frames.paths()[static_cast<size_t>(w * map.patch.t)], a.linear_input);
      write_heatmap(join(dir, numbered("window_", w, 4, ".png")), map, w,
                    frame);
    }
  }
  report["input"] = a.input;
  report["linear_input"] = a.linear_input;
  report["patch"] = format_patch_dims(map.patch);
  report["local_scaling"] = a.local_scaling;
  report["windows"] = map.n_t;
  report["patches_x"] = map.n_x;
  report["patches_y"] = map.n_y;
  report["coverage"] = map.coverage();
  write_json(join(g.out, "report.json"), report);
  return 0;
}

// ---------------------------------------------------------------------------

struct TransitionArgs {
  std::string source;
  std::string target;
  double p_d = 0.5;
  std::vector<double> ecc{0.0, 10.0, 20.0, 30.0};
  bool linear_input = false;
  std::string schedule;
  GazeOptions gaze;
  std::string position;
  int max_frames = 100000;
};

std::pair<Image, Image> load_pair(const TransitionArgs& a) {
  require_file(a.source, "source image");
  require_file(a.target, "target image");
  return {read_linear_png(a.source, a.linear_input),
          read_linear_png(a.target, a.linear_input)};
}

int cmd_transition_solve(const Globals& g, const TransitionArgs& a) {
  const Resolved r = resolve(g);
  const auto [src, tgt] = load_pair(a);
  const TransitionModel model(src, tgt, r.params, r.geom);
  const TransitionSchedule s =
      build_schedule(model, a.p_d, a.ecc, r.geom, g.workers);
  nlohmann::json j = s.to_json();
  j["source"] = a.source;
  j["target"] = a.target;
  j["config"] = provenance(r);
  ensure_dir(g.out);
  write_json(join(g.out, "schedule.json"), j);
  return 0;
}

int cmd_transition_render(const Globals& g, const TransitionArgs& a) {
  const Resolved r = resolve(g);
  const auto [src, tgt] = load_pair(a);
  require_file(a.schedule, "schedule");
  const TransitionSchedule s =
      TransitionSchedule::from_json(read_json(a.schedule));
  nlohmann::json report{{"config", provenance(r)}};
  const GazeTrack gaze = make_gaze(a.gaze, r.geom, report);
  const GazePoint pos =
      a.position.empty()
          ? GazePoint{0.5 * (r.geom.width_px - src.width),
                      0.5 * (r.geom.height_px - src.height)}
          : parse_gaze(a.position);
  const std::vector<Image> frames =
      render_transition(src, tgt, s, gaze, pos, r.geom, a.max_frames);
  const std::string dir = join(g.out, "frames");
  ensure_dir(dir);
  for (size_t i = 0; i < frames.size(); ++i) {
    write_png_gray(join(dir, numbered("frame_", static_cast<int>(i), 5, ".png")),
                   frames[i]);
  }
  report["frames"] = frames.size();
  report["position"] = {pos.x, pos.y};
  report["schedule"] = a.schedule;
  write_json(join(g.out, "render.json"), report);
  return 0;
}

// ---------------------------------------------------------------------------

struct AliasingArgs {
  std::string input;
  std::string flows;
  GazeOptions gaze;
  bool linear_input = false;
  double beta = 3.0;
};

int cmd_aliasing_score(const Globals& g, const AliasingArgs& a) {
  const Resolved r = resolve(g);
  nlohmann::json report{{"config", provenance(r)}};
  const GazeTrack gaze = make_gaze(a.gaze, r.geom, report);
  AnalyzeOptions opt;
  opt.workers = g.workers;
  VisibilityMap map;
  if (a.flows.empty()) {
    const PngDirectoryFrames frames(a.input, r.geom, a.linear_input);
    map = analyze_video(frames, gaze, r.geom, r.params, opt);
  } else {
    require_file(a.flows, "flow input");
    std::vector<Image> lum;
    for (const auto& p : list_png_frames(a.input)) {
      Image img = read_linear_png(p, a.linear_input);
      for (float& v : img.pixels) {
        v = static_cast<float>(code_to_luminance(r.geom, v));
      }
      lum.push_back(std::move(img));
    }
    const LuminanceFrames frames(
        motion_compensate(lum, load_flows(a.flows), opt.patch.t));
    map = analyze_video(frames, gaze, r.geom, r.params, opt);
  }
  report["input"] = a.input;
  report["flows"] = a.flows.empty() ? nlohmann::json(nullptr)
                                    : nlohmann::json(a.flows);
  report["beta"] = a.beta;
  report["flicker_score"] = flicker_score(map, a.beta);
  report["cells"] = map.cells.size();
  ensure_dir(g.out);
  write_text(join(g.out, "visibility.csv"), visibility_csv(map));
  write_json(join(g.out, "aliasing.json"), report);
  return 0;
}

// ---------------------------------------------------------------------------

struct CffArgs {
  std::vector<double> ecc{0.0, 10.0, 25.0, 40.0};
  std::vector<double> freqs{0.0, 1.0, 2.0, 4.0, 8.0};
  double c_max = 0.5;
};

int cmd_cff(const Globals& g, const CffArgs& a) {
  const Resolved r = resolve(g);
  const CffTable t = cff_table(a.ecc, a.freqs, a.c_max, r.params);
  ensure_dir(g.out);
  write_text(join(g.out, "cff.csv"), t.csv());
  return 0;
}

// ---------------------------------------------------------------------------

struct FitArgs {
  std::string samples;
  int degree = 3;
  std::string thresholds;
  std::string mode = "pooled";
  std::string saturated = "exclude";
  double r = 1.7;
  int restarts = 4;
  int folds = 5;
  std::string detections;
  std::string components;
  bool no_lapse = false;
};

ShapeFitOptions shape_options(const Globals& g, const FitArgs& a) {
  ShapeFitOptions o;
  if (a.mode == "pooled") {
    o.mode = ThresholdModel::kPooled;
  } else if (a.mode == "nominal") {
    o.mode = ThresholdModel::kNominal;
  } else {
    throw InputError("--mode must be pooled or nominal");
  }
  if (a.saturated == "exclude") {
    o.saturated = SaturatedPolicy::kExclude;
  } else if (a.saturated == "censor") {
    o.saturated = SaturatedPolicy::kCensor;
  } else if (a.saturated == "include") {
    o.saturated = SaturatedPolicy::kInclude;
  } else {
    throw InputError("--saturated must be exclude, censor or include");
  }
  o.r = a.r;
  o.restarts = a.restarts;
  o.seed = g.seed;
  return o;
}

int cmd_fit_delange(const Globals& g, const FitArgs& a) {
  const Resolved r = resolve(g);
  require_file(a.samples, "samples");
  std::vector<DeLangeSample> samples;
  for (const auto& row : read_csv(a.samples, {"f_t_hz", "sensitivity"})) {
    samples.push_back(
        {parse_number(row[0], a.samples), parse_number(row[1], a.samples)});
  }
  const DeLangeFit fit = fit_delange(samples, a.degree);
  ensure_dir(g.out);
  write_json(join(g.out, "fit_delange.json"),
             {{"a", fit.a},
              {"r2", fit.r2},
              {"degree", a.degree},
              {"samples", a.samples},
              {"config", provenance(r)}});
  return 0;
}

int cmd_fit_shape(const Globals& g, const FitArgs& a) {
  const Resolved r = resolve(g);
  require_file(a.thresholds, "thresholds");
  const auto records = read_threshold_csv(a.thresholds);
  const ShapeFitOptions o = shape_options(g, a);
  nlohmann::json j{{"thresholds", a.thresholds},
                   {"mode", a.mode},
                   {"saturated", a.saturated},
                   {"r", a.r},
                   {"restarts", a.restarts},
                   {"seed", g.seed},
                   {"config", provenance(r)}};
  int code = 0;
  try {
    j["fit"] = fit_shape_params(records, r.params, r.geom, o).to_json();
  } catch (const FitError& e) {
    j["fit"] = e.best().to_json();
    j["error"] = e.what();
    std::cerr << "tvis: " << e.what() << "\n";
    code = 1;
  }
  ensure_dir(g.out);
  write_json(join(g.out, "fit_shape.json"), j);
  return code;
}

int cmd_fit_cv(const Globals& g, const FitArgs& a) {
  const Resolved r = resolve(g);
  require_file(a.thresholds, "thresholds");
  const auto records = read_threshold_csv(a.thresholds);
  const CvReport cv = cross_validate(records, a.folds, g.seed, r.params,
                                     r.geom, shape_options(g, a), g.workers);
  nlohmann::json j = cv.to_json();
  j["thresholds"] = a.thresholds;
  j["folds_requested"] = a.folds;
  j["seed"] = g.seed;
  j["mode"] = a.mode;
  j["config"] = provenance(r);
  ensure_dir(g.out);
  write_json(join(g.out, "cv.json"), j);
  write_text(join(g.out, "cv.txt"), cv.table());
  std::cout << cv.table();
  return 0;
}

int cmd_fit_psychometric(const Globals& g, const FitArgs& a) {
  const Resolved r = resolve(g);
  require_file(a.detections, "detections");
  PsychometricOptions o;
  o.start = r.params;
  o.fit_lapse = !a.no_lapse;
  if (!a.components.empty()) {
    require_file(a.components, "components");
    try {
      o.components = read_json(a.components)
                         .get<std::map<std::string, std::vector<double>>>();
    } catch (const nlohmann::json::exception& e) {
      throw InputError(a.components + ": " + e.what());
    }
  }
  const PsychometricFit fit =
      fit_psychometric(read_detection_csv(a.detections), o);
  ensure_dir(g.out);
  write_json(join(g.out, "fit_psychometric.json"),
             {{"fit", fit.to_json()},
              {"detections", a.detections},
              {"components", a.components},
              {"config", provenance(r)}});
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_stimulus(const Globals& g, const GratingSpec& spec) {
  const Resolved r = resolve(g);
  const PatchVolume patch = generate_grating(spec, r.geom);
  ensure_dir(g.out);
  const PatchDims& d = patch.dims();
  const double span = r.geom.peak_luminance - r.geom.black_luminance;
  for (int t = 0; t < d.t; ++t) {
    Image frame(d.h, d.v);
    for (int y = 0; y < d.v; ++y) {
      for (int x = 0; x < d.h; ++x) {
        frame.at(x, y) = static_cast<float>(
            (patch.volume.at(t, y, x) - r.geom.black_luminance) / span);
      }
    }
    write_png_gray(join(g.out, numbered("frame_", t, 3, ".png")), frame);
  }
  write_json(join(g.out, "stimulus.json"),
             {{"spec", spec.to_json()},
              {"frames", d.t},
              {"encoding", "sRGB 8-bit gray"},
              {"config", provenance(r)}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Visibility of temporal luminance change across the visual "
               "field"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "Geometry/parameter JSON");
  app.add_option("--params", g.params, "Model parameter overrides (JSON)");
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  app.add_option("--workers", g.workers, "Worker threads")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();

  std::function<int()> run;

  AnalyzeArgs analyze;
  auto* c_analyze = app.add_subcommand("analyze", "Per-patch visibility map");
  c_analyze->add_option("--input", analyze.input, "Directory of PNG frames")
      ->required();
  add_gaze(c_analyze, analyze.gaze);
  c_analyze->add_flag("--linear-input", analyze.linear_input,
                      "Frames are display-linear, skip sRGB decoding");
  c_analyze->add_option("--patch", analyze.patch, "Window TxWxH")
      ->capture_default_str();
  c_analyze->add_flag("--allow-other-dims", analyze.allow_other_dims,
                      "Accept windows other than 25x71x71");
  c_analyze->add_flag("--local-scaling", analyze.local_scaling,
                      "Per-patch angular pixel size");
  c_analyze->add_flag("--no-heatmaps", analyze.no_heatmaps,
                      "Skip heatmap PNGs");
  c_analyze->callback([&] { run = [&] { return cmd_analyze(g, analyze); }; });

  TransitionArgs trans;
  auto* c_trans = app.add_subcommand("transition", "Imperceptible transitions");
  c_trans->require_subcommand(1);
  auto* c_solve = c_trans->add_subcommand("solve", "Build a schedule");
  auto* c_render = c_trans->add_subcommand("render", "Render frames");
  for (auto* c : {c_solve, c_render}) {
    c->add_option("--source", trans.source, "Source PNG")->required();
    c->add_option("--target", trans.target, "Target PNG")->required();
    c->add_flag("--linear-input", trans.linear_input,
                "Images are display-linear");
  }
  c_solve->add_option("--pd", trans.p_d, "Target normalized probability")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  c_solve->add_option("--ecc", trans.ecc, "Eccentricities (deg)")
      ->delimiter(',');
  c_render->add_option("--schedule", trans.schedule, "Schedule JSON")
      ->required();
  add_gaze(c_render, trans.gaze);
  c_render->add_option("--position", trans.position,
                       "Top-left screen position 'x,y' (default centered)");
  c_render->add_option("--max-frames", trans.max_frames, "Frame limit");
  c_solve->callback(
      [&] { run = [&] { return cmd_transition_solve(g, trans); }; });
  c_render->callback(
      [&] { run = [&] { return cmd_transition_render(g, trans); }; });

  AliasingArgs alias;
  auto* c_alias = app.add_subcommand("aliasing", "Temporal aliasing");
  c_alias->require_subcommand(1);
  auto* c_score = c_alias->add_subcommand("score", "Global flicker score");
  c_score->add_option("--input", alias.input, "Directory of PNG frames")
      ->required();
  c_score->add_option("--flows", alias.flows,
                      ".flo directory or JSON manifest (enables motion "
                      "compensation)");
  add_gaze(c_score, alias.gaze);
  c_score->add_flag("--linear-input", alias.linear_input,
                    "Frames are display-linear");
  c_score->add_option("--beta", alias.beta, "Pooling exponent")
      ->capture_default_str();
  c_score->callback(
      [&] { run = [&] { return cmd_aliasing_score(g, alias); }; });

  CffArgs cff;
  auto* c_cff = app.add_subcommand("cff", "Critical flicker frequency table");
  c_cff->add_option("--ecc", cff.ecc, "Eccentricities (deg)")->delimiter(',');
  c_cff->add_option("--freqs", cff.freqs, "Spatial frequencies (cpd)")
      ->delimiter(',');
  c_cff->add_option("--cmax", cff.c_max, "Maximum contrast")
      ->capture_default_str();
  c_cff->callback([&] { run = [&] { return cmd_cff(g, cff); }; });

  FitArgs fit;
  auto* c_fit = app.add_subcommand("fit", "Calibration");
  c_fit->require_subcommand(1);
  auto* c_delange = c_fit->add_subcommand("delange", "De Lange polynomial");
  c_delange->add_option("--samples", fit.samples, "CSV f_t_hz,sensitivity")
      ->required();
  c_delange->add_option("--degree", fit.degree, "Polynomial degree")
      ->capture_default_str();
  auto* c_shape = c_fit->add_subcommand("shape", "Shape parameters b1..b8");
  auto* c_cv = c_fit->add_subcommand("cv", "k-fold cross-validation");
  for (auto* c : {c_shape, c_cv}) {
    c->add_option("--thresholds", fit.thresholds, "Thresholds CSV")
        ->required();
    c->add_option("--mode", fit.mode, "pooled or nominal")
        ->capture_default_str();
    c->add_option("--saturated", fit.saturated, "exclude, censor or include")
        ->capture_default_str();
    c->add_option("--r", fit.r, "Fixed Minkowski exponent")
        ->capture_default_str();
    c->add_option("--restarts", fit.restarts, "Optimizer starts")
        ->capture_default_str();
  }
  c_cv->add_option("--folds", fit.folds, "Fold count")->capture_default_str();
  auto* c_psy = c_fit->add_subcommand("psychometric", "Psychometric MLE");
  c_psy->add_option("--detections", fit.detections, "CSV id,c_jnd,trials,correct")
      ->required();
  c_psy->add_option("--components", fit.components,
                    "JSON {id: [C_JND components]} to estimate r");
  c_psy->add_flag("--no-lapse", fit.no_lapse, "Keep the lapse rate fixed");
  c_delange->callback([&] { run = [&] { return cmd_fit_delange(g, fit); }; });
  c_shape->callback([&] { run = [&] { return cmd_fit_shape(g, fit); }; });
  c_cv->callback([&] { run = [&] { return cmd_fit_cv(g, fit); }; });
  c_psy->callback(
      [&] { run = [&] { return cmd_fit_psychometric(g, fit); }; });

  GratingSpec spec;
  auto* c_stim = app.add_subcommand("stimulus", "Write a grating stimulus");
  c_stim->add_option("--fh", spec.f_h, "Horizontal frequency (cpd)");
  c_stim->add_option("--fv", spec.f_v, "Vertical frequency (cpd)");
  c_stim->add_option("--ft", spec.f_t, "Temporal frequency (Hz)");
  c_stim->add_option("--contrast", spec.contrast, "Weber amplitude");
  c_stim->add_option("--background", spec.background, "Display-linear")
      ->capture_default_str();
  c_stim->add_option("--diameter", spec.window_diameter, "Window (deg)")
      ->capture_default_str();
  c_stim->add_option("--sigma", spec.falloff_sigma, "Falloff (deg)")
      ->capture_default_str();
  c_stim->add_option("--phase", spec.temporal_phase, "Temporal phase (rad)");
  c_stim->add_option("--frames", spec.n_frames, "Frame count")
      ->capture_default_str();
  c_stim->add_option("--size", spec.size_px, "Patch size (px)")
      ->capture_default_str();
  c_stim->callback([&] { run = [&] { return cmd_stimulus(g, spec); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  try {
    return run ? run() : 2;
  } catch (const InputError& e) {
    std::cerr << "tvis: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "tvis: " << e.what() << "\n";
    return 1;
  }
}
