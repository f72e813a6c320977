// Copyright 2026 The Strata Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// strata: batch front-end and steering server launcher.
//
// Exit codes: 0 success, 2 bad configuration, 3 numerical failure,
// 4 service / I/O failure (e.g. port in use, unwritable output).

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "strata/errors.hpp"
#include "strata/export.hpp"
#include "strata/gait.hpp"
#include "strata/model_io.hpp"
#include "strata/shapefield.hpp"
#include "strata/steer/server.hpp"
#include "strata/steer/session.hpp"

namespace {

using namespace strata;

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitService = 4;

struct ServiceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Log level from STRATA_LOG_LEVEL: quiet, info (default) or debug.
int log_level() {
  static const int level = [] {
    const char* v = std::getenv("STRATA_LOG_LEVEL");
    const std::string s = v ? v : "info";
    return s == "quiet" ? 0 : s == "debug" ? 2 : 1;
  }();
  return level;
}

void log_info(const std::string& msg) {
  if (log_level() >= 1) std::cerr << "strata: " << msg << '\n';
}

struct Common {
  std::string model;
  std::string out = "-";
  std::size_t grid = 0;
  std::string format;
  unsigned seed = 0;
  double step = std::numbers::pi / 2000.0;
};

void add_common(CLI::App* app, Common& c, std::size_t default_grid, const std::string& default_format,
                std::size_t min_grid = 32) {
  c.grid = default_grid;
  c.format = default_format;
  app->add_option("--model", c.model, "model JSON file")->required()->check(CLI::ExistingFile);
  app->add_option("--out", c.out, "output path ('-' for stdout)")->capture_default_str();
  app->add_option("--grid", c.grid, "grid nodes per axis (>= " + std::to_string(min_grid) + ")")
      ->capture_default_str()
      ->check(CLI::Range(min_grid, std::size_t{100000}));
  app->add_option("--format", c.format, "output format")->capture_default_str()->check(CLI::IsMember({"json", "csv"}));
  app->add_option("--seed", c.seed, "seed for randomized steps (all current commands are deterministic)");
  app->add_option("--step", c.step, "integration step in phase (radians)")->capture_default_str()->check(CLI::PositiveNumber);
}

// Writes via a callback to a file or stdout.
template <class F>
void emit(const std::string& path, F&& write) {
  if (path == "-") {
    write(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ServiceError("cannot write '" + path + "'");
  write(out);
  if (!out) throw ServiceError("write failed for '" + path + "'");
}

// "stem.ext" + tag -> "stem_tag.ext".
std::string tagged(const std::string& path, const std::string& tag) {
  if (path == "-") return path;
  const auto slash = path.find_last_of('/');
  const auto dot = path.find_last_of('.');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return path + "_" + tag;
  return path.substr(0, dot) + "_" + tag + path.substr(dot);
}

std::array<std::size_t, 2> parse_legs(const std::vector<std::size_t>& v, const ModelSpec& model) {
  if (v.size() != 2) throw ModelError("--legs takes two one-based leg numbers");
  for (std::size_t l : v)
    if (l < 1 || l > model.legs.size()) throw ModelError("--legs: leg " + std::to_string(l) + " out of range");
  return {v[0] - 1, v[1] - 1};
}

GaitOptions gait_options(const Common& c) {
  GaitOptions o;
  o.step = c.step;
  return o;
}

// ------------------------------------------------------------- field-dump

struct FieldDumpArgs {
  Common c;
  std::vector<std::size_t> legs{1, 2};
  std::string singularities;
  bool saddles = false;
};

int run_field_dump(const FieldDumpArgs& a) {
  const ModelSpec model = load_model(a.c.model);
  const auto legs = parse_legs(a.legs, model);
  const auto s = ReducedShapeSubspace::of(model, legs[0], legs[1]);
  // The critical-point search seeds from its own grid of at least 101 nodes.
  const auto sing = find_singularities(s, std::max<std::size_t>(a.c.grid, 101), a.saddles);
  // Fail when no usable no-slip direction exists anywhere on the grid.
  const auto ai = linspace(s.lower(0), s.upper(0), a.c.grid);
  const auto aj = linspace(s.lower(1), s.upper(1), a.c.grid);
  bool any_regular = false;
  for (double x : ai)
    for (double y : aj) any_regular = any_regular || grad_f(s, {x, y}).norm() > kSingularTol;
  if (!any_regular) throw SingularShape("singular region covers the whole grid", s.lower);

  if (a.c.format == "json") {
    emit(a.c.out, [&](std::ostream& o) { o << field_json(s, a.c.grid, sing).dump() << '\n'; });
  } else {
    emit(a.c.out, [&](std::ostream& o) { write_field_csv(o, s, a.c.grid); });
    std::string side = a.singularities;
    if (side.empty() && a.c.out != "-") side = tagged(a.c.out, "singularities");
    if (!side.empty()) emit(side, [&](std::ostream& o) { write_singularities_csv(o, sing); });
  }
  log_info(std::to_string(sing.size()) + " singular configuration(s)");
  return 0;
}

// ------------------------------------------------------------------ panel

struct PanelArgs {
  Common c;
  std::vector<std::vector<std::size_t>> legs;
  std::vector<double> bounds;
  std::string gait;
  std::size_t two_beat_samples = 0;
};

std::optional<TwoBeatGaitSpec> load_two_beat(const ModelSpec& model, const std::string& path) {
  if (path.empty()) return model.legs.size() == 4 ? std::optional(fiducial_trot(model)) : std::nullopt;
  GaitFile g = gait_from_json(model, read_json_file(path, "gait file"));
  if (!g.two_beat) throw ModelError("gait file '" + path + "' holds a single subgait, not a two-beat gait");
  return g.two_beat;
}

int run_panel(const PanelArgs& a) {
  const ModelSpec model = load_model(a.c.model);
  std::vector<std::array<std::size_t, 2>> pairs;
  for (const auto& l : a.legs) pairs.push_back(parse_legs(l, model));
  if (pairs.empty()) {
    if (model.legs.size() == 4) {
      for (const auto& p : pairing_legs(Pairing::trot)) pairs.push_back(p);
    } else {
      pairs.push_back({0, 1});
    }
  }
  if (!a.bounds.empty() && (a.bounds.size() != 2 || !(a.bounds[0] < a.bounds[1])))
    throw ModelError("--bounds takes LO HI with LO < HI");
  for (const auto& p : pairs) {
    auto s = ReducedShapeSubspace::of(model, p[0], p[1]);
    if (!a.bounds.empty())
      s = s.with_bounds(Eigen::Vector2d::Constant(a.bounds[0]), Eigen::Vector2d::Constant(a.bounds[1]));
    const StratifiedPanelGrid g = stratified_panel(model, s, a.c.grid);
    const std::string path =
        pairs.size() == 1 ? a.c.out : tagged(a.c.out, "legs" + std::to_string(p[0] + 1) + std::to_string(p[1] + 1));
    if (a.c.format == "json")
      emit(path, [&](std::ostream& o) { o << panel_json(g).dump() << '\n'; });
    else
      emit(path, [&](std::ostream& o) { write_panel_csv(o, g); });
  }
  if (a.two_beat_samples > 0) {
    const auto gait = load_two_beat(model, a.gait);
    if (!gait) throw ModelError("two-beat panel needs a gait file (or a four-legged model)");
    FlowOptions fo;
    const auto panel = two_beat_panel(model, *gait, a.two_beat_samples, fo);
    emit(tagged(a.c.out, "two_beat"), [&](std::ostream& o) {
      if (a.c.format == "json") {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& s : panel)
          rows.push_back({{"tau", s.tau}, {"dz", {s.dz(0), s.dz(1), s.dz(2)}}});
        const Eigen::Vector3d I = integrate_two_beat_panel(panel);
        o << nlohmann::json{{"samples", rows}, {"integral", {I(0), I(1), I(2)}}}.dump() << '\n';
      } else {
        write_two_beat_panel_csv(o, panel);
      }
    });
  }
  return 0;
}

// ------------------------------------------------------------- trajectory

struct TrajectoryArgs {
  Common c;
  std::string gait;
  std::string schedule;
  std::string pairing = "trot";
  double t0 = -0.8;
  double t_pi = -0.8;
  std::vector<double> u13;
  std::vector<double> u24;
  std::size_t cycles = 1;
  std::size_t samples = 64;
  std::vector<double> gains;
  double delta = std::numbers::pi / 4.0;
  std::size_t cycles_per_gain = 5;
  std::vector<double> pose0;
};

ControlInputs pair_input(const std::vector<double>& v, const ControlInputs& dflt, const char* flag) {
  if (v.empty()) return dflt;
  if (v.size() != 2) throw ModelError(std::string(flag) + " takes U1 U2");
  return {v[0], v[1]};
}

int run_trajectory(const TrajectoryArgs& a) {
  const ModelSpec model = load_model(a.c.model);
  const GaitOptions opt = gait_options(a.c);
  SE2 g0;
  if (!a.pose0.empty()) {
    if (a.pose0.size() != 3) throw ModelError("--pose0 takes X Y THETA");
    g0 = {a.pose0[0], a.pose0[1], a.pose0[2]};
  }
  std::optional<GaitFile> file;
  if (!a.gait.empty()) file = gait_from_json(model, read_json_file(a.gait, "gait file"));

  if (file && file->subgait) {
    const Trajectory t = reconstruct_body_trajectory(model, *file->subgait, g0, a.samples, opt);
    nlohmann::json gait = {{"version", kGaitFileVersion}, {"subgait", subgait_to_json(*file->subgait)}};
    if (a.c.format == "json")
      emit(a.c.out, [&](std::ostream& o) { o << trajectory_to_json(model, gait, t).dump() << '\n'; });
    else
      emit(a.c.out, [&](std::ostream& o) { write_trajectory_csv(o, t); });
    return 0;
  }

  TwoBeatGaitSpec gait;
  if (file) {
    gait = *file->two_beat;
  } else {
    if (model.legs.size() != 4) throw ModelError("inline two-beat gaits need a four-legged model; pass --gait");
    gait = make_two_beat(model, pairing_from_string(a.pairing), a.t0, a.t_pi);
  }
  gait.first.inputs = pair_input(a.u13, gait.first.inputs, "--u13");
  gait.second.inputs = pair_input(a.u24, gait.second.inputs, "--u24");

  std::vector<CycleInputs> schedule;
  if (!a.schedule.empty()) {
    const nlohmann::json j = read_json_file(a.schedule, "schedule file");
    try {
      schedule = schedule_from_json(j.is_object() ? j.at("schedule") : j);
    } catch (const nlohmann::json::exception& e) {
      throw ModelError(std::string("schedule file: ") + e.what());
    }
  } else if (!a.gains.empty()) {
    // Course held fixed, speed raised gain by gain.
    for (double g : a.gains)
      for (std::size_t k = 0; k < a.cycles_per_gain; ++k)
        schedule.push_back({{g * std::cos(a.delta), gait.first.inputs.u2}, {g * std::sin(a.delta), gait.second.inputs.u2}});
  } else if (file && file->schedule) {
    schedule = *file->schedule;
  } else {
    schedule.assign(a.cycles, CycleInputs{gait.first.inputs, gait.second.inputs});
  }

  const Trajectory t = run_two_beat(model, gait, schedule, g0, a.samples, opt);
  nlohmann::json gj = gait_to_json(gait);
  nlohmann::json sched = nlohmann::json::array();
  for (const auto& u : schedule) sched.push_back(steer::inputs_json(u));
  gj["schedule"] = sched;
  if (a.c.format == "json")
    emit(a.c.out, [&](std::ostream& o) { o << trajectory_to_json(model, gj, t).dump() << '\n'; });
  else
    emit(a.c.out, [&](std::ostream& o) { write_trajectory_csv(o, t); });
  if (t.out_of_bounds) log_info("warning: a stance path left the swing limits");
  if (t.inputs_out_of_range) log_info("warning: inputs outside [-1, 1]");
  return 0;
}

// ----------------------------------------------------- displacement-field

struct FieldArgs {
  Common c;
  std::string gait;
  std::string vary = "scaling";
};

int run_displacement_field(const FieldArgs& a) {
  const ModelSpec model = load_model(a.c.model);
  const auto gait = load_two_beat(model, a.gait);
  if (!gait) throw ModelError("displacement fields need a gait file (or a four-legged model)");
  const InputAxis vary = a.vary == "scaling" ? InputAxis::scaling : InputAxis::sliding;
  const DisplacementField f = displacement_field(model, *gait, vary, a.c.grid, gait_options(a.c));
  if (a.c.format == "json")
    emit(a.c.out, [&](std::ostream& o) { o << displacement_field_json(f).dump() << '\n'; });
  else
    emit(a.c.out, [&](std::ostream& o) { write_displacement_field_csv(o, f); });
  return 0;
}

// ------------------------------------------------------------------ serve

struct ServeArgs {
  std::string model;
  std::string gait;
  std::string host = "127.0.0.1";
  unsigned short port = 8765;
  int tick_ms = 20;
  std::size_t decimation = 1;
  double rate = std::numbers::pi;
  std::size_t history = 256;
  double step = std::numbers::pi / 2000.0;
};

int run_serve(const ServeArgs& a) {
  const ModelSpec model = load_model(a.model);
  const auto gait = load_two_beat(model, a.gait);
  if (!gait) throw ModelError("serve needs a gait file (or a four-legged model)");
  steer::SessionConfig sc;
  sc.history_capacity = a.history;
  sc.phase_per_sec = a.rate;
  sc.gait.step = a.step;
  steer::ServerConfig cfg;
  cfg.tick = std::chrono::milliseconds(a.tick_ms);
  cfg.decimation = a.decimation;

  steer::net::io_context io;
  std::unique_ptr<steer::Server> server;
  try {
    server = std::make_unique<steer::Server>(
        io, steer::tcp::endpoint(steer::net::ip::make_address(a.host), a.port), steer::Session(model, *gait, sc), cfg);
  } catch (const boost::system::system_error& e) {
    throw ServiceError("cannot listen on " + a.host + ":" + std::to_string(a.port) + ": " + e.what());
  }
  server->start();
  steer::net::signal_set signals(io, SIGINT, SIGTERM);
  signals.async_wait([&](const boost::system::error_code&, int) {
    server->stop();
    io.stop();
  });
  std::cout << "listening on " << a.host << ":" << server->port() << std::endl;
  io.run();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"strata: geometric gait design for planar no-slip legged systems"};
  app.require_subcommand(1);

  FieldDumpArgs fd;
  auto* c_fd = app.add_subcommand("field-dump", "constraint field F, its gradient and no-slip basis over a stance pair");
  add_common(c_fd, fd.c, 101, "csv");
  c_fd->add_option("--legs", fd.legs, "stance pair, one-based")->expected(2)->capture_default_str();
  c_fd->add_option("--singularities", fd.singularities, "singularity sidecar path (csv; default <out>_singularities.csv)");
  c_fd->add_flag("--saddles", fd.saddles, "also report saddle points of F");

  PanelArgs pa;
  auto* c_pa = app.add_subcommand("panel", "stratified panels per stance pair, optional two-beat panel");
  add_common(c_pa, pa.c, 101, "csv");
  c_pa->add_option("--legs", pa.legs, "stance pair, one-based (repeatable)")->expected(2)->allow_extra_args(false);
  c_pa->add_option("--bounds", pa.bounds, "override both axes' range: LO HI")->expected(2);
  c_pa->add_option("--gait", pa.gait, "gait file for the two-beat panel");
  c_pa->add_option("--two-beat", pa.two_beat_samples, "also write the two-beat panel with this many phase samples");

  TrajectoryArgs tr;
  auto* c_tr = app.add_subcommand("trajectory", "body trajectory of a subgait or a two-beat gait");
  add_common(c_tr, tr.c, 32, "json");
  c_tr->add_option("--gait", tr.gait, "gait file (two-beat or single subgait)");
  c_tr->add_option("--schedule", tr.schedule, "per-cycle inputs: [{\"u13\":[u1,u2],\"u24\":[u1,u2]}, ...]");
  c_tr->add_option("--pairing", tr.pairing, "inline gait pairing")->capture_default_str()->check(CLI::IsMember({"trot", "bound", "pace"}));
  c_tr->add_option("--t0", tr.t0, "inline gait base flow time to stance start")->capture_default_str();
  c_tr->add_option("--tpi", tr.t_pi, "inline gait base flow time to stance end")->capture_default_str();
  c_tr->add_option("--u13", tr.u13, "first subgait inputs U1 U2")->expected(2);
  c_tr->add_option("--u24", tr.u24, "second subgait inputs U1 U2")->expected(2);
  c_tr->add_option("--cycles", tr.cycles, "cycles with constant inputs (no schedule)")->capture_default_str();
  c_tr->add_option("--samples", tr.samples, "samples per half cycle (>= 16)")->capture_default_str()->check(CLI::Range(16, 100000));
  c_tr->add_option("--gains", tr.gains, "course-fixed speed staircase: scaling magnitudes a")->delimiter(',');
  c_tr->add_option("--delta", tr.delta, "course angle for --gains (radians)")->capture_default_str();
  c_tr->add_option("--cycles-per-gain", tr.cycles_per_gain, "cycles per --gains entry")->capture_default_str();
  c_tr->add_option("--pose0", tr.pose0, "initial pose X Y THETA")->expected(3);

  FieldArgs df;
  auto* c_df = app.add_subcommand("displacement-field", "net per-cycle displacement over an input plane");
  add_common(c_df, df.c, 41, "csv", 2);
  c_df->add_option("--gait", df.gait, "gait template file (default: forward trot)");
  c_df->add_option("--vary", df.vary, "input pair to sweep")->capture_default_str()->check(CLI::IsMember({"scaling", "sliding"}));

  ServeArgs sv;
  auto* c_sv = app.add_subcommand("serve", "run the live steering service (WebSocket + HTTP)");
  c_sv->add_option("--model", sv.model, "model JSON file")->required()->check(CLI::ExistingFile);
  c_sv->add_option("--gait", sv.gait, "gait template file (default: forward trot)");
  c_sv->add_option("--host", sv.host, "bind address")->capture_default_str();
  c_sv->add_option("--port", sv.port, "TCP port (0 picks a free port)")->capture_default_str();
  c_sv->add_option("--tick-ms", sv.tick_ms, "simulation tick")->capture_default_str()->check(CLI::Range(1, 10000));
  c_sv->add_option("--decimation", sv.decimation, "broadcast every n-th tick")->capture_default_str()->check(CLI::PositiveNumber);
  c_sv->add_option("--rate", sv.rate, "phase per second")->capture_default_str()->check(CLI::PositiveNumber);
  c_sv->add_option("--history", sv.history, "per-cycle ring buffer length")->capture_default_str()->check(CLI::PositiveNumber);
  c_sv->add_option("--step", sv.step, "integration step in phase")->capture_default_str()->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (c_fd->parsed()) return run_field_dump(fd);
    if (c_pa->parsed()) return run_panel(pa);
    if (c_tr->parsed()) return run_trajectory(tr);
    if (c_df->parsed()) return run_displacement_field(df);
    if (c_sv->parsed()) return run_serve(sv);
  } catch (const SingularShape& e) {
    std::cerr << "strata: numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const IntegrationError& e) {
    std::cerr << "strata: numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const ServiceError& e) {
    std::cerr << "strata: " << e.what() << '\n';
    return kExitService;
  } catch (const std::invalid_argument& e) {
    std::cerr << "strata: configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "strata: numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitConfig;
}
