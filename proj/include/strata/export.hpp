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

// Gait files and data exports (CSV / JSON).
//
// Numbers are printed with 17 significant digits so files round-trip and
// reruns are byte-identical. Angles are radians. Legs are one-based in
// files and zero-based in memory.

#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "strata/errors.hpp"
#include "strata/gait.hpp"
#include "strata/model.hpp"
#include "strata/model_io.hpp"
#include "strata/shapefield.hpp"

namespace strata {

inline constexpr int kGaitFileVersion = 1;

inline std::string fmt(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------- gait files
//
// Two-beat gait file:
//   { "version": 1, "pairing": "trot",
//     "first":  { "legs": [1, 3], "alpha_star": [0, 0], "t0": -0.8, "t_pi": -0.8, "inputs": [1, 0] },
//     "second": { "legs": [2, 4], ... },
//     "schedule": [ { "u13": [u1, u2], "u24": [u1, u2] }, ... ] }       (optional)
// Single subgait file:
//   { "version": 1, "subgait": { "legs": [1, 2], ... } }
// "legs" defaults to the pairing's legs; "alpha_star" to the origin;
// "inputs" to [1, 0]. Schedule keys name the first and second subgait.

struct GaitFile {
  std::optional<TwoBeatGaitSpec> two_beat;
  std::optional<SubgaitSpec> subgait;
  std::optional<std::vector<CycleInputs>> schedule;
};

inline ControlInputs inputs_from_json(const nlohmann::json& v) {
  if (!v.is_array() || v.size() != 2) throw ModelError("inputs must be [u1, u2]");
  ControlInputs u{v.at(0).get<double>(), v.at(1).get<double>()};
  if (!u.finite()) throw ModelError("inputs must be finite");
  return u;
}

inline SubgaitSpec subgait_from_json(const ModelSpec& model, const nlohmann::json& j,
                                     std::optional<std::array<std::size_t, 2>> default_legs) {
  std::array<std::size_t, 2> legs{};
  if (j.contains("legs")) {
    const auto& l = j.at("legs");
    if (!l.is_array() || l.size() != 2) throw ModelError("subgait legs must be [i, j]");
    for (std::size_t k = 0; k < 2; ++k) {
      const int v = l.at(k).get<int>();
      if (v < 1 || static_cast<std::size_t>(v) > model.legs.size())
        throw ModelError("subgait leg " + std::to_string(v) + " out of range");
      legs[k] = static_cast<std::size_t>(v - 1);
    }
  } else if (default_legs) {
    legs = *default_legs;
  } else {
    throw ModelError("subgait needs 'legs'");
  }
  SubgaitSpec s;
  s.subspace = ReducedShapeSubspace::of(model, legs[0], legs[1]);
  if (j.contains("alpha_star")) {
    const auto& a = j.at("alpha_star");
    if (!a.is_array() || a.size() != 2) throw ModelError("alpha_star must be [a_i, a_j]");
    s.alpha_star = {a.at(0).get<double>(), a.at(1).get<double>()};
  }
  s.t0 = j.at("t0").get<double>();
  s.t_pi = j.at("t_pi").get<double>();
  if (j.contains("inputs")) s.inputs = inputs_from_json(j.at("inputs"));
  if (!s.subspace.contains(s.alpha_star)) throw ModelError("alpha_star outside the swing limits");
  return s;
}

inline std::vector<CycleInputs> schedule_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ModelError("schedule must be an array");
  std::vector<CycleInputs> out;
  for (const auto& e : j) out.push_back({inputs_from_json(e.at("u13")), inputs_from_json(e.at("u24"))});
  return out;
}

inline GaitFile gait_from_json(const ModelSpec& model, const nlohmann::json& j) {
  try {
    if (!j.is_object()) throw ModelError("gait file: top level must be an object");
    if (j.contains("version") && j.at("version").get<int>() != kGaitFileVersion)
      throw ModelError("gait file: unsupported version " + j.at("version").dump());
    GaitFile g;
    if (j.contains("subgait")) {
      g.subgait = subgait_from_json(model, j.at("subgait"), std::nullopt);
    } else {
      const Pairing p = pairing_from_string(j.value("pairing", std::string("trot")));
      const bool quad = model.legs.size() == 4;
      const auto legs = pairing_legs(p);
      TwoBeatGaitSpec t;
      t.pairing = p;
      t.first = subgait_from_json(model, j.at("first"), quad ? std::optional(legs[0]) : std::nullopt);
      t.second = subgait_from_json(model, j.at("second"), quad ? std::optional(legs[1]) : std::nullopt);
      check_disjoint(t);
      g.two_beat = t;
    }
    if (j.contains("schedule")) g.schedule = schedule_from_json(j.at("schedule"));
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("gait file: ") + e.what());
  }
}

inline nlohmann::json read_json_file(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw ModelError(std::string("cannot open ") + what + " '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string(what) + " '" + path + "': " + e.what());
  }
}

inline nlohmann::json subgait_to_json(const SubgaitSpec& s) {
  return {{"legs", {s.subspace.i + 1, s.subspace.j + 1}},
          {"alpha_star", {s.alpha_star(0), s.alpha_star(1)}},
          {"t0", s.t0},
          {"t_pi", s.t_pi},
          {"inputs", {s.inputs.u1, s.inputs.u2}}};
}

inline nlohmann::json gait_to_json(const TwoBeatGaitSpec& g) {
  return {{"version", kGaitFileVersion},
          {"pairing", to_string(g.pairing)},
          {"first", subgait_to_json(g.first)},
          {"second", subgait_to_json(g.second)}};
}

// --------------------------------------------------------------- trajectory

inline nlohmann::json se2_json(const SE2& g) { return nlohmann::json::array({g.x, g.y, g.theta}); }

inline nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

/// Trajectory document. `net` is the SE(2) product of all stance
/// displacements; `net_sum` adds them component-wise (identical when no
/// subgait rotates). The turning radius is that of the last cycle.
inline nlohmann::json trajectory_to_json(const ModelSpec& model, const nlohmann::json& gait, const Trajectory& t) {
  nlohmann::json samples = nlohmann::json::array();
  for (const TrajectorySample& s : t.samples) {
    std::vector<int> beta;
    for (bool b : s.contact.beta) beta.push_back(b ? 1 : 0);
    samples.push_back({{"tau", s.tau},
                       {"pose", se2_json(s.pose)},
                       {"alpha", std::vector<double>(s.shape.alpha.data(), s.shape.alpha.data() + s.shape.alpha.size())},
                       {"beta", beta}});
  }
  nlohmann::json cycles = nlohmann::json::array();
  for (const SE2& z : t.per_cycle) cycles.push_back({{"z", se2_json(z)}, {"turning_radius", optional_json(turning_radius(z))}});
  return {{"model", model.name},
          {"gait", gait},
          {"samples", samples},
          {"per_cycle", cycles},
          {"net", se2_json(t.net_displacement)},
          {"net_sum", se2_json(t.net_sum)},
          {"turning_radius", t.per_cycle.empty() ? nlohmann::json(nullptr) : optional_json(turning_radius(t.per_cycle.back()))},
          {"out_of_bounds", t.out_of_bounds},
          {"inputs_out_of_range", t.inputs_out_of_range}};
}

inline void write_trajectory_csv(std::ostream& out, const Trajectory& t) {
  const std::size_t legs = t.samples.empty() ? 0 : t.samples.front().shape.size();
  out << "tau,x,y,theta";
  for (std::size_t k = 1; k <= legs; ++k) out << ",alpha" << k;
  for (std::size_t k = 1; k <= legs; ++k) out << ",beta" << k;
  out << '\n';
  for (const TrajectorySample& s : t.samples) {
    out << fmt(s.tau) << ',' << fmt(s.pose.x) << ',' << fmt(s.pose.y) << ',' << fmt(s.pose.theta);
    for (std::size_t k = 0; k < legs; ++k) out << ',' << fmt(s.shape[k]);
    for (std::size_t k = 0; k < legs; ++k) out << ',' << (s.contact.beta[k] ? 1 : 0);
    out << '\n';
  }
}

// -------------------------------------------------------------- shape field

/// Grid of F, its gradient and the no-slip basis over the subspace bounds,
/// row-major in alpha_i. Basis columns are null where the gradient vanishes.
inline void write_field_csv(std::ostream& out, const ReducedShapeSubspace& s, std::size_t n) {
  const auto ai = linspace(s.lower(0), s.upper(0), n);
  const auto aj = linspace(s.lower(1), s.upper(1), n);
  out << "alpha1,alpha2,F,dF1,dF2,b1,b2,singular_flag\n";
  for (double a : ai)
    for (double b : aj) {
      const FieldSample f = sample_field(s, {a, b});
      out << fmt(a) << ',' << fmt(b) << ',' << fmt(f.f_value) << ',' << fmt(f.grad(0)) << ',' << fmt(f.grad(1)) << ',';
      if (f.singular)
        out << "null,null,1\n";
      else
        out << fmt(f.basis(0)) << ',' << fmt(f.basis(1)) << ",0\n";
    }
}

inline void write_singularities_csv(std::ostream& out, const std::vector<Singularity>& sing) {
  out << "kind,alpha1,alpha2,F,grad_norm\n";
  for (const Singularity& s : sing)
    out << to_string(s.kind) << ',' << fmt(s.point(0)) << ',' << fmt(s.point(1)) << ',' << fmt(s.f_value) << ','
        << fmt(s.grad_norm) << '\n';
}

inline nlohmann::json singularities_json(const std::vector<Singularity>& sing) {
  nlohmann::json a = nlohmann::json::array();
  for (const Singularity& s : sing)
    a.push_back({{"kind", to_string(s.kind)},
                 {"alpha", {s.point(0), s.point(1)}},
                 {"F", s.f_value},
                 {"grad_norm", s.grad_norm}});
  return a;
}

inline nlohmann::json field_json(const ReducedShapeSubspace& s, std::size_t n, const std::vector<Singularity>& sing) {
  const auto ai = linspace(s.lower(0), s.upper(0), n);
  const auto aj = linspace(s.lower(1), s.upper(1), n);
  nlohmann::json rows = nlohmann::json::array();
  for (double a : ai)
    for (double b : aj) {
      const FieldSample f = sample_field(s, {a, b});
      rows.push_back({{"alpha", {a, b}},
                      {"F", f.f_value},
                      {"grad", {f.grad(0), f.grad(1)}},
                      {"basis", f.singular ? nlohmann::json(nullptr) : nlohmann::json({f.basis(0), f.basis(1)})},
                      {"singular", f.singular}});
    }
  return {{"legs", {s.i + 1, s.j + 1}}, {"grid", n}, {"samples", rows}, {"singularities", singularities_json(sing)}};
}

// -------------------------------------------------------------------- panels

inline void write_panel_csv(std::ostream& out, const StratifiedPanelGrid& g) {
  out << "alpha_i,alpha_j,dzx,dzy,dzth,flag\n";
  for (std::size_t a = 0; a < g.n; ++a)
    for (std::size_t b = 0; b < g.n; ++b) {
      const Eigen::Vector3d& v = g.at(a, b);
      out << fmt(g.axis_i[a]) << ',' << fmt(g.axis_j[b]) << ',';
      if (g.singular_at(a, b))
        out << "null,null,null,1\n";
      else
        out << fmt(v(0)) << ',' << fmt(v(1)) << ',' << fmt(v(2)) << ",0\n";
    }
}

inline nlohmann::json panel_json(const StratifiedPanelGrid& g) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t a = 0; a < g.n; ++a)
    for (std::size_t b = 0; b < g.n; ++b) {
      const Eigen::Vector3d& v = g.at(a, b);
      const bool sing = g.singular_at(a, b);
      rows.push_back({{"alpha", {g.axis_i[a], g.axis_j[b]}},
                      {"dz", sing ? nlohmann::json(nullptr) : nlohmann::json({v(0), v(1), v(2)})},
                      {"flag", sing ? 1 : 0}});
    }
  return {{"legs", {g.subspace.i + 1, g.subspace.j + 1}}, {"grid", g.n}, {"samples", rows}};
}

inline void write_two_beat_panel_csv(std::ostream& out, const std::vector<TwoBeatPanelSample>& p) {
  out << "tau,a_first_i,a_first_j,a_second_i,a_second_j,dzx,dzy,dzth\n";
  for (const TwoBeatPanelSample& s : p)
    out << fmt(s.tau) << ',' << fmt(s.point_first(0)) << ',' << fmt(s.point_first(1)) << ',' << fmt(s.point_second(0))
        << ',' << fmt(s.point_second(1)) << ',' << fmt(s.dz(0)) << ',' << fmt(s.dz(1)) << ',' << fmt(s.dz(2)) << '\n';
}

// ------------------------------------------------------- displacement field

inline const char* to_string(InputAxis a) { return a == InputAxis::scaling ? "scaling" : "sliding"; }

inline void write_displacement_field_csv(std::ostream& out, const DisplacementField& f) {
  const char* k = f.vary == InputAxis::scaling ? "u1" : "u2";
  out << k << "_first," << k << "_second,zx,zy,zth,flag\n";
  for (std::size_t a = 0; a < f.n; ++a)
    for (std::size_t b = 0; b < f.n; ++b) {
      const SE2& z = f.at(a, b);
      out << fmt(f.axis[a]) << ',' << fmt(f.axis[b]) << ',' << fmt(z.x) << ',' << fmt(z.y) << ',' << fmt(z.theta) << ','
          << (f.flagged[a * f.n + b] ? 1 : 0) << '\n';
    }
}

inline nlohmann::json displacement_field_json(const DisplacementField& f) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t a = 0; a < f.n; ++a)
    for (std::size_t b = 0; b < f.n; ++b)
      rows.push_back({{"u", {f.axis[a], f.axis[b]}}, {"z", se2_json(f.at(a, b))}, {"flag", f.flagged[a * f.n + b] ? 1 : 0}});
  return {{"vary", to_string(f.vary)}, {"grid", f.n}, {"samples", rows}};
}

}  // namespace strata
