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

// Subgaits, body reconstruction, stratified panels and two-beat gaits.
//
// A subgait lives in the shape plane of one stance pair. Its stance path is a
// no-slip flow along one F level set through a reference shape alpha*:
//
//   alpha_0  = flow(alpha*,  u1 * t0   + u2)
//   alpha_pi = flow(alpha*, -u1 * t_pi + u2)
//
// traversed forward on tau in [0, pi] with both feet pinned, then retraced
// in reverse on (pi, 2 pi) with both feet lifted. Phase tau is mapped to arc
// length linearly, so the pacing is (stance length) / pi per unit phase.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "strata/errors.hpp"
#include "strata/model.hpp"
#include "strata/se2.hpp"
#include "strata/shapefield.hpp"

namespace strata {

/// Scaling (u1) and sliding (u2) flow inputs of one subgait.
struct ControlInputs {
  double u1 = 1.0;
  double u2 = 0.0;

  bool finite() const { return std::isfinite(u1) && std::isfinite(u2); }
  /// Inputs outside [-1, 1] still execute; they are only flagged.
  bool in_recommended_range() const { return std::abs(u1) <= 1.0 && std::abs(u2) <= 1.0; }
  bool operator==(const ControlInputs&) const = default;
};

struct SubgaitSpec {
  ReducedShapeSubspace subspace;
  Eigen::Vector2d alpha_star = Eigen::Vector2d::Zero();
  double t0 = 0.0;
  double t_pi = 0.0;
  ControlInputs inputs;

  /// Signed arc length from alpha* to the stance start.
  double start_offset() const { return inputs.u1 * t0 + inputs.u2; }
  /// Signed arc length from alpha* to the stance end.
  double end_offset() const { return -inputs.u1 * t_pi + inputs.u2; }
  double stance_length() const { return end_offset() - start_offset(); }

  SubgaitSpec with_inputs(const ControlInputs& u) const {
    SubgaitSpec s = *this;
    s.inputs = u;
    return s;
  }
};

enum class Pairing { trot, bound, pace };

inline const char* to_string(Pairing p) {
  switch (p) {
    case Pairing::trot: return "trot";
    case Pairing::bound: return "bound";
    case Pairing::pace: return "pace";
  }
  return "?";
}

inline Pairing pairing_from_string(const std::string& s) {
  if (s == "trot") return Pairing::trot;
  if (s == "bound") return Pairing::bound;
  if (s == "pace") return Pairing::pace;
  throw ModelError("unknown pairing '" + s + "' (expected trot, bound or pace)");
}

/// Zero-based stance pairs of a quadruped for each two-beat pairing:
/// trot {1,3}/{2,4}, bound {1,2}/{3,4}, pace {2,3}/{4,1} in one-based legs.
inline std::array<std::array<std::size_t, 2>, 2> pairing_legs(Pairing p) {
  switch (p) {
    case Pairing::trot: return {{{0, 2}, {1, 3}}};
    case Pairing::bound: return {{{0, 1}, {2, 3}}};
    case Pairing::pace: return {{{1, 2}, {3, 0}}};
  }
  return {{{0, 2}, {1, 3}}};
}

/// First subgait stances on [0, pi], second on [pi, 2 pi].
struct TwoBeatGaitSpec {
  SubgaitSpec first;
  SubgaitSpec second;
  Pairing pairing = Pairing::trot;
};

/// Per-cycle inputs for a two-beat gait.
struct CycleInputs {
  ControlInputs first;
  ControlInputs second;
  bool operator==(const CycleInputs&) const = default;
};

struct TrajectorySample {
  double tau = 0.0;  // absolute phase, 2 pi per cycle
  SE2 pose;
  ShapePoint shape;
  ContactState contact;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  SE2 net_displacement;
  std::vector<SE2> per_cycle;
  /// Component-wise sum of every stance displacement (the additive reading
  /// of the two-beat net displacement); equals net_displacement only when
  /// no subgait rotates.
  SE2 net_sum;
  bool out_of_bounds = false;
  bool inputs_out_of_range = false;
};

struct GaitOptions {
  /// Integration step in phase; rounded down so whole steps tile [0, pi]
  /// and the recorded samples fall on integration nodes.
  double step = std::numbers::pi / 2000.0;
  FlowOptions flow;
};

inline void check_subspace(const ModelSpec& model, const ReducedShapeSubspace& s) {
  if (s.model_legs != model.legs.size() || s.i >= model.legs.size() || s.j >= model.legs.size())
    throw ModelError("subspace does not belong to model '" + model.name + "'");
}

/// Stance start and end shapes.
inline std::pair<Eigen::Vector2d, Eigen::Vector2d> stance_endpoints(const SubgaitSpec& spec,
                                                                    const FlowOptions& opt = {}) {
  return {flow_to(spec.subspace, spec.alpha_star, spec.start_offset(), opt),
          flow_to(spec.subspace, spec.alpha_star, spec.end_offset(), opt)};
}

struct SubgaitState {
  Eigen::Vector2d alpha;
  std::array<bool, 2> beta{};
};

/// Shape and contact of a subgait at phase tau in [0, 2 pi).
inline SubgaitState subgait_shape_trajectory(const SubgaitSpec& spec, double tau, const FlowOptions& opt = {}) {
  constexpr double pi = std::numbers::pi;
  if (!(tau >= 0.0 && tau < 2.0 * pi)) throw std::invalid_argument("subgait_shape_trajectory: tau must be in [0, 2 pi)");
  const double s0 = spec.start_offset();
  const double len = spec.stance_length();
  if (tau <= pi) return {flow_to(spec.subspace, spec.alpha_star, s0 + len * tau / pi, opt), {true, true}};
  return {flow_to(spec.subspace, spec.alpha_star, spec.end_offset() - len * (tau - pi) / pi, opt), {false, false}};
}

/// Stratified panel value at one shape: the body velocity per unit arc
/// length of a stance path along the no-slip field, -A(alpha) * basis(alpha).
inline Eigen::Vector3d panel_value(const ReducedShapeSubspace& s, const Eigen::Vector2d& p,
                                   double singular_tol = kSingularTol) {
  return -(pair_connection(s.leg_i, s.leg_j, p(0), p(1)) * nonslip_field(s, p, singular_tol));
}

/// Stance path sampled at half integration steps, with its body motion.
struct StancePlan {
  SubgaitSpec spec;
  Eigen::Vector2d alpha0;
  Eigen::Vector2d alpha_pi;
  std::vector<Eigen::Vector2d> half_steps;  // 2N + 1 shapes over tau in [0, pi]
  std::size_t steps = 0;                    // N
  double pacing = 0.0;                      // arc length per unit phase
  std::vector<SE2> nodes;                   // N + 1 body poses relative to stance start
  bool out_of_bounds = false;

  SE2 displacement() const { return nodes.empty() ? SE2{} : nodes.back(); }
  /// Shape at integration node k while retracing during swing (k = 0 is the
  /// swing start, k = N the return to alpha0).
  const Eigen::Vector2d& swing_shape(std::size_t k) const { return half_steps[2 * (steps - k)]; }
  const Eigen::Vector2d& stance_shape(std::size_t k) const { return half_steps[2 * k]; }
};

inline std::size_t integration_steps(const GaitOptions& opt, std::size_t samples_per_phase) {
  if (!(opt.step > 0.0)) throw std::invalid_argument("gait step must be positive");
  if (samples_per_phase == 0) throw std::invalid_argument("samples_per_phase must be positive");
  auto n = static_cast<std::size_t>(std::ceil(std::numbers::pi / opt.step - 1e-9));
  n = ((n + samples_per_phase - 1) / samples_per_phase) * samples_per_phase;
  return n;
}

namespace detail {

inline StancePlan trace_stance(const SubgaitSpec& spec, std::size_t steps, const FlowOptions& opt) {
  StancePlan plan;
  plan.spec = spec;
  plan.steps = steps;
  const FlowPath to_start = flow(spec.subspace, spec.alpha_star, spec.start_offset(), opt);
  plan.alpha0 = to_start.end();
  const double len = spec.stance_length();
  const FlowPath path = flow_steps(spec.subspace, plan.alpha0, len, 2 * steps, opt);
  plan.half_steps = path.points;
  if (plan.half_steps.size() == 1) plan.half_steps.assign(2 * steps + 1, plan.alpha0);
  plan.alpha_pi = plan.half_steps.back();
  plan.pacing = len / std::numbers::pi;
  plan.out_of_bounds = to_start.out_of_bounds || path.out_of_bounds || !spec.subspace.contains(spec.alpha_star);
  return plan;
}

inline void integrate_plan(StancePlan& plan, const std::vector<SE2Velocity>& xi) {
  const double h = std::numbers::pi / static_cast<double>(plan.steps);
  integrate_body_velocity_sampled(SE2{}, xi, h, 0.0, &plan.nodes);
}

}  // namespace detail

/// Plans a stance using the reduced two-leg connection of the subgait's own
/// shape plane.
inline StancePlan plan_stance(const SubgaitSpec& spec, std::size_t steps, const FlowOptions& opt = {}) {
  StancePlan plan = detail::trace_stance(spec, steps, opt);
  std::vector<SE2Velocity> xi(plan.half_steps.size());
  if (plan.pacing != 0.0) {
    for (std::size_t k = 0; k < xi.size(); ++k)
      xi[k] = SE2Velocity::from(panel_value(spec.subspace, plan.half_steps[k], opt.singular_tol) * plan.pacing);
  }
  detail::integrate_plan(plan, xi);
  return plan;
}

/// Plans a stance by solving the stacked no-slip constraints of the whole
/// model at every sample (all legs' angles present, `swing` supplying the
/// retracing shape of the airborne pair). Independent of the reduced
/// two-leg connection used by plan_stance().
inline StancePlan plan_stance_full(const ModelSpec& model, const SubgaitSpec& spec, std::size_t steps,
                                   const StancePlan* swing, const FlowOptions& opt = {}) {
  check_subspace(model, spec.subspace);
  StancePlan plan = detail::trace_stance(spec, steps, opt);
  const auto n = static_cast<Eigen::Index>(model.legs.size());
  const ContactState contact = spec.subspace.stance();
  const std::vector<std::size_t> legs = contact.stance_legs();
  std::vector<SE2Velocity> xi(plan.half_steps.size());
  if (plan.pacing != 0.0) {
    for (std::size_t k = 0; k < xi.size(); ++k) {
      Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
      if (swing) {
        const Eigen::Vector2d& q = swing->half_steps[swing->half_steps.size() - 1 - k];
        alpha(static_cast<Eigen::Index>(swing->spec.subspace.i)) = q(0);
        alpha(static_cast<Eigen::Index>(swing->spec.subspace.j)) = q(1);
      }
      const Eigen::Vector2d& p = plan.half_steps[k];
      alpha(static_cast<Eigen::Index>(spec.subspace.i)) = p(0);
      alpha(static_cast<Eigen::Index>(spec.subspace.j)) = p(1);
      const Eigen::Vector2d rate = nonslip_field(spec.subspace, p, opt.singular_tol) * plan.pacing;
      const LocalConnection conn = local_connection(model, ShapePoint(alpha), contact);
      // Connection columns follow ascending leg order.
      Eigen::Vector2d ordered_rate;
      for (std::size_t c = 0; c < legs.size(); ++c)
        ordered_rate(static_cast<Eigen::Index>(c)) = legs[c] == spec.subspace.i ? rate(0) : rate(1);
      xi[k] = SE2Velocity::from(-(conn.a * ordered_rate));
    }
  }
  detail::integrate_plan(plan, xi);
  return plan;
}

/// One subgait cycle from pose g0: stance integration on [0, pi], frozen
/// pose while the pair swings back on (pi, 2 pi]. Legs outside the pair are
/// recorded at zero and airborne.
inline Trajectory reconstruct_body_trajectory(const ModelSpec& model, const SubgaitSpec& spec, const SE2& g0,
                                              std::size_t samples_per_phase = 64, const GaitOptions& opt = {}) {
  if (samples_per_phase < 16) throw std::invalid_argument("samples_per_phase must be at least 16");
  check_subspace(model, spec.subspace);
  if (!spec.inputs.finite()) throw std::invalid_argument("control inputs must be finite");
  const std::size_t steps = integration_steps(opt, samples_per_phase);
  const StancePlan plan = plan_stance(spec, steps, opt.flow);
  const std::size_t stride = steps / samples_per_phase;
  const ContactState stance = spec.subspace.stance();
  const ContactState air(std::vector<bool>(model.legs.size(), false));

  Trajectory t;
  t.samples.reserve(2 * samples_per_phase + 1);
  for (std::size_t k = 0; k <= samples_per_phase; ++k) {
    const std::size_t node = k * stride;
    t.samples.push_back({std::numbers::pi * static_cast<double>(k) / static_cast<double>(samples_per_phase),
                         compose(g0, plan.nodes[node]), spec.subspace.embed(plan.stance_shape(node)), stance});
  }
  const SE2 end = compose(g0, plan.displacement());
  for (std::size_t k = 1; k <= samples_per_phase; ++k) {
    const std::size_t node = k * stride;
    t.samples.push_back({std::numbers::pi * (1.0 + static_cast<double>(k) / static_cast<double>(samples_per_phase)),
                         end, spec.subspace.embed(plan.swing_shape(node)), air});
  }
  t.net_displacement = plan.displacement();
  t.net_sum = t.net_displacement;
  t.per_cycle = {t.net_displacement};
  t.out_of_bounds = plan.out_of_bounds;
  t.inputs_out_of_range = !spec.inputs.in_recommended_range();
  return t;
}

inline void check_disjoint(const TwoBeatGaitSpec& gait) {
  const auto& a = gait.first.subspace;
  const auto& b = gait.second.subspace;
  if (a.i == b.i || a.i == b.j || a.j == b.i || a.j == b.j)
    throw StanceOverlap("two-beat gait: stance pairs share a leg");
}

/// Half of a two-beat cycle: one pair in stance, the other retracing its
/// previous stance in the air.
struct HalfCycle {
  StancePlan stance;
  SE2 start_pose;
  SE2 end_pose;
};

/// Runs a half cycle from `start`. `swing` is the airborne pair's most recent
/// stance plan (it is retraced in reverse).
inline HalfCycle run_half_cycle(const ModelSpec& model, const SubgaitSpec& stance_spec, const StancePlan& swing,
                                const SE2& start, std::size_t steps, const FlowOptions& opt = {}) {
  HalfCycle h;
  h.stance = plan_stance_full(model, stance_spec, steps, &swing, opt);
  h.start_pose = start;
  h.end_pose = compose(start, h.stance.displacement());
  return h;
}

namespace detail {

inline ShapePoint two_pair_shape(std::size_t legs, const ReducedShapeSubspace& a, const Eigen::Vector2d& pa,
                                 const ReducedShapeSubspace& b, const Eigen::Vector2d& pb) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(legs));
  v(static_cast<Eigen::Index>(a.i)) = pa(0);
  v(static_cast<Eigen::Index>(a.j)) = pa(1);
  v(static_cast<Eigen::Index>(b.i)) = pb(0);
  v(static_cast<Eigen::Index>(b.j)) = pb(1);
  return ShapePoint(v);
}

// Appends samples (tau_base, tau_base + pi] of a half cycle.
inline void record_half(Trajectory& t, std::size_t legs, const HalfCycle& h, const StancePlan& swing,
                        double tau_base, std::size_t samples_per_phase) {
  const std::size_t stride = h.stance.steps / samples_per_phase;
  const ContactState contact = h.stance.spec.subspace.stance();
  for (std::size_t k = 1; k <= samples_per_phase; ++k) {
    const std::size_t node = k * stride;
    t.samples.push_back({tau_base + std::numbers::pi * static_cast<double>(k) / static_cast<double>(samples_per_phase),
                         compose(h.start_pose, h.stance.nodes[node]),
                         two_pair_shape(legs, h.stance.spec.subspace, h.stance.stance_shape(node), swing.spec.subspace,
                                        swing.swing_shape(node)),
                         contact});
  }
}

}  // namespace detail

/// Runs a two-beat gait for one cycle per schedule entry. Inputs are read at
/// each stance onset: entry c's `first` inputs at tau = 2 pi c, its `second`
/// inputs at tau = 2 pi c + pi.
inline Trajectory run_two_beat(const ModelSpec& model, const TwoBeatGaitSpec& gait,
                               std::span<const CycleInputs> schedule, const SE2& g0,
                               std::size_t samples_per_phase = 64, const GaitOptions& opt = {}) {
  if (samples_per_phase < 16) throw std::invalid_argument("samples_per_phase must be at least 16");
  check_subspace(model, gait.first.subspace);
  check_subspace(model, gait.second.subspace);
  check_disjoint(gait);
  const std::size_t steps = integration_steps(opt, samples_per_phase);
  const std::size_t legs = model.legs.size();

  Trajectory t;
  const CycleInputs initial = schedule.empty() ? CycleInputs{gait.first.inputs, gait.second.inputs} : schedule[0];
  // The second pair starts airborne, retracing a stance with its first inputs.
  StancePlan second_prev = plan_stance(gait.second.with_inputs(initial.second), steps, opt.flow);
  const auto first_start = flow_to(gait.first.subspace, gait.first.alpha_star,
                                   gait.first.with_inputs(initial.first).start_offset(), opt.flow);
  t.samples.push_back({0.0, g0,
                       detail::two_pair_shape(legs, gait.first.subspace, first_start, gait.second.subspace,
                                              second_prev.alpha_pi),
                       gait.first.subspace.stance()});
  SE2 pose = g0;
  for (std::size_t c = 0; c < schedule.size(); ++c) {
    const double base = 2.0 * std::numbers::pi * static_cast<double>(c);
    const HalfCycle h1 = run_half_cycle(model, gait.first.with_inputs(schedule[c].first), second_prev, pose, steps, opt.flow);
    detail::record_half(t, legs, h1, second_prev, base, samples_per_phase);
    const HalfCycle h2 =
        run_half_cycle(model, gait.second.with_inputs(schedule[c].second), h1.stance, h1.end_pose, steps, opt.flow);
    detail::record_half(t, legs, h2, h1.stance, base + std::numbers::pi, samples_per_phase);
    const SE2 d1 = h1.stance.displacement(), d2 = h2.stance.displacement();
    t.per_cycle.push_back(compose(d1, d2));
    t.net_sum = {t.net_sum.x + d1.x + d2.x, t.net_sum.y + d1.y + d2.y, t.net_sum.theta + d1.theta + d2.theta};
    t.out_of_bounds = t.out_of_bounds || h1.stance.out_of_bounds || h2.stance.out_of_bounds;
    t.inputs_out_of_range = t.inputs_out_of_range || !schedule[c].first.in_recommended_range() ||
                            !schedule[c].second.in_recommended_range();
    pose = h2.end_pose;
    second_prev = h2.stance;
  }
  t.net_displacement = compose(inverse(g0), pose);
  return t;
}

/// One cycle of a two-beat gait with the inputs stored in the spec.
inline Trajectory compose_two_beat(const ModelSpec& model, const TwoBeatGaitSpec& gait, const SE2& g0,
                                   std::size_t samples_per_phase = 64, const GaitOptions& opt = {}) {
  const CycleInputs once{gait.first.inputs, gait.second.inputs};
  return run_two_beat(model, gait, std::span<const CycleInputs>(&once, 1), g0, samples_per_phase, opt);
}

/// Two-beat gait on a quadruped with both reference shapes at the origin of
/// their shape planes and shared flow lengths.
inline TwoBeatGaitSpec make_two_beat(const ModelSpec& model, Pairing pairing, double t0, double t_pi,
                                     const CycleInputs& inputs = {}) {
  if (model.legs.size() != 4) throw ModelError("two-beat pairings need a four-legged model");
  const auto legs = pairing_legs(pairing);
  TwoBeatGaitSpec g;
  g.pairing = pairing;
  g.first = {ReducedShapeSubspace::of(model, legs[0][0], legs[0][1]), Eigen::Vector2d::Zero(), t0, t_pi, inputs.first};
  g.second = {ReducedShapeSubspace::of(model, legs[1][0], legs[1][1]), Eigen::Vector2d::Zero(), t0, t_pi, inputs.second};
  return g;
}

/// Forward trot used throughout as the fiducial gait.
inline TwoBeatGaitSpec fiducial_trot(const ModelSpec& model) { return make_two_beat(model, Pairing::trot, -0.8, -0.8); }

struct StratifiedPanelGrid {
  ReducedShapeSubspace subspace;
  std::size_t n = 0;
  std::vector<double> axis_i;            // alpha_i values
  std::vector<double> axis_j;            // alpha_j values
  std::vector<Eigen::Vector3d> dz;       // row-major: [a * n + b] at (axis_i[a], axis_j[b]); NaN when singular
  std::vector<bool> singular;
  /// +1: panel values are for paths running along the no-slip field.
  /// Paths running against it see the negated panel.
  int orientation = +1;

  const Eigen::Vector3d& at(std::size_t a, std::size_t b) const { return dz[a * n + b]; }
  bool singular_at(std::size_t a, std::size_t b) const { return singular[a * n + b]; }
};

inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t k = 0; k < n; ++k)
    v[k] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
  return v;
}

/// Stratified panel sampled on an n x n grid over the subspace bounds.
inline StratifiedPanelGrid stratified_panel(const ModelSpec& model, const ReducedShapeSubspace& s, std::size_t grid_n,
                                            double singular_tol = kSingularTol) {
  if (grid_n < 32) throw std::invalid_argument("stratified_panel: grid_n must be at least 32");
  check_subspace(model, s);
  StratifiedPanelGrid g;
  g.subspace = s;
  g.n = grid_n;
  g.axis_i = linspace(s.lower(0), s.upper(0), grid_n);
  g.axis_j = linspace(s.lower(1), s.upper(1), grid_n);
  g.dz.resize(grid_n * grid_n);
  g.singular.resize(grid_n * grid_n);
  for (std::size_t a = 0; a < grid_n; ++a) {
    for (std::size_t b = 0; b < grid_n; ++b) {
      const Eigen::Vector2d p(g.axis_i[a], g.axis_j[b]);
      const bool sing = !(grad_f(s, p).norm() > singular_tol);
      g.singular[a * grid_n + b] = sing;
      g.dz[a * grid_n + b] = sing ? Eigen::Vector3d::Constant(std::numeric_limits<double>::quiet_NaN())
                                  : panel_value(s, p, singular_tol);
    }
  }
  return g;
}

struct TwoBeatPanelSample {
  double tau = 0.0;
  Eigen::Vector2d point_first;   // on the first stance path at phase tau
  Eigen::Vector2d point_second;  // second subgait at phase -tau (its retraced stance)
  Eigen::Vector3d dz_first;      // per unit phase
  Eigen::Vector3d dz_second;
  Eigen::Vector3d dz;
};

/// Two-beat panel along the stance paths: the sum of the two subpanels at
/// phases tau and -tau, scaled by each subgait's pacing, for tau in [0, pi].
inline std::vector<TwoBeatPanelSample> two_beat_panel(const ModelSpec& model, const TwoBeatGaitSpec& gait,
                                                      std::size_t samples, const FlowOptions& opt = {}) {
  check_subspace(model, gait.first.subspace);
  check_subspace(model, gait.second.subspace);
  check_disjoint(gait);
  if (samples < 2) throw std::invalid_argument("two_beat_panel: need at least two samples");
  constexpr double pi = std::numbers::pi;
  const std::size_t steps = samples - 1;
  const StancePlan a = detail::trace_stance(gait.first, steps, opt);
  const StancePlan b = detail::trace_stance(gait.second, steps, opt);
  std::vector<TwoBeatPanelSample> out(samples);
  for (std::size_t k = 0; k < samples; ++k) {
    TwoBeatPanelSample& s = out[k];
    s.tau = pi * static_cast<double>(k) / static_cast<double>(steps);
    s.point_first = a.stance_shape(k);
    // Phase -tau of the second subgait lies on its swing branch, which
    // retraces the stance path: the same shape as its stance at +tau.
    s.point_second = b.stance_shape(k);
    s.dz_first = a.pacing != 0.0 ? Eigen::Vector3d(panel_value(gait.first.subspace, s.point_first, opt.singular_tol) * a.pacing)
                                 : Eigen::Vector3d::Zero();
    s.dz_second = b.pacing != 0.0 ? Eigen::Vector3d(panel_value(gait.second.subspace, s.point_second, opt.singular_tol) * b.pacing)
                                  : Eigen::Vector3d::Zero();
    s.dz = s.dz_first + s.dz_second;
  }
  return out;
}

/// Composite Simpson integral of the two-beat panel over tau in [0, pi]
/// (trapezoid when the sample count is even).
inline Eigen::Vector3d integrate_two_beat_panel(const std::vector<TwoBeatPanelSample>& p) {
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  if (p.size() < 2) return sum;
  const double h = p[1].tau - p[0].tau;
  const std::size_t n = p.size() - 1;
  if (n % 2 == 0) {
    for (std::size_t k = 0; k <= n; ++k) {
      const double w = (k == 0 || k == n) ? 1.0 : (k % 2 ? 4.0 : 2.0);
      sum += w * p[k].dz;
    }
    return sum * h / 3.0;
  }
  for (std::size_t k = 0; k <= n; ++k) sum += ((k == 0 || k == n) ? 0.5 : 1.0) * p[k].dz;
  return sum * h;
}

enum class InputAxis { scaling, sliding };

struct DisplacementField {
  InputAxis vary = InputAxis::scaling;
  std::size_t n = 0;
  std::vector<double> axis;  // input values along both grid axes
  std::vector<SE2> z;        // [a * n + b]: first subgait input axis[a], second axis[b]
  std::vector<bool> flagged; // stance left the swing limits

  const SE2& at(std::size_t a, std::size_t b) const { return z[a * n + b]; }
};

/// Net per-cycle displacement over an n x n grid of one input pair on
/// [-1, 1]^2; the other input of each subgait keeps its template value.
/// Each cell is the SE(2) product of the two stance displacements, and a
/// subgait's stance depends only on its own inputs, so the 2n distinct
/// stances are planned once and composed per cell.
inline DisplacementField displacement_field(const ModelSpec& model, const TwoBeatGaitSpec& tmpl, InputAxis vary,
                                            std::size_t grid_n, const GaitOptions& opt = {}) {
  if (grid_n < 2) throw std::invalid_argument("displacement_field: grid_n must be at least 2");
  check_subspace(model, tmpl.first.subspace);
  check_subspace(model, tmpl.second.subspace);
  check_disjoint(tmpl);
  // Same step count as run_two_beat at its default sampling, so a cell equals
  // the batch per-cycle displacement for those inputs.
  const std::size_t steps = integration_steps(opt, 64);
  DisplacementField f;
  f.vary = vary;
  f.n = grid_n;
  f.axis = linspace(-1.0, 1.0, grid_n);
  const auto inputs_at = [&](const ControlInputs& base, double v) {
    ControlInputs u = base;
    (vary == InputAxis::scaling ? u.u1 : u.u2) = v;
    return u;
  };
  std::vector<StancePlan> first(grid_n), second(grid_n);
  for (std::size_t k = 0; k < grid_n; ++k) {
    first[k] = plan_stance(tmpl.first.with_inputs(inputs_at(tmpl.first.inputs, f.axis[k])), steps, opt.flow);
    second[k] = plan_stance(tmpl.second.with_inputs(inputs_at(tmpl.second.inputs, f.axis[k])), steps, opt.flow);
  }
  f.z.resize(grid_n * grid_n);
  f.flagged.resize(grid_n * grid_n);
  for (std::size_t a = 0; a < grid_n; ++a)
    for (std::size_t b = 0; b < grid_n; ++b) {
      f.z[a * grid_n + b] = compose(first[a].displacement(), second[b].displacement());
      f.flagged[a * grid_n + b] = first[a].out_of_bounds || second[b].out_of_bounds;
    }
  return f;
}

/// Scaling inputs (u1 first, u1 second) on a circle of radius a, n uniform
/// directions starting at delta = 0.
inline std::vector<std::pair<double, double>> direction_gain_circle(double a, std::size_t n) {
  if (!(a > 0.0)) throw std::invalid_argument("direction_gain_circle: radius must be positive");
  std::vector<std::pair<double, double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double delta = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    out[k] = {a * std::cos(delta), a * std::sin(delta)};
  }
  return out;
}

/// Signed radius of the circle traced by repeating displacement z; nullopt
/// when z does not rotate (straight-line motion).
inline std::optional<double> turning_radius(const SE2& z) {
  const double th = wrap_angle(z.theta);
  if (std::abs(th) < 1e-9) return std::nullopt;
  return std::hypot(z.x, z.y) / (2.0 * std::sin(th / 2.0));
}

}  // namespace strata
