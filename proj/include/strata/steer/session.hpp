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

// Live steering session: a two-beat gait advanced in phase, with operator
// inputs latched at stance onsets.
//
// Phase is kept as (half index, phase within the half) so boundaries are
// hit exactly however the caller slices time. Half k covers phase
// (k pi, (k + 1) pi]; even halves stance the first pair, odd halves the
// second. Inputs for a half are latched when the session first steps past
// its starting boundary, so input sent while sitting on a boundary still
// applies to the half that begins there. Every half is computed with the
// same routine the batch runner uses, which makes a session driven by a
// fixed schedule reproduce the batch trajectory exactly.

#pragma once

#include <cmath>
#include <cstddef>
#include <deque>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "strata/gait.hpp"
#include "strata/model.hpp"
#include "strata/se2.hpp"

namespace strata::steer {

struct SessionConfig {
  std::size_t history_capacity = 256;
  double phase_per_sec = std::numbers::pi;  // one cycle every two seconds
  GaitOptions gait;
  // Step counts are rounded to a multiple of this, as in the batch runner;
  // equal values make session and batch results bit-identical.
  std::size_t samples_per_phase = 64;
};

struct CycleRecord {
  std::size_t cycle = 0;  // one-based
  SE2 z;
  std::optional<double> turning_radius;
  CycleInputs inputs;
};

inline nlohmann::json pose_json(const SE2& g) { return nlohmann::json::array({g.x, g.y, g.theta}); }

inline nlohmann::json inputs_json(const CycleInputs& u) {
  return {{"u13", {u.first.u1, u.first.u2}}, {"u24", {u.second.u1, u.second.u2}}};
}

inline nlohmann::json radius_json(const std::optional<double>& r) { return r ? nlohmann::json(*r) : nlohmann::json(nullptr); }

class Session {
 public:
  Session(ModelSpec model, TwoBeatGaitSpec gait, SessionConfig config = {})
      : model_(std::move(model)), gait_(std::move(gait)), config_(std::move(config)) {
    check_subspace(model_, gait_.first.subspace);
    check_subspace(model_, gait_.second.subspace);
    check_disjoint(gait_);
    if (config_.history_capacity == 0) throw std::invalid_argument("history capacity must be positive");
    if (!(config_.phase_per_sec > 0.0) || !std::isfinite(config_.phase_per_sec))
      throw std::invalid_argument("phase rate must be positive");
    steps_ = integration_steps(config_.gait, config_.samples_per_phase);
    pending_ = {gait_.first.inputs, gait_.second.inputs};
    latched_ = pending_;
  }

  const ModelSpec& model() const { return model_; }
  const TwoBeatGaitSpec& gait() const { return gait_; }
  double tau() const { return std::numbers::pi * static_cast<double>(half_index_) + phase_; }
  std::size_t cycle() const { return half_index_ / 2; }
  const SE2& pose() const { return pose_; }
  const CycleInputs& pending() const { return pending_; }
  const CycleInputs& latched() const { return latched_; }
  double rate() const { return config_.phase_per_sec; }
  const std::deque<CycleRecord>& history() const { return history_; }
  const std::optional<std::string>& paused() const { return paused_; }
  std::optional<SE2> last_z() const {
    if (history_.empty()) return std::nullopt;
    return history_.back().z;
  }

  void set_inputs(const CycleInputs& u) { pending_ = u; }
  void set_first_inputs(const ControlInputs& u) { pending_.first = u; }
  void set_second_inputs(const ControlInputs& u) { pending_.second = u; }

  void set_rate(double phase_per_sec) {
    if (!(phase_per_sec > 0.0) || !std::isfinite(phase_per_sec)) throw std::invalid_argument("phase rate must be positive");
    config_.phase_per_sec = phase_per_sec;
  }

  /// Pose, phase and history back to the start; inputs are kept.
  void reset() {
    half_index_ = 0;
    phase_ = 0.0;
    pose_ = SE2{};
    half_.reset();
    airborne_.reset();
    first_half_z_ = SE2{};
    history_.clear();
    paused_.reset();
    latched_ = pending_;
  }

  /// Advances phase by dtau > 0. A flow or integration failure pauses the
  /// session with a diagnostic instead of propagating.
  void step(double dtau) {
    if (!(dtau > 0.0) || !std::isfinite(dtau)) throw std::invalid_argument("session step: dtau must be positive");
    if (paused_) return;
    constexpr double pi = std::numbers::pi;
    double remaining = dtau;
    while (remaining > 0.0) {
      if (!half_) {
        try {
          begin_half();
        } catch (const std::exception& e) {
          paused_ = std::string("paused at tau=") + std::to_string(tau()) + ": " + e.what();
          return;
        }
      }
      const double room = pi - phase_;
      // Steps landing within rounding of a boundary snap to it.
      if (remaining >= room - 1e-12) {
        remaining -= room;
        finish_half();
      } else {
        phase_ += remaining;
        remaining = 0.0;
        pose_ = compose(half_->start_pose, half_->stance.nodes[current_node()]);
      }
    }
  }

  /// Advances by wall-clock seconds at the configured rate.
  void advance_seconds(double seconds) { step(seconds * config_.phase_per_sec); }

  /// Full shape at the current phase (both pairs).
  ShapePoint shape() const {
    const auto& a = gait_.first.subspace;
    const auto& b = gait_.second.subspace;
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model_.legs.size()));
    const auto put = [&v](const ReducedShapeSubspace& s, const Eigen::Vector2d& p) {
      v(static_cast<Eigen::Index>(s.i)) = p(0);
      v(static_cast<Eigen::Index>(s.j)) = p(1);
    };
    if (half_) {
      const std::size_t k = current_node();
      put(half_->stance.spec.subspace, half_->stance.stance_shape(k));
      put(airborne_->spec.subspace, airborne_->swing_shape(k));
    } else if (airborne_) {
      // On a boundary: the pair that just stanced holds its end shape,
      // the other pair has returned to its stance start.
      put(airborne_->spec.subspace, airborne_->alpha_pi);
      const SubgaitSpec& next = next_is_second() ? gait_.second : gait_.first;
      const ControlInputs& u = next_is_second() ? pending_.second : pending_.first;
      put(next.subspace, flow_to(next.subspace, next.alpha_star, next.with_inputs(u).start_offset(), config_.gait.flow));
    } else {
      put(a, flow_to(a, gait_.first.alpha_star, gait_.first.with_inputs(pending_.first).start_offset(), config_.gait.flow));
      put(b, flow_to(b, gait_.second.alpha_star, gait_.second.with_inputs(pending_.second).end_offset(), config_.gait.flow));
    }
    return ShapePoint(v);
  }

  /// Contact of the stance pair for the half in progress (or about to start).
  ContactState contact() const {
    if (half_) return half_->stance.spec.subspace.stance();
    // A finished half keeps its stance pair down until the next one starts.
    if (half_index_ == 0) return gait_.first.subspace.stance();
    return next_is_second() ? gait_.first.subspace.stance() : gait_.second.subspace.stance();
  }

  nlohmann::json state_json() const {
    nlohmann::json j;
    j["type"] = "state";
    j["tau"] = tau();
    j["pose"] = pose_json(pose_);
    ShapePoint alpha;
    try {
      alpha = shape();
    } catch (const std::exception&) {
      alpha = ShapePoint(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(model_.legs.size()), 0.0));
    }
    j["alpha"] = std::vector<double>(alpha.alpha.data(), alpha.alpha.data() + alpha.alpha.size());
    const ContactState c = contact();
    std::vector<int> beta;
    for (bool b : c.beta) beta.push_back(b ? 1 : 0);
    j["beta"] = beta;
    j["latched"] = inputs_json(latched_);
    j["pending"] = inputs_json(pending_);
    j["cycle"] = cycle();
    const auto z = last_z();
    j["last_z"] = z ? pose_json(*z) : nlohmann::json(nullptr);
    j["turning_radius"] = history_.empty() ? nlohmann::json(nullptr) : radius_json(history_.back().turning_radius);
    j["rate"] = config_.phase_per_sec;
    j["paused"] = paused_ ? nlohmann::json(*paused_) : nlohmann::json(nullptr);
    return j;
  }

  nlohmann::json history_json() const {
    nlohmann::json cycles = nlohmann::json::array();
    for (const CycleRecord& r : history_)
      cycles.push_back({{"cycle", r.cycle},
                        {"z", pose_json(r.z)},
                        {"turning_radius", radius_json(r.turning_radius)},
                        {"inputs", inputs_json(r.inputs)}});
    return {{"type", "history"}, {"capacity", config_.history_capacity}, {"cycles", cycles}};
  }

 private:
  bool next_is_second() const { return half_index_ % 2 == 1; }

  std::size_t current_node() const {
    const auto k = static_cast<std::size_t>(std::floor(phase_ / std::numbers::pi * static_cast<double>(steps_)));
    return std::min(k, steps_);
  }

  void begin_half() {
    const bool second = next_is_second();
    if (second) {
      latched_.second = pending_.second;
    } else {
      latched_.first = pending_.first;
      // At the very start the second pair is airborne, retracing a stance
      // planned with its current inputs (as the batch runner does).
      if (!airborne_) {
        latched_.second = pending_.second;
        airborne_ = plan_stance(gait_.second.with_inputs(latched_.second), steps_, config_.gait.flow);
      }
    }
    const SubgaitSpec spec = second ? gait_.second.with_inputs(latched_.second) : gait_.first.with_inputs(latched_.first);
    half_ = run_half_cycle(model_, spec, *airborne_, pose_, steps_, config_.gait.flow);
    phase_ = 0.0;
  }

  void finish_half() {
    pose_ = half_->end_pose;
    const SE2 d = half_->stance.displacement();
    airborne_ = std::move(half_->stance);
    half_.reset();
    phase_ = 0.0;
    if (half_index_ % 2 == 0) {
      first_half_z_ = d;
    } else {
      CycleRecord r;
      r.cycle = half_index_ / 2 + 1;
      r.z = compose(first_half_z_, d);
      r.turning_radius = turning_radius(r.z);
      r.inputs = latched_;
      history_.push_back(r);
      while (history_.size() > config_.history_capacity) history_.pop_front();
    }
    ++half_index_;
  }

  ModelSpec model_;
  TwoBeatGaitSpec gait_;
  SessionConfig config_;
  std::size_t steps_ = 0;

  std::size_t half_index_ = 0;
  double phase_ = 0.0;
  SE2 pose_;
  CycleInputs pending_;
  CycleInputs latched_;
  std::optional<HalfCycle> half_;
  std::optional<StancePlan> airborne_;  // most recent stance of the pair now in the air
  SE2 first_half_z_;
  std::deque<CycleRecord> history_;
  std::optional<std::string> paused_;
};

namespace detail {

inline ControlInputs parse_pair(const nlohmann::json& v, const char* key) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    throw std::invalid_argument(std::string("'") + key + "' must be [u1, u2]");
  ControlInputs u{v[0].get<double>(), v[1].get<double>()};
  if (!u.finite()) throw std::invalid_argument(std::string("'") + key + "' must be finite");
  return u;
}

}  // namespace detail

inline nlohmann::json error_reply(const std::string& message) { return {{"type", "error"}, {"message", message}}; }

/// Applies one client message. Returns the reply for the sender: the state
/// for `snapshot`, an acknowledgement for mutations, or an error (leaving
/// the session unchanged) for malformed input.
inline nlohmann::json handle_message(Session& session, const nlohmann::json& msg) {
  if (!msg.is_object() || !msg.contains("type") || !msg["type"].is_string())
    return error_reply("message must be an object with a string 'type'");
  const std::string type = msg["type"].get<std::string>();
  try {
    if (type == "set_inputs") {
      if (!msg.contains("u13") && !msg.contains("u24")) return error_reply("set_inputs needs 'u13' and/or 'u24'");
      CycleInputs u = session.pending();
      if (msg.contains("u13")) u.first = detail::parse_pair(msg["u13"], "u13");
      if (msg.contains("u24")) u.second = detail::parse_pair(msg["u24"], "u24");
      session.set_inputs(u);
      return {{"type", "ack"}, {"request", type}};
    }
    if (type == "set_rate") {
      if (!msg.contains("phase_per_sec") || !msg["phase_per_sec"].is_number())
        return error_reply("set_rate needs numeric 'phase_per_sec'");
      session.set_rate(msg["phase_per_sec"].get<double>());
      return {{"type", "ack"}, {"request", type}};
    }
    if (type == "reset") {
      session.reset();
      return {{"type", "ack"}, {"request", type}};
    }
    if (type == "snapshot") return session.state_json();
  } catch (const std::exception& e) {
    return error_reply(e.what());
  }
  return error_reply("unknown message type '" + type + "'");
}

/// One entry of a recorded message log, stamped with absolute phase.
struct LoggedMessage {
  double tau = 0.0;
  nlohmann::json message;
};

/// Replays a log: advances to each stamp (stamps must not decrease), applies
/// the message, and finally advances to end_tau.
inline void replay(Session& session, const std::vector<LoggedMessage>& log, double end_tau) {
  for (const LoggedMessage& m : log) {
    if (m.tau > session.tau()) session.step(m.tau - session.tau());
    handle_message(session, m.message);
  }
  if (end_tau > session.tau()) session.step(end_tau - session.tau());
}

}  // namespace strata::steer
