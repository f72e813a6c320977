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

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SVD>

#include "strata/errors.hpp"
#include "strata/se2.hpp"

namespace strata {

/// One planar leg: a hip frame fixed in the body, a rigid limb of the given
/// length swinging about the hip, and soft swing limits.
///
/// The foot frame is the hip frame rotated by the swing angle and then
/// translated `length` along the rotated limb axis.
struct LegModule {
  SE2 hip;
  double length = 1.0;
  double swing_min = -std::numbers::pi / 2.0;
  double swing_max = std::numbers::pi / 2.0;
};

struct ModelSpec {
  std::string name;
  std::vector<LegModule> legs;
  double body_length = 0.0;  // informational only

  std::size_t leg_count() const { return legs.size(); }

  void validate() const {
    if (legs.size() < 2 || legs.size() > 8) throw ModelError("model '" + name + "': leg count must be in [2, 8]");
    for (std::size_t i = 0; i < legs.size(); ++i) {
      const LegModule& l = legs[i];
      const std::string tag = "model '" + name + "' leg " + std::to_string(i + 1);
      if (!std::isfinite(l.hip.x) || !std::isfinite(l.hip.y) || !std::isfinite(l.hip.theta))
        throw ModelError(tag + ": hip offset must be finite");
      if (!(l.length > 0.0) || !std::isfinite(l.length)) throw ModelError(tag + ": length must be positive");
      if (!(l.swing_min < l.swing_max)) throw ModelError(tag + ": swing_min must be below swing_max");
    }
  }
};

/// Limb angles, one per leg.
struct ShapePoint {
  Eigen::VectorXd alpha;

  ShapePoint() = default;
  explicit ShapePoint(Eigen::VectorXd a) : alpha(std::move(a)) {}
  ShapePoint(std::initializer_list<double> a) : alpha(static_cast<Eigen::Index>(a.size())) {
    std::copy(a.begin(), a.end(), alpha.data());
  }
  std::size_t size() const { return static_cast<std::size_t>(alpha.size()); }
  double operator[](std::size_t i) const { return alpha(static_cast<Eigen::Index>(i)); }
};

/// Binary contact flags, one per leg.
struct ContactState {
  std::vector<bool> beta;

  ContactState() = default;
  explicit ContactState(std::vector<bool> b) : beta(std::move(b)) {}
  ContactState(std::initializer_list<bool> b) : beta(b) {}

  std::size_t size() const { return beta.size(); }
  std::size_t stance_count() const { return static_cast<std::size_t>(std::count(beta.begin(), beta.end(), true)); }
  std::vector<std::size_t> stance_legs() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < beta.size(); ++i)
      if (beta[i]) out.push_back(i);
    return out;
  }
  static ContactState pair(std::size_t legs, std::size_t i, std::size_t j) {
    ContactState c(std::vector<bool>(legs, false));
    c.beta.at(i) = true;
    c.beta.at(j) = true;
    return c;
  }
  bool operator==(const ContactState&) const = default;
};

/// Shape-to-body velocity map for a fixed contact state: g_b' = -a * alpha'
/// restricted to the stance legs' angles.
struct LocalConnection {
  Eigen::MatrixXd a;  // 3 x k, rows (x, y, theta), one column per stance leg
  ShapePoint shape_point;
  ContactState stance;
  /// Constraint residual over the admissible shape velocities.
  double residual = 0.0;
  std::size_t rank = 0;
  /// Fewer than three independent body-velocity constraints; the body
  /// velocity is then the minimum-norm solution, not a unique one.
  bool rank_deficient = false;
};

inline void check_leg(const ModelSpec& model, std::size_t leg) {
  if (leg >= model.legs.size())
    throw ModelError("leg index " + std::to_string(leg) + " out of range for model '" + model.name + "'");
}

inline void check_arity(const ModelSpec& model, const ShapePoint& alpha) {
  if (alpha.size() != model.legs.size())
    throw ModelError("shape point has " + std::to_string(alpha.size()) + " angles, model '" + model.name + "' has " +
                     std::to_string(model.legs.size()) + " legs");
}

/// Foot frame relative to the body frame.
inline SE2 foot_pose(const LegModule& leg, double alpha) {
  return compose(compose(leg.hip, SE2{0.0, 0.0, alpha}), SE2{leg.length, 0.0, 0.0});
}

inline Eigen::Vector2d foot_position(const LegModule& leg, double alpha) { return foot_pose(leg, alpha).translation(); }

/// d(foot position)/d(alpha) in the body frame.
inline Eigen::Vector2d foot_position_derivative(const LegModule& leg, double alpha) {
  const double phi = leg.hip.theta + alpha;
  return {-leg.length * std::sin(phi), leg.length * std::cos(phi)};
}

inline bool within_limits(const LegModule& leg, double alpha, double tol = 1e-12) {
  return alpha >= leg.swing_min - tol && alpha <= leg.swing_max + tol;
}

inline bool within_limits(const ModelSpec& model, const ShapePoint& alpha) {
  check_arity(model, alpha);
  for (std::size_t i = 0; i < model.legs.size(); ++i)
    if (!within_limits(model.legs[i], alpha[i])) return false;
  return true;
}

/// Maps the stacked generalized velocity (body velocity; all limb rates) to
/// the body-frame velocity of one foot. Columns of the other legs' limb rates
/// are identically zero.
inline Eigen::MatrixXd foot_jacobian(const ModelSpec& model, const ShapePoint& alpha, std::size_t leg) {
  check_leg(model, leg);
  check_arity(model, alpha);
  const LegModule& l = model.legs[leg];
  const auto n = static_cast<Eigen::Index>(model.legs.size());
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(3, 3 + n);
  j.leftCols<3>() = adjoint_inverse(foot_pose(l, alpha[leg]));
  // The limb frame spins about the hip at rate alpha'; the foot sits `length`
  // along its x-axis.
  j.col(3 + static_cast<Eigen::Index>(leg)) = adjoint_inverse(SE2{l.length, 0.0, 0.0}) * Eigen::Vector3d(0, 0, 1);
  return j;
}

/// Stacked translational no-slip constraints, one 2-row block per stance leg,
/// in leg order.
inline Eigen::MatrixXd pfaffian(const ModelSpec& model, const ShapePoint& alpha, const ContactState& stance) {
  check_arity(model, alpha);
  if (stance.size() != model.legs.size()) throw ModelError("contact state arity does not match the model");
  const auto legs = stance.stance_legs();
  if (legs.empty()) throw ModelError("pfaffian: empty stance set");
  const auto n = static_cast<Eigen::Index>(model.legs.size());
  Eigen::MatrixXd p(2 * static_cast<Eigen::Index>(legs.size()), 3 + n);
  for (std::size_t r = 0; r < legs.size(); ++r)
    p.middleRows(2 * static_cast<Eigen::Index>(r), 2) = foot_jacobian(model, alpha, legs[r]).topRows<2>();
  return p;
}

namespace detail {

// Splits the Pfaffian into the body block and the stance-shape block and
// solves for the connection with an SVD pseudoinverse.
inline LocalConnection solve_connection(const Eigen::MatrixXd& omega_g, const Eigen::MatrixXd& omega_a) {
  constexpr double kCutoff = 1e-10;
  LocalConnection out;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(omega_g, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double smax = sv.size() ? sv(0) : 0.0;
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(sv.size());
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > kCutoff * smax) {
      inv(i) = 1.0 / sv(i);
      ++rank;
    }
  }
  const Eigen::MatrixXd pinv = svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
  out.a = pinv * omega_a;
  out.rank = rank;
  out.rank_deficient = rank < 3;

  // Admissible limb rates are those whose constraint image lies in the range
  // of the body block; measure the residual only over that subspace.
  const Eigen::MatrixXd proj =
      Eigen::MatrixXd::Identity(omega_g.rows(), omega_g.rows()) - omega_g * pinv;
  const Eigen::MatrixXd leak = proj * omega_a;
  Eigen::JacobiSVD<Eigen::MatrixXd> lsvd(leak, Eigen::ComputeFullV);
  const Eigen::VectorXd& lsv = lsvd.singularValues();
  const double lmax = std::max(lsv.size() ? lsv(0) : 0.0, 1.0);
  Eigen::Index leak_rank = 0;
  for (Eigen::Index i = 0; i < lsv.size(); ++i)
    if (lsv(i) > 1e-9 * lmax) ++leak_rank;
  const Eigen::MatrixXd admissible = lsvd.matrixV().rightCols(omega_a.cols() - leak_rank);
  out.residual = admissible.cols() ? (omega_g * out.a * admissible - omega_a * admissible).norm() : 0.0;
  return out;
}

}  // namespace detail

/// Local connection for the given contact state. Zero stance legs give the
/// empty (3 x 0) connection: no body motion without contact.
inline LocalConnection local_connection(const ModelSpec& model, const ShapePoint& alpha, const ContactState& stance) {
  check_arity(model, alpha);
  if (stance.size() != model.legs.size()) throw ModelError("contact state arity does not match the model");
  const auto legs = stance.stance_legs();
  if (legs.size() > 2) throw ModelError("local_connection: at most two simultaneous stance legs are supported");
  if (legs.empty()) {
    LocalConnection c;
    c.a = Eigen::MatrixXd::Zero(3, 0);
    c.shape_point = alpha;
    c.stance = stance;
    c.rank = 0;
    c.rank_deficient = false;
    return c;
  }
  const Eigen::MatrixXd p = pfaffian(model, alpha, stance);
  Eigen::MatrixXd omega_a(p.rows(), static_cast<Eigen::Index>(legs.size()));
  for (std::size_t k = 0; k < legs.size(); ++k) omega_a.col(static_cast<Eigen::Index>(k)) = p.col(3 + static_cast<Eigen::Index>(legs[k]));
  LocalConnection c = detail::solve_connection(p.leftCols<3>(), omega_a);
  c.shape_point = alpha;
  c.stance = stance;
  return c;
}

/// Fast path for a two-leg stance: the 3 x 2 connection as a function of the
/// two stance angles only.
inline Eigen::Matrix<double, 3, 2> pair_connection(const LegModule& li, const LegModule& lj, double ai, double aj) {
  Eigen::Matrix<double, 4, 3> omega_g;
  omega_g.topRows<2>() = adjoint_inverse(foot_pose(li, ai)).topRows<2>();
  omega_g.bottomRows<2>() = adjoint_inverse(foot_pose(lj, aj)).topRows<2>();
  Eigen::Matrix<double, 4, 2> omega_a = Eigen::Matrix<double, 4, 2>::Zero();
  omega_a(1, 0) = li.length;
  omega_a(3, 1) = lj.length;
  Eigen::JacobiSVD<Eigen::Matrix<double, 4, 3>> svd(omega_g, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d sv = svd.singularValues();
  Eigen::Vector3d inv = Eigen::Vector3d::Zero();
  for (int k = 0; k < 3; ++k)
    if (sv(k) > 1e-10 * sv(0)) inv(k) = 1.0 / sv(k);
  const Eigen::Matrix<double, 3, 4> pinv = svd.matrixV() * inv.asDiagonal() * svd.matrixU().leftCols<3>().transpose();
  return pinv * omega_a;
}

}  // namespace strata
