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

// Model geometry, foot Jacobians and local connections. Oracles: the
// closed-form first-foot Jacobian of the four-bar, finite differences of
// foot frames moved in the world, and finite differences of F.

#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "strata/model.hpp"
#include "strata/model_io.hpp"

namespace strata {
namespace {

const std::string kData = STRATA_DATA_DIR;

ModelSpec fourbar() { return load_model(kData + "/fourbar.json"); }
ModelSpec quad() { return load_model(kData + "/quad.json"); }

// World pose of a foot after moving the body with body velocity xi and the
// limbs with rates adot for time t.
SE2 world_foot(const ModelSpec& m, const Eigen::VectorXd& alpha, const SE2Velocity& xi, const Eigen::VectorXd& adot,
               double t, std::size_t leg) {
  const Eigen::VectorXd a = alpha + adot * t;
  return compose(exp(xi * t), foot_pose(m.legs[leg], a(static_cast<Eigen::Index>(leg))));
}

// Body-frame foot velocity by central differences of the foot frame.
Eigen::Vector3d fd_foot_velocity(const ModelSpec& m, const Eigen::VectorXd& alpha, const SE2Velocity& xi,
                                 const Eigen::VectorXd& adot, std::size_t leg) {
  const double h = 1e-5;
  const SE2 g0 = world_foot(m, alpha, xi, adot, 0.0, leg);
  const SE2Velocity fwd = log(compose(inverse(g0), world_foot(m, alpha, xi, adot, h, leg)));
  const SE2Velocity bwd = log(compose(inverse(g0), world_foot(m, alpha, xi, adot, -h, leg)));
  return (fwd.vec() - bwd.vec()) / (2.0 * h);
}

TEST(Model, FilesLoadAndValidate) {
  const ModelSpec f = fourbar();
  EXPECT_EQ(f.leg_count(), 2u);
  EXPECT_DOUBLE_EQ(f.body_length, 2.0);
  const ModelSpec q = quad();
  EXPECT_EQ(q.leg_count(), 4u);
  EXPECT_DOUBLE_EQ(q.body_length, 4.0);
  for (const LegModule& l : q.legs) {
    EXPECT_DOUBLE_EQ(std::abs(l.hip.x), 1.0);
    EXPECT_DOUBLE_EQ(std::abs(l.hip.y), 1.0);
  }
}

TEST(Model, JsonRoundTrip) {
  const ModelSpec q = quad();
  const ModelSpec back = model_from_json(to_json(q));
  ASSERT_EQ(back.legs.size(), q.legs.size());
  for (std::size_t i = 0; i < q.legs.size(); ++i) {
    EXPECT_EQ(back.legs[i].hip.x, q.legs[i].hip.x);
    EXPECT_EQ(back.legs[i].hip.theta, q.legs[i].hip.theta);
    EXPECT_EQ(back.legs[i].swing_max, q.legs[i].swing_max);
  }
}

TEST(Model, RejectsMalformedModels) {
  nlohmann::json j = to_json(fourbar());
  j["legs"][0]["length"] = -1.0;
  EXPECT_THROW(model_from_json(j), ModelError);
  j = to_json(fourbar());
  j["legs"][0]["swing"] = {1.0, -1.0};
  EXPECT_THROW(model_from_json(j), ModelError);
  j = to_json(fourbar());
  j["legs"].erase(1);
  EXPECT_THROW(model_from_json(j), ModelError);  // fewer than two legs
  j = to_json(fourbar());
  j.erase("legs");
  EXPECT_THROW(model_from_json(j), ModelError);
  j = to_json(fourbar());
  j["version"] = 99;
  EXPECT_THROW(model_from_json(j), ModelError);
  EXPECT_THROW(load_model(kData + "/does-not-exist.json"), ModelError);
}

TEST(Model, FootPoseMatchesHandGeometry) {
  const ModelSpec f = fourbar();
  // Leg 2 hangs off the rear hip pointing backwards.
  const Eigen::Vector2d p = foot_position(f.legs[1], 0.3);
  EXPECT_NEAR(p(0), -1.0 - std::cos(0.3), 1e-15);
  EXPECT_NEAR(p(1), -std::sin(0.3), 1e-15);
  const Eigen::Vector2d d = foot_position_derivative(f.legs[0], 0.4);
  const double h = 1e-6;
  const Eigen::Vector2d fd = (foot_position(f.legs[0], 0.4 + h) - foot_position(f.legs[0], 0.4 - h)) / (2 * h);
  EXPECT_NEAR((d - fd).norm(), 0.0, 1e-9);
}

TEST(Model, FirstFootJacobianMatchesClosedForm) {
  const ModelSpec f = fourbar();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-std::numbers::pi / 2, std::numbers::pi);
  for (int k = 0; k < 50; ++k) {
    const double a1 = u(rng), a2 = u(rng);
    const Eigen::MatrixXd j = foot_jacobian(f, ShapePoint{a1, a2}, 0);
    Eigen::Matrix<double, 3, 5> expect;
    expect << std::cos(a1), std::sin(a1), std::sin(a1), 0, 0,  //
        -std::sin(a1), std::cos(a1), std::cos(a1) + 1, 1, 0,   //
        0, 0, 1, 1, 0;
    EXPECT_LT((j - expect).cwiseAbs().maxCoeff(), 1e-12) << "alpha1 = " << a1;
  }
}

TEST(Model, JacobianMatchesFiniteDifferences) {
  const ModelSpec q = quad();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.2, 1.2);
  for (int k = 0; k < 30; ++k) {
    Eigen::VectorXd alpha(4), adot(4);
    for (int i = 0; i < 4; ++i) {
      alpha(i) = u(rng);
      adot(i) = u(rng);
    }
    const SE2Velocity xi{u(rng), u(rng), u(rng)};
    Eigen::VectorXd q_dot(7);
    q_dot << xi.vx, xi.vy, xi.omega, adot;
    for (std::size_t leg = 0; leg < 4; ++leg) {
      const Eigen::Vector3d got = foot_jacobian(q, ShapePoint(alpha), leg) * q_dot;
      EXPECT_LT((got - fd_foot_velocity(q, alpha, xi, adot, leg)).norm(), 1e-8);
    }
  }
}

TEST(Model, PfaffianStacksTranslationalRows) {
  const ModelSpec q = quad();
  const ShapePoint a{0.1, -0.2, 0.3, -0.4};
  const Eigen::MatrixXd p = pfaffian(q, a, ContactState::pair(4, 1, 3));
  ASSERT_EQ(p.rows(), 4);
  ASSERT_EQ(p.cols(), 7);
  EXPECT_EQ(p.topRows(2), foot_jacobian(q, a, 1).topRows(2));
  EXPECT_EQ(p.bottomRows(2), foot_jacobian(q, a, 3).topRows(2));
  EXPECT_THROW(pfaffian(q, a, ContactState(std::vector<bool>(4, false))), ModelError);
  EXPECT_THROW(pfaffian(q, ShapePoint{0.0, 0.0}, ContactState::pair(4, 0, 1)), ModelError);
}

// F by direct foot positions and its gradient by central differences.
Eigen::Vector2d fd_grad_f(const ModelSpec& m, std::size_t i, std::size_t j, double ai, double aj) {
  const auto f = [&](double x, double y) { return (foot_position(m.legs[i], x) - foot_position(m.legs[j], y)).squaredNorm(); };
  const double h = 1e-6;
  return {(f(ai + h, aj) - f(ai - h, aj)) / (2 * h), (f(ai, aj + h) - f(ai, aj - h)) / (2 * h)};
}

TEST(Model, ConnectionKeepsStanceFeetPinned) {
  const ModelSpec q = quad();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.4, 1.4);
  for (const auto& pr : {std::array<std::size_t, 2>{0, 2}, std::array<std::size_t, 2>{1, 3}, std::array<std::size_t, 2>{0, 1}}) {
    for (int k = 0; k < 40; ++k) {
      Eigen::VectorXd alpha(4);
      for (int i = 0; i < 4; ++i) alpha(i) = u(rng);
      const auto ii = static_cast<Eigen::Index>(pr[0]), jj = static_cast<Eigen::Index>(pr[1]);
      const Eigen::Vector2d g = fd_grad_f(q, pr[0], pr[1], alpha(ii), alpha(jj));
      if (g.norm() < 1e-3) continue;
      // Limb rates that keep the inter-foot distance fixed.
      Eigen::VectorXd adot = Eigen::VectorXd::Zero(4);
      adot(ii) = g(1);
      adot(jj) = -g(0);
      adot /= g.norm();
      const LocalConnection c = local_connection(q, ShapePoint(alpha), ContactState::pair(4, pr[0], pr[1]));
      ASSERT_EQ(c.a.rows(), 3);
      ASSERT_EQ(c.a.cols(), 2);
      EXPECT_FALSE(c.rank_deficient);
      const Eigen::Vector3d xi = -(c.a * Eigen::Vector2d(adot(std::min(ii, jj)), adot(std::max(ii, jj))));
      for (std::size_t leg : pr) {
        const Eigen::Vector3d v = fd_foot_velocity(q, alpha, SE2Velocity::from(xi), adot, leg);
        // Foot velocity in its own frame; the world translational speed has
        // the same norm.
        EXPECT_LT(v.head<2>().norm(), 1e-8);
      }
      EXPECT_LT(c.residual, 1e-10);
    }
  }
}

TEST(Model, PairFastPathMatchesGeneralConnection) {
  const ModelSpec q = quad();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int k = 0; k < 100; ++k) {
    const ShapePoint a{u(rng), u(rng), u(rng), u(rng)};
    const LocalConnection c = local_connection(q, a, ContactState::pair(4, 0, 2));
    const Eigen::Matrix<double, 3, 2> p = pair_connection(q.legs[0], q.legs[2], a[0], a[2]);
    EXPECT_LT((c.a - p).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Model, SwingAndSingleStanceConnections) {
  const ModelSpec q = quad();
  const ShapePoint a{0.1, 0.2, 0.3, 0.4};
  const LocalConnection none = local_connection(q, a, ContactState(std::vector<bool>(4, false)));
  EXPECT_EQ(none.a.cols(), 0);
  const LocalConnection one = local_connection(q, a, ContactState({true, false, false, false}));
  EXPECT_TRUE(one.rank_deficient);
  EXPECT_EQ(one.rank, 2u);
  EXPECT_THROW(local_connection(q, a, ContactState({true, true, true, false})), ModelError);
}

TEST(Model, WithinLimits) {
  const ModelSpec q = quad();
  EXPECT_TRUE(within_limits(q, ShapePoint{0.0, 1.5, -1.5, 0.0}));
  EXPECT_FALSE(within_limits(q, ShapePoint{0.0, 1.6, 0.0, 0.0}));
  EXPECT_TRUE(within_limits(fourbar(), ShapePoint{3.0, -1.5}));
}

}  // namespace
}  // namespace strata
