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

// Constraint field F, no-slip basis, level-set flows and critical points.
// Oracles: F from world foot positions, finite differences, and the
// closed-form four-bar F = |(2 + cos a1 + cos a2, sin a1 + sin a2)|^2.

#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "strata/model_io.hpp"
#include "strata/shapefield.hpp"

namespace strata {
namespace {

const std::string kData = STRATA_DATA_DIR;
constexpr double kPi = std::numbers::pi;

ReducedShapeSubspace fourbar_plane() { return ReducedShapeSubspace::of(load_model(kData + "/fourbar.json"), 0, 1); }

double closed_form_f(double a1, double a2) {
  const double dx = 2.0 + std::cos(a1) + std::cos(a2);
  const double dy = std::sin(a1) + std::sin(a2);
  return dx * dx + dy * dy;
}

TEST(ShapeField, FourBarFMatchesClosedForm) {
  const auto s = fourbar_plane();
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-kPi / 2, kPi);
  for (int k = 0; k < 200; ++k) {
    const Eigen::Vector2d p(u(rng), u(rng));
    EXPECT_NEAR(inter_foot_f(s, p), closed_form_f(p(0), p(1)), 1e-12);
  }
  EXPECT_NEAR(inter_foot_f(s, {0, 0}), 16.0, 1e-14);
}

TEST(ShapeField, QuadFMatchesFootPositions) {
  const ModelSpec q = load_model(kData + "/quad.json");
  const auto s = ReducedShapeSubspace::of(q, 1, 3);
  for (double a : {-1.0, 0.0, 0.7})
    for (double b : {-0.3, 0.2, 1.1}) {
      const double direct = (foot_position(q.legs[1], a) - foot_position(q.legs[3], b)).squaredNorm();
      EXPECT_NEAR(inter_foot_f(s, {a, b}), direct, 1e-12);
    }
}

TEST(ShapeField, GradientAndHessianMatchFiniteDifferences) {
  const auto s = fourbar_plane();
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.5, 3.0);
  const double h = 1e-5;
  for (int k = 0; k < 100; ++k) {
    const Eigen::Vector2d p(u(rng), u(rng));
    const Eigen::Vector2d e0(h, 0), e1(0, h);
    const Eigen::Vector2d fd((inter_foot_f(s, p + e0) - inter_foot_f(s, p - e0)) / (2 * h),
                             (inter_foot_f(s, p + e1) - inter_foot_f(s, p - e1)) / (2 * h));
    EXPECT_LT((grad_f(s, p) - fd).norm(), 1e-8);
    Eigen::Matrix2d hfd;
    hfd.col(0) = (grad_f(s, p + e0) - grad_f(s, p - e0)) / (2 * h);
    hfd.col(1) = (grad_f(s, p + e1) - grad_f(s, p - e1)) / (2 * h);
    EXPECT_LT((hessian_f(s, p) - hfd).norm(), 1e-8);
  }
}

TEST(ShapeField, NonslipBasisIsUnitAndTangent) {
  const auto s = fourbar_plane();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.5, 3.0);
  for (int k = 0; k < 100; ++k) {
    const Eigen::Vector2d p(u(rng), u(rng));
    const Eigen::Vector2d g = grad_f(s, p);
    if (g.norm() < 1e-3) continue;
    const Eigen::Vector2d b = nonslip_field(s, p);
    EXPECT_NEAR(b.norm(), 1.0, 1e-14);
    EXPECT_NEAR(b.dot(g), 0.0, 1e-12);
    // Clockwise rotation of the gradient: gradient x basis points into -z.
    EXPECT_LT(g(0) * b(1) - g(1) * b(0), 0.0);
  }
}

TEST(ShapeField, SingularShapeThrowsWithPoint) {
  const auto s = fourbar_plane();
  try {
    nonslip_field(s, {0.0, 0.0});
    FAIL() << "expected SingularShape";
  } catch (const SingularShape& e) {
    EXPECT_EQ(e.point(), Eigen::Vector2d(0.0, 0.0));
  }
  const FieldSample f = sample_field(s, {0.0, 0.0});
  EXPECT_TRUE(f.singular);
  EXPECT_TRUE(std::isnan(f.basis(0)));
}

TEST(ShapeField, FlowStaysOnLevelSetAndReverses) {
  const auto s = fourbar_plane();
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.2, 2.5);
  for (int k = 0; k < 30; ++k) {
    const Eigen::Vector2d p(u(rng), u(rng));
    if (grad_f(s, p).norm() < 0.2) continue;
    const FlowPath fwd = flow(s, p, 1.5);
    for (const Eigen::Vector2d& q : fwd.points) EXPECT_LT(std::abs(inter_foot_f(s, q) - inter_foot_f(s, p)), 1e-9);
    EXPECT_NEAR(fwd.length, 1.5, 1e-15);
    const Eigen::Vector2d back = flow_to(s, fwd.end(), -1.5);
    EXPECT_LT((back - p).norm(), 1e-8);
  }
}

TEST(ShapeField, FlowIsUnitSpeed) {
  // Arc length along the polyline approaches the requested length.
  const auto s = fourbar_plane();
  const FlowPath path = flow_steps(s, {0.5, -0.3}, 1.0, 4000);
  double arc = 0.0;
  for (std::size_t k = 1; k < path.points.size(); ++k) arc += (path.points[k] - path.points[k - 1]).norm();
  EXPECT_NEAR(arc, 1.0, 1e-7);
}

TEST(ShapeField, FlowTangentFollowsBasis) {
  const auto s = fourbar_plane();
  const Eigen::Vector2d p(0.4, 0.9);
  const double h = 1e-4;
  const Eigen::Vector2d d = (flow_to(s, p, h) - flow_to(s, p, -h)) / (2 * h);
  EXPECT_LT((d - nonslip_field(s, p)).norm(), 1e-7);
}

TEST(ShapeField, FourBarHasTwoExtremalSingularities) {
  const auto s = fourbar_plane();
  const auto sing = find_singularities(s, 101);
  ASSERT_EQ(sing.size(), 2u);
  const auto& mx = sing[0].kind == SingularityKind::max ? sing[0] : sing[1];
  const auto& mn = sing[0].kind == SingularityKind::max ? sing[1] : sing[0];
  EXPECT_EQ(mx.kind, SingularityKind::max);
  EXPECT_EQ(mn.kind, SingularityKind::min);
  EXPECT_LT(mx.point.norm(), 1e-8);
  EXPECT_NEAR(mx.f_value, 16.0, 1e-12);
  // The minimum (feet coincide) is degenerate along a1 = a2; Newton only
  // converges linearly there.
  EXPECT_NEAR(mn.point(0), kPi, 1e-4);
  EXPECT_NEAR(mn.point(1), kPi, 1e-4);
  EXPECT_NEAR(mn.point(0), mn.point(1), 1e-8);
  for (const auto& x : sing) EXPECT_LT(x.grad_norm, 1e-8);
}

TEST(ShapeField, SaddlesAreReportedOnRequest) {
  const auto s = fourbar_plane();
  const auto all = find_singularities(s, 101, true);
  ASSERT_EQ(all.size(), 4u);
  int saddles = 0;
  for (const auto& x : all)
    if (x.kind == SingularityKind::saddle) {
      ++saddles;
      EXPECT_NEAR(x.f_value, 4.0, 1e-10);
    }
  EXPECT_EQ(saddles, 2);
}

TEST(ShapeField, ClosedContourAroundMaximum) {
  // Near the maximum F ~ 16 - 3 (a1^2 + a2^2) - 2 a1 a2 ... the contour is a
  // closed loop; its length matches the polyline perimeter of the flow.
  const auto s = fourbar_plane();
  const Eigen::Vector2d p(0.6, 0.0);
  const auto len = closed_contour_length(s, p);
  ASSERT_TRUE(len.has_value());
  const Eigen::Vector2d end = flow_to(s, p, *len);
  EXPECT_LT((end - p).norm(), 1e-8);
  // Halfway round is the point reflected through the origin (F is even).
  const Eigen::Vector2d half = flow_to(s, p, *len / 2.0);
  EXPECT_LT((half + p).norm(), 1e-7);
}

TEST(ShapeField, SubspaceEmbedAndBounds) {
  const ModelSpec q = load_model(kData + "/quad.json");
  const auto s = ReducedShapeSubspace::of(q, 1, 3);
  const ShapePoint a = s.embed({0.2, -0.4});
  EXPECT_EQ(a.size(), 4u);
  EXPECT_EQ(a[1], 0.2);
  EXPECT_EQ(a[3], -0.4);
  EXPECT_EQ(a[0], 0.0);
  EXPECT_TRUE(s.contains({1.5, -1.5}));
  EXPECT_FALSE(s.contains({1.6, 0.0}));
  EXPECT_THROW(ReducedShapeSubspace::of(q, 2, 2), ModelError);
  EXPECT_THROW(ReducedShapeSubspace::of(q, 0, 4), ModelError);
}

}  // namespace
}  // namespace strata
