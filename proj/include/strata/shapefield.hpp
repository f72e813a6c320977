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

// The inter-foot constraint field of a two-leg stance. Holding both feet
// pinned conserves their separation, so admissible (no-slip) limb motions
// are confined to level sets of
//
//   F(alpha_i, alpha_j) = |foot_j - foot_i|^2
//
// and the unit tangent to those level sets is the basis for every stance path.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "strata/errors.hpp"
#include "strata/model.hpp"
#include "strata/se2.hpp"

namespace strata {

inline constexpr double kSingularTol = 1e-6;

/// Shape plane of one stance pair (legs i and j, zero-based, ordered).
struct ReducedShapeSubspace {
  std::size_t i = 0;
  std::size_t j = 1;
  LegModule leg_i;
  LegModule leg_j;
  std::size_t model_legs = 2;
  Eigen::Vector2d lower;
  Eigen::Vector2d upper;

  /// Subspace of legs i, j with bounds taken from their swing limits.
  static ReducedShapeSubspace of(const ModelSpec& model, std::size_t i, std::size_t j) {
    check_leg(model, i);
    check_leg(model, j);
    if (i == j) throw ModelError("reduced shape subspace needs two distinct legs");
    ReducedShapeSubspace s;
    s.i = i;
    s.j = j;
    s.leg_i = model.legs[i];
    s.leg_j = model.legs[j];
    s.model_legs = model.legs.size();
    s.lower = {s.leg_i.swing_min, s.leg_j.swing_min};
    s.upper = {s.leg_i.swing_max, s.leg_j.swing_max};
    return s;
  }

  ReducedShapeSubspace with_bounds(Eigen::Vector2d lo, Eigen::Vector2d hi) const {
    if (!(lo.array() < hi.array()).all()) throw ModelError("subspace bounds must satisfy lower < upper");
    ReducedShapeSubspace s = *this;
    s.lower = std::move(lo);
    s.upper = std::move(hi);
    return s;
  }

  bool contains(const Eigen::Vector2d& p, double tol = 1e-12) const {
    return (p.array() >= lower.array() - tol).all() && (p.array() <= upper.array() + tol).all();
  }

  ContactState stance() const { return ContactState::pair(model_legs, i, j); }

  /// Full shape vector with this pair's angles set and other legs at zero.
  ShapePoint embed(const Eigen::Vector2d& p) const {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model_legs));
    a(static_cast<Eigen::Index>(i)) = p(0);
    a(static_cast<Eigen::Index>(j)) = p(1);
    return ShapePoint(a);
  }
};

struct FieldSample {
  Eigen::Vector2d point;
  double f_value = 0.0;
  Eigen::Vector2d grad;
  Eigen::Vector2d basis;  // NaN when singular
  bool singular = false;
};

enum class SingularityKind { max, min, saddle };

inline const char* to_string(SingularityKind k) {
  switch (k) {
    case SingularityKind::max: return "max";
    case SingularityKind::min: return "min";
    case SingularityKind::saddle: return "saddle";
  }
  return "?";
}

struct Singularity {
  Eigen::Vector2d point;
  double f_value = 0.0;
  SingularityKind kind = SingularityKind::max;
  double grad_norm = 0.0;
};

/// Squared inter-foot distance, from the relative transform of the two foot
/// frames (frame invariant).
inline double inter_foot_f(const ReducedShapeSubspace& s, const Eigen::Vector2d& p) {
  const SE2 rel = compose(inverse(foot_pose(s.leg_i, p(0))), foot_pose(s.leg_j, p(1)));
  return rel.x * rel.x + rel.y * rel.y;
}

inline Eigen::Vector2d grad_f(const ReducedShapeSubspace& s, const Eigen::Vector2d& p) {
  const Eigen::Vector2d d = foot_position(s.leg_j, p(1)) - foot_position(s.leg_i, p(0));
  return {-2.0 * d.dot(foot_position_derivative(s.leg_i, p(0))),
          2.0 * d.dot(foot_position_derivative(s.leg_j, p(1)))};
}

inline Eigen::Matrix2d hessian_f(const ReducedShapeSubspace& s, const Eigen::Vector2d& p) {
  const Eigen::Vector2d d = foot_position(s.leg_j, p(1)) - foot_position(s.leg_i, p(0));
  const Eigen::Vector2d di = foot_position_derivative(s.leg_i, p(0));
  const Eigen::Vector2d dj = foot_position_derivative(s.leg_j, p(1));
  // Second derivative of a foot position along its own angle points back at the hip.
  const auto second = [](const LegModule& l, double a) {
    const double phi = l.hip.theta + a;
    return Eigen::Vector2d(-l.length * std::cos(phi), -l.length * std::sin(phi));
  };
  Eigen::Matrix2d h;
  h(0, 0) = 2.0 * di.squaredNorm() - 2.0 * d.dot(second(s.leg_i, p(0)));
  h(1, 1) = 2.0 * dj.squaredNorm() + 2.0 * d.dot(second(s.leg_j, p(1)));
  h(0, 1) = h(1, 0) = -2.0 * di.dot(dj);
  return h;
}

/// Rotates a gradient clockwise by a quarter turn.
inline Eigen::Vector2d rotate_clockwise(const Eigen::Vector2d& g) { return {g(1), -g(0)}; }

/// Unit no-slip direction: the normalized gradient of F rotated clockwise.
inline Eigen::Vector2d nonslip_field(const ReducedShapeSubspace& s, const Eigen::Vector2d& p,
                                     double singular_tol = kSingularTol) {
  const Eigen::Vector2d g = grad_f(s, p);
  const double n = g.norm();
  if (!(n > singular_tol)) {
    std::ostringstream os;
    os << "singular shape (" << p(0) << ", " << p(1) << "): |grad F| = " << n;
    throw SingularShape(os.str(), p);
  }
  return rotate_clockwise(g / n);
}

inline FieldSample sample_field(const ReducedShapeSubspace& s, const Eigen::Vector2d& p,
                                double singular_tol = kSingularTol) {
  FieldSample out;
  out.point = p;
  out.f_value = inter_foot_f(s, p);
  out.grad = grad_f(s, p);
  const double n = out.grad.norm();
  out.singular = !(n > singular_tol);
  out.basis = out.singular ? Eigen::Vector2d::Constant(std::numeric_limits<double>::quiet_NaN())
                           : rotate_clockwise(out.grad / n);
  return out;
}

struct FlowOptions {
  double step = 1e-3;
  double singular_tol = kSingularTol;
  double level_tol = 1e-10;
};

struct FlowPath {
  std::vector<Eigen::Vector2d> points;  // includes both endpoints
  double length = 0.0;                  // signed
  bool out_of_bounds = false;

  const Eigen::Vector2d& end() const { return points.back(); }
};

namespace detail {

// Pulls a point back onto the F = level set with Newton steps along grad F.
inline Eigen::Vector2d project_to_level(const ReducedShapeSubspace& s, Eigen::Vector2d p, double level, double tol) {
  for (int it = 0; it < 4; ++it) {
    const double r = inter_foot_f(s, p) - level;
    if (std::abs(r) <= tol) break;
    const Eigen::Vector2d g = grad_f(s, p);
    p -= r * g / g.squaredNorm();
  }
  return p;
}

// One RK4 step of length h followed by level-set re-projection.
inline Eigen::Vector2d flow_step(const ReducedShapeSubspace& s, const Eigen::Vector2d& p, double h, double level,
                                 const FlowOptions& opt) {
  const auto field = [&](const Eigen::Vector2d& q) { return nonslip_field(s, q, opt.singular_tol); };
  const Eigen::Vector2d k1 = field(p);
  const Eigen::Vector2d k2 = field(p + 0.5 * h * k1);
  const Eigen::Vector2d k3 = field(p + 0.5 * h * k2);
  const Eigen::Vector2d k4 = field(p + h * k3);
  Eigen::Vector2d q = p + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (std::abs(inter_foot_f(s, q) - level) > opt.level_tol)
    q = detail::project_to_level(s, q, level, 0.1 * opt.level_tol);
  return q;
}

}  // namespace detail

/// Flows along the no-slip field for a signed arc length in exactly `steps`
/// uniform RK4 steps, re-projecting onto the starting level set whenever it
/// drifts by more than `level_tol`.
inline FlowPath flow_steps(const ReducedShapeSubspace& s, const Eigen::Vector2d& start, double length,
                           std::size_t steps, const FlowOptions& opt = {}) {
  FlowPath path;
  path.length = length;
  path.points.reserve(steps + 1);
  path.points.push_back(start);
  path.out_of_bounds = !s.contains(start);
  if (length == 0.0 || steps == 0) return path;
  const double level = inter_foot_f(s, start);
  const double h = length / static_cast<double>(steps);
  Eigen::Vector2d p = start;
  for (std::size_t k = 0; k < steps; ++k) {
    p = detail::flow_step(s, p, h, level, opt);
    if (!s.contains(p)) path.out_of_bounds = true;
    path.points.push_back(p);
  }
  return path;
}

inline std::size_t flow_step_count(double length, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("flow: step must be positive");
  return static_cast<std::size_t>(std::ceil(std::abs(length) / step - 1e-9));
}

/// Flows along the no-slip field for a signed arc length; negative lengths
/// run against the field. The step is shrunk to divide the length evenly.
inline FlowPath flow(const ReducedShapeSubspace& s, const Eigen::Vector2d& start, double length,
                     const FlowOptions& opt = {}) {
  return flow_steps(s, start, length, flow_step_count(length, opt.step), opt);
}

/// Endpoint of a flow without keeping the path.
inline Eigen::Vector2d flow_to(const ReducedShapeSubspace& s, const Eigen::Vector2d& start, double length,
                               const FlowOptions& opt = {}) {
  return flow(s, start, length, opt).end();
}

/// Arc length of the closed F-contour through `start`, or nullopt if the
/// contour does not close within `max_length`.
inline std::optional<double> closed_contour_length(const ReducedShapeSubspace& s, const Eigen::Vector2d& start,
                                                   double max_length = 100.0, const FlowOptions& opt = {}) {
  const Eigen::Vector2d t0 = nonslip_field(s, start, opt.singular_tol);
  const double level = inter_foot_f(s, start);
  Eigen::Vector2d p = start;
  double walked = 0.0;
  double prev_proj = 0.0;
  bool left = false;
  const double h = opt.step;
  while (walked < max_length) {
    const Eigen::Vector2d q = detail::flow_step(s, p, h, level, opt);
    walked += h;
    const double proj = (q - start).dot(t0);
    if ((q - start).norm() > 10.0 * h) left = true;
    // Returning to the start: the tangential offset crosses zero from below.
    if (left && prev_proj < 0.0 && proj >= 0.0 && (q - start).norm() < 0.5) {
      // Secant refinement of the crossing on the last step.
      double lo = walked - h, hi = walked;
      double flo = prev_proj, fhi = proj;
      Eigen::Vector2d base = p;
      for (int it = 0; it < 60 && hi - lo > 1e-15; ++it) {
        const double mid = fhi != flo ? lo - flo * (hi - lo) / (fhi - flo) : 0.5 * (lo + hi);
        const Eigen::Vector2d m = detail::flow_step(s, base, mid - (walked - h), level, opt);
        const double fm = (m - start).dot(t0);
        if (std::abs(fm) < 1e-15) return mid;
        if (fm < 0.0) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
          fhi = fm;
        }
      }
      return 0.5 * (lo + hi);
    }
    prev_proj = proj;
    p = q;
  }
  return std::nullopt;
}

/// Critical points of F that are local extrema, found by a grid scan of
/// |grad F| over the subspace bounds followed by Newton refinement.
/// Saddle points are reported only when `include_saddles` is set.
inline std::vector<Singularity> find_singularities(const ReducedShapeSubspace& s, std::size_t grid_n,
                                                   bool include_saddles = false) {
  if (grid_n < 64) throw std::invalid_argument("find_singularities: grid_n must be at least 64");
  const auto n = static_cast<Eigen::Index>(grid_n);
  const Eigen::Vector2d span = s.upper - s.lower;
  const auto node = [&](Eigen::Index a, Eigen::Index b) {
    return Eigen::Vector2d(s.lower(0) + span(0) * static_cast<double>(a) / static_cast<double>(n - 1),
                           s.lower(1) + span(1) * static_cast<double>(b) / static_cast<double>(n - 1));
  };
  Eigen::MatrixXd gn(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b) gn(a, b) = grad_f(s, node(a, b)).norm();

  const double spacing = span.maxCoeff() / static_cast<double>(n - 1);
  const double bound_tol = 2.0 * spacing;
  std::vector<Singularity> found;
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      bool local_min = true;
      for (Eigen::Index da = -1; da <= 1 && local_min; ++da)
        for (Eigen::Index db = -1; db <= 1; ++db) {
          if (!da && !db) continue;
          const Eigen::Index a2 = a + da, b2 = b + db;
          if (a2 < 0 || b2 < 0 || a2 >= n || b2 >= n) continue;
          if (gn(a2, b2) < gn(a, b)) {
            local_min = false;
            break;
          }
        }
      if (!local_min) continue;

      // Newton on grad F = 0 with a pseudoinverse Hessian; degenerate minima
      // converge linearly along their flat direction, hence the iteration cap.
      Eigen::Vector2d p = node(a, b);
      for (int it = 0; it < 200; ++it) {
        const Eigen::Vector2d g = grad_f(s, p);
        if (g.norm() < 1e-14) break;
        Eigen::JacobiSVD<Eigen::Matrix2d> svd(hessian_f(s, p), Eigen::ComputeFullU | Eigen::ComputeFullV);
        const Eigen::Vector2d sv = svd.singularValues();
        Eigen::Vector2d inv = Eigen::Vector2d::Zero();
        for (int k = 0; k < 2; ++k)
          if (sv(k) > 1e-10 * sv(0)) inv(k) = 1.0 / sv(k);
        const Eigen::Vector2d dp = svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose() * g;
        if (dp.norm() > spacing * 4.0) break;  // diverging away from this cell
        p -= dp;
        if (dp.norm() < 1e-16) break;
      }
      const double gnorm = grad_f(s, p).norm();
      if (!(gnorm < 1e-8)) continue;
      if (!s.contains(p, bound_tol)) continue;

      Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(hessian_f(s, p));
      const Eigen::Vector2d ev = eig.eigenvalues();
      const double scale = std::max(std::abs(ev(0)), std::abs(ev(1)));
      const double eps = 1e-6 * scale;
      SingularityKind kind;
      if (ev(0) >= -eps && ev(1) > eps)
        kind = SingularityKind::min;
      else if (ev(1) <= eps && ev(0) < -eps)
        kind = SingularityKind::max;
      else
        kind = SingularityKind::saddle;
      if (kind == SingularityKind::saddle && !include_saddles) continue;

      const bool duplicate = std::any_of(found.begin(), found.end(), [&](const Singularity& f) {
        return (f.point - p).norm() < std::max(1e-3, 2.0 * spacing);
      });
      if (duplicate) continue;
      found.push_back({p, inter_foot_f(s, p), kind, gnorm});
    }
  }
  std::sort(found.begin(), found.end(), [](const Singularity& x, const Singularity& y) {
    return x.point(0) != y.point(0) ? x.point(0) < y.point(0) : x.point(1) < y.point(1);
  });
  return found;
}

}  // namespace strata
