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

#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

namespace strata {

/// Planar rigid transform (x, y, theta). The angle is stored unwrapped so that
/// rotation accumulated over many gait cycles stays meaningful; use
/// wrap_angle() for display.
struct SE2 {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  static constexpr SE2 identity() { return {}; }

  Eigen::Vector2d translation() const { return {x, y}; }
  Eigen::Matrix2d rotation() const {
    const double c = std::cos(theta), s = std::sin(theta);
    Eigen::Matrix2d r;
    r << c, -s, s, c;
    return r;
  }
};

/// Left-trivialized (body-frame) velocity.
struct SE2Velocity {
  double vx = 0.0;
  double vy = 0.0;
  double omega = 0.0;

  SE2Velocity operator+(const SE2Velocity& o) const { return {vx + o.vx, vy + o.vy, omega + o.omega}; }
  SE2Velocity operator-(const SE2Velocity& o) const { return {vx - o.vx, vy - o.vy, omega - o.omega}; }
  SE2Velocity operator*(double s) const { return {vx * s, vy * s, omega * s}; }
  SE2Velocity operator-() const { return {-vx, -vy, -omega}; }
  bool finite() const { return std::isfinite(vx) && std::isfinite(vy) && std::isfinite(omega); }

  Eigen::Vector3d vec() const { return {vx, vy, omega}; }
  static SE2Velocity from(const Eigen::Vector3d& v) { return {v(0), v(1), v(2)}; }
};

inline SE2Velocity operator*(double s, const SE2Velocity& v) { return v * s; }

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double w = std::fmod(a + std::numbers::pi, two_pi);
  if (w <= 0.0) w += two_pi;
  return w - std::numbers::pi;
}

inline SE2 compose(const SE2& a, const SE2& b) {
  const double c = std::cos(a.theta), s = std::sin(a.theta);
  return {a.x + c * b.x - s * b.y, a.y + s * b.x + c * b.y, a.theta + b.theta};
}

inline SE2 inverse(const SE2& g) {
  const double c = std::cos(g.theta), s = std::sin(g.theta);
  return {-c * g.x - s * g.y, s * g.x - c * g.y, -g.theta};
}

inline SE2 operator*(const SE2& a, const SE2& b) { return compose(a, b); }

/// Action of g on a point.
inline Eigen::Vector2d act(const SE2& g, const Eigen::Vector2d& p) {
  return g.rotation() * p + g.translation();
}

/// Adjoint of g^-1: re-expresses a body velocity in the frame g that is
/// rigidly attached to the body. Velocity of a point p moving with (v, w) is
/// v + w * J p, rotated into g's orientation.
inline Eigen::Matrix3d adjoint_inverse(const SE2& g) {
  const Eigen::Matrix2d rt = g.rotation().transpose();
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
  m.topLeftCorner<2, 2>() = rt;
  m.block<2, 1>(0, 2) = rt * Eigen::Vector2d(-g.y, g.x);
  m(2, 2) = 1.0;
  return m;
}

namespace detail {

// Coefficients sin(w)/w and (1 - cos(w))/w with a series branch near zero;
// the second is evaluated as 2 sin^2(w/2)/w to avoid cancellation.
inline void exp_coefficients(double w, double& a, double& b) {
  if (std::abs(w) < 1e-6) {
    const double w2 = w * w;
    a = 1.0 - w2 / 6.0 + w2 * w2 / 120.0;
    b = w / 2.0 - w * w2 / 24.0;
  } else {
    a = std::sin(w) / w;
    const double sh = std::sin(0.5 * w);
    b = 2.0 * sh * sh / w;
  }
}

}  // namespace detail

/// Closed-form group exponential.
inline SE2 exp(const SE2Velocity& xi) {
  double a = 0.0, b = 0.0;
  detail::exp_coefficients(xi.omega, a, b);
  return {a * xi.vx - b * xi.vy, b * xi.vx + a * xi.vy, xi.omega};
}

/// Closed-form group logarithm. The angle is taken as stored (unwrapped).
inline SE2Velocity log(const SE2& g) {
  double a = 0.0, b = 0.0;
  detail::exp_coefficients(g.theta, a, b);
  const double det = a * a + b * b;
  return {(a * g.x + b * g.y) / det, (-b * g.x + a * g.y) / det, g.theta};
}

/// Lie bracket [a, b] on se(2).
inline SE2Velocity bracket(const SE2Velocity& a, const SE2Velocity& b) {
  return {-a.omega * b.vy + b.omega * a.vy, a.omega * b.vx - b.omega * a.vx, 0.0};
}

class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, double tau) : std::runtime_error(what), tau_(tau) {}
  double tau() const { return tau_; }

 private:
  double tau_;
};

/// Integrates g' = g * xi(tau) on a uniform grid. `half_steps` holds xi at
/// tau0 + k * step / 2 for k = 0 .. 2N, so N = (size - 1) / 2 steps are taken.
///
/// Scheme: Runge-Kutta-Munthe-Kaas of order four. The stage slopes are
/// corrected with the truncated inverse exponential differential (body-frame
/// sign, Omega' = xi + [Omega, xi] / 2 + [Omega, [Omega, xi]] / 12) and each
/// step is applied through the exact group exponential, so a constant
/// velocity is integrated exactly regardless of the step count.
inline SE2 integrate_body_velocity_sampled(const SE2& g0, std::span<const SE2Velocity> half_steps, double step,
                                           double tau0 = 0.0, std::vector<SE2>* nodes = nullptr) {
  if (!(step > 0.0)) throw std::invalid_argument("integrate_body_velocity: step must be positive");
  if (half_steps.size() % 2 == 0) throw std::invalid_argument("integrate_body_velocity: need 2N+1 samples");
  const auto dexpinv = [](const SE2Velocity& omega, const SE2Velocity& v) {
    const SE2Velocity b1 = bracket(omega, v);
    return v + 0.5 * b1 + (1.0 / 12.0) * bracket(omega, b1);
  };
  for (std::size_t k = 0; k < half_steps.size(); ++k) {
    if (!half_steps[k].finite()) {
      const double tau = tau0 + 0.5 * step * static_cast<double>(k);
      std::ostringstream os;
      os << "non-finite body velocity at tau=" << tau;
      throw IntegrationError(os.str(), tau);
    }
  }
  const std::size_t n = (half_steps.size() - 1) / 2;
  SE2 g = g0;
  if (nodes) {
    nodes->clear();
    nodes->reserve(n + 1);
    nodes->push_back(g);
  }
  const double h = step;
  for (std::size_t i = 0; i < n; ++i) {
    const SE2Velocity& x0 = half_steps[2 * i];
    const SE2Velocity& xm = half_steps[2 * i + 1];
    const SE2Velocity& x1 = half_steps[2 * i + 2];
    const SE2Velocity k1 = x0;
    const SE2Velocity k2 = dexpinv(0.5 * h * k1, xm);
    const SE2Velocity k3 = dexpinv(0.5 * h * k2, xm);
    const SE2Velocity k4 = dexpinv(h * k3, x1);
    const SE2Velocity omega = (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    g = compose(g, exp(omega));
    if (nodes) nodes->push_back(g);
  }
  return g;
}

/// Integrates g' = g * xi(tau) from tau0 to tau1 with (at most) the given
/// step; the step is shrunk so the span is covered by whole steps. A
/// reversed span (tau1 < tau0) integrates backwards.
inline SE2 integrate_body_velocity(const SE2& g0, const std::function<SE2Velocity(double)>& xi, double tau0,
                                   double tau1, double step = std::numbers::pi / 2000.0) {
  if (!(step > 0.0)) throw std::invalid_argument("integrate_body_velocity: step must be positive");
  const double span = tau1 - tau0;
  if (span == 0.0) return g0;
  const auto n = static_cast<std::size_t>(std::ceil(std::abs(span) / step - 1e-9));
  const double h = span / static_cast<double>(n);
  std::vector<SE2Velocity> samples(2 * n + 1);
  for (std::size_t k = 0; k <= 2 * n; ++k) {
    const double tau = tau0 + 0.5 * h * static_cast<double>(k);
    const SE2Velocity v = xi(tau);
    if (!v.finite()) {
      std::ostringstream os;
      os << "non-finite body velocity at tau=" << tau;
      throw IntegrationError(os.str(), tau);
    }
    // Backward integration in tau is forward integration of -xi.
    samples[k] = h > 0.0 ? v : -v;
  }
  return integrate_body_velocity_sampled(g0, samples, std::abs(h), tau0);
}

}  // namespace strata
