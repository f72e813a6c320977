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

#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Core>

namespace strata {

/// Malformed model description or an operation applied to the wrong model.
class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A shape at which the constraint gradient vanishes; every limb motion from
/// there slips.
class SingularShape : public std::runtime_error {
 public:
  SingularShape(const std::string& what, Eigen::Vector2d point)
      : std::runtime_error(what), point_(std::move(point)) {}
  const Eigen::Vector2d& point() const { return point_; }

 private:
  Eigen::Vector2d point_;
};

/// Two subgaits share a stance leg.
class StanceOverlap : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace strata
