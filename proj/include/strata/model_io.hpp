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

#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "strata/errors.hpp"
#include "strata/model.hpp"

namespace strata {

inline constexpr int kModelFileVersion = 1;

// Model file:
//   { "version": 1, "name": str, "body_length": f,
//     "legs": [ { "hip": {"x": f, "y": f, "theta": f}, "length": f, "swing": [min, max] } ] }
// "version" and "body_length" are optional.

inline nlohmann::json to_json(const ModelSpec& model) {
  nlohmann::json legs = nlohmann::json::array();
  for (const LegModule& l : model.legs) {
    legs.push_back({{"hip", {{"x", l.hip.x}, {"y", l.hip.y}, {"theta", l.hip.theta}}},
                    {"length", l.length},
                    {"swing", {l.swing_min, l.swing_max}}});
  }
  return {{"version", kModelFileVersion}, {"name", model.name}, {"body_length", model.body_length}, {"legs", legs}};
}

inline ModelSpec model_from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object()) throw ModelError("model file: top level must be an object");
    if (j.contains("version") && j.at("version").get<int>() != kModelFileVersion)
      throw ModelError("model file: unsupported version " + j.at("version").dump());
    ModelSpec m;
    m.name = j.at("name").get<std::string>();
    m.body_length = j.value("body_length", 0.0);
    for (const auto& jl : j.at("legs")) {
      LegModule l;
      const auto& hip = jl.at("hip");
      l.hip = SE2{hip.at("x").get<double>(), hip.at("y").get<double>(), hip.at("theta").get<double>()};
      l.length = jl.at("length").get<double>();
      const auto& swing = jl.at("swing");
      if (!swing.is_array() || swing.size() != 2) throw ModelError("model file: swing must be [min, max]");
      l.swing_min = swing.at(0).get<double>();
      l.swing_max = swing.at(1).get<double>();
      m.legs.push_back(l);
    }
    m.validate();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("model file: ") + e.what());
  }
}

inline ModelSpec load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open model file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ModelError("model file '" + path + "': " + e.what());
  }
  return model_from_json(j);
}

}  // namespace strata
