// Copyright 2026 The gaitswitch Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// JSON forms of the simulation configuration, gait library and terrain.
//
// A configuration document looks like
//
//   {
//     "sim": {"mass": 80, "stiffness": 20000},
//     "gaits": [{"name": "Trot", "target_speed": 1.6}],
//     "terrain": [{"x_start": -1e9, "x_end": 10, "height": 0}, ...]
//   }
//
// Every section and key is optional. Gait entries override the default
// library entry of the same name or append a new motion.

#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "gaitswitch/dynamics.hpp"
#include "gaitswitch/gait.hpp"

namespace gaitswitch {

nlohmann::json SimConfigToJson(const SimConfig& cfg);
// Starts from base and applies the keys present. Unknown keys and
// non-numeric values throw Error(kInvalidArgument).
SimConfig SimConfigFromJson(const nlohmann::json& j, SimConfig base = {});

// Measured limit-cycle fields are written only when include_cycle is set.
nlohmann::json GaitToJson(const GaitSpec& gait, bool include_cycle);
GaitSpec GaitFromJson(const nlohmann::json& j, GaitSpec base = {});

nlohmann::json TerrainToJson(const Terrain& terrain);
Terrain TerrainFromJson(const nlohmann::json& j);

struct ScenarioConfig {
  SimConfig sim;
  std::vector<GaitSpec> gaits = DefaultGaitLibrary();
  Terrain terrain;
};

ScenarioConfig ParseConfig(const std::string& text);
ScenarioConfig LoadConfig(const std::string& path);

// Reads a whole file; throws Error(kInvalidArgument) if it cannot be opened.
std::string ReadFile(const std::string& path);

}  // namespace gaitswitch
