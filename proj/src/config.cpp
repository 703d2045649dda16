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

#include "gaitswitch/config.hpp"

#include <fstream>
#include <sstream>
#include <string_view>

#include "gaitswitch/error.hpp"

namespace gaitswitch {
namespace {

using nlohmann::json;

[[noreturn]] void Invalid(const std::string& what) {
  throw Error(ErrorCode::kInvalidArgument, what);
}

double Number(const json& j, std::string_view key) {
  if (!j.is_number()) Invalid("'" + std::string(key) + "' must be a number");
  return j.get<double>();
}

bool Boolean(const json& j, std::string_view key) {
  if (!j.is_boolean()) Invalid("'" + std::string(key) + "' must be a boolean");
  return j.get<bool>();
}

void RequireObject(const json& j, std::string_view what) {
  if (!j.is_object()) Invalid(std::string(what) + " must be an object");
}

}  // namespace

json SimConfigToJson(const SimConfig& cfg) {
  return json{{"mass", cfg.mass},
              {"gravity", cfg.gravity},
              {"rest_length", cfg.rest_length},
              {"stiffness", cfg.stiffness},
              {"dt", cfg.dt},
              {"event_tol", cfg.event_tol},
              {"fall_height", cfg.fall_height},
              {"min_leg_fraction", cfg.min_leg_fraction},
              {"max_backward_speed", cfg.max_backward_speed},
              {"thrust_limit", cfg.thrust_limit}};
}

SimConfig SimConfigFromJson(const json& j, SimConfig cfg) {
  RequireObject(j, "sim");
  for (const auto& [key, value] : j.items()) {
    if (key == "mass") cfg.mass = Number(value, key);
    else if (key == "gravity") cfg.gravity = Number(value, key);
    else if (key == "rest_length") cfg.rest_length = Number(value, key);
    else if (key == "stiffness") cfg.stiffness = Number(value, key);
    else if (key == "dt") cfg.dt = Number(value, key);
    else if (key == "event_tol") cfg.event_tol = Number(value, key);
    else if (key == "fall_height") cfg.fall_height = Number(value, key);
    else if (key == "min_leg_fraction") cfg.min_leg_fraction = Number(value, key);
    else if (key == "max_backward_speed") cfg.max_backward_speed = Number(value, key);
    else if (key == "thrust_limit") cfg.thrust_limit = Number(value, key);
    else Invalid("unknown sim key '" + key + "'");
  }
  cfg.Validate();
  return cfg;
}

json GaitToJson(const GaitSpec& gait, bool include_cycle) {
  json j{{"name", gait.id.name},
         {"target_speed", gait.target_speed},
         {"target_apex_height", gait.target_apex_height},
         {"raibert_gain", gait.raibert_gain},
         {"thrust_gain", gait.thrust_gain},
         {"standing", gait.standing}};
  if (include_cycle) {
    j["has_cycle"] = gait.has_cycle;
    j["nominal_cycle"] = gait.nominal_cycle;
    j["nominal_apex"] = {gait.nominal_apex.z, gait.nominal_apex.vx};
    j["touchdown_phase"] = gait.touchdown_phase;
    j["liftoff_phase"] = gait.liftoff_phase;
  }
  return j;
}

GaitSpec GaitFromJson(const json& j, GaitSpec gait) {
  RequireObject(j, "gait");
  for (const auto& [key, value] : j.items()) {
    if (key == "name") {
      if (!value.is_string() || value.get<std::string>().empty()) {
        Invalid("gait name must be a non-empty string");
      }
      gait.id.name = value.get<std::string>();
    } else if (key == "target_speed") {
      gait.target_speed = Number(value, key);
    } else if (key == "target_apex_height") {
      gait.target_apex_height = Number(value, key);
    } else if (key == "raibert_gain") {
      gait.raibert_gain = Number(value, key);
    } else if (key == "thrust_gain") {
      gait.thrust_gain = Number(value, key);
    } else if (key == "standing") {
      gait.standing = Boolean(value, key);
    } else if (key == "has_cycle") {
      gait.has_cycle = Boolean(value, key);
    } else if (key == "nominal_cycle") {
      gait.nominal_cycle = Number(value, key);
    } else if (key == "nominal_apex") {
      if (!value.is_array() || value.size() != 2) {
        Invalid("nominal_apex must be [z, vx]");
      }
      gait.nominal_apex = {Number(value[0], key), Number(value[1], key)};
    } else if (key == "touchdown_phase") {
      gait.touchdown_phase = Number(value, key);
    } else if (key == "liftoff_phase") {
      gait.liftoff_phase = Number(value, key);
    } else {
      Invalid("unknown gait key '" + key + "'");
    }
  }
  if (gait.id.name.empty()) Invalid("gait without a name");
  return gait;
}

json TerrainToJson(const Terrain& terrain) {
  json out = json::array();
  for (const TerrainSegment& s : terrain.segments()) {
    out.push_back({{"x_start", s.x_start}, {"x_end", s.x_end}, {"height", s.height}});
  }
  return out;
}

Terrain TerrainFromJson(const json& j) {
  if (!j.is_array()) Invalid("terrain must be an array of segments");
  std::vector<TerrainSegment> segments;
  for (const json& s : j) {
    RequireObject(s, "terrain segment");
    TerrainSegment seg;
    for (const auto& [key, value] : s.items()) {
      if (key == "x_start") seg.x_start = Number(value, key);
      else if (key == "x_end") seg.x_end = Number(value, key);
      else if (key == "height") seg.height = Number(value, key);
      else Invalid("unknown terrain key '" + key + "'");
    }
    segments.push_back(seg);
  }
  return Terrain(std::move(segments));
}

ScenarioConfig ParseConfig(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    Invalid(std::string("config is not valid JSON: ") + e.what());
  }
  RequireObject(j, "config");
  ScenarioConfig out;
  for (const auto& [key, value] : j.items()) {
    if (key == "sim") {
      out.sim = SimConfigFromJson(value);
    } else if (key == "gaits") {
      if (!value.is_array()) Invalid("gaits must be an array");
      for (const json& g : value) {
        RequireObject(g, "gait");
        if (!g.contains("name") || !g.at("name").is_string()) {
          Invalid("gait without a name");
        }
        const MotionId id{g.at("name").get<std::string>()};
        bool replaced = false;
        for (GaitSpec& existing : out.gaits) {
          if (existing.id == id) {
            existing = GaitFromJson(g, existing);
            replaced = true;
          }
        }
        if (!replaced) out.gaits.push_back(GaitFromJson(g));
      }
    } else if (key == "terrain") {
      out.terrain = TerrainFromJson(value);
    } else {
      Invalid("unknown config section '" + key + "'");
    }
  }
  return out;
}

ScenarioConfig LoadConfig(const std::string& path) {
  return ParseConfig(ReadFile(path));
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Invalid("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace gaitswitch
