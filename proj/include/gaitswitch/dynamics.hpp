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

// Planar spring-loaded inverted pendulum (point mass on a massless
// telescoping leg) with flight/stance hybrid dynamics over flat terrain
// segments separated by gaps.

#pragma once

#include <optional>
#include <string_view>
#include <vector>

namespace gaitswitch {

struct SimConfig {
  double mass = 80.0;             // kg
  double gravity = 9.81;          // m/s^2
  double rest_length = 1.0;       // m
  double stiffness = 20000.0;     // N/m
  double dt = 1e-3;               // s
  double event_tol = 1e-6;        // s
  double fall_height = 0.2;       // m
  double min_leg_fraction = 0.5;  // of rest_length
  double max_backward_speed = 0.5;  // m/s
  double thrust_limit = 4000.0;   // N

  // Throws Error(kInvalidArgument) if any invariant is violated.
  void Validate() const;

  // Half period of the linearized vertical spring-mass oscillation.
  double StanceTimeEstimate() const;

  friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

enum class ContactMode { kFlight, kStance };

std::string_view ContactModeName(ContactMode mode);

struct ApexRecord {
  double t = 0.0;
  double z = 0.0;
  double vx = 0.0;

  friend bool operator==(const ApexRecord&, const ApexRecord&) = default;
};

struct SimState {
  double t = 0.0;
  double x = 0.0;
  double z = 0.0;
  double vx = 0.0;
  double vz = 0.0;
  ContactMode mode = ContactMode::kFlight;
  double leg_angle = 0.0;  // flight only; from vertical, positive = foot ahead
  double foot_x = 0.0;     // stance only
  double foot_z = 0.0;     // stance only; terrain height under the foot
  std::optional<ApexRecord> last_apex;
  bool fallen = false;

  // Distance from the mass to the anchored foot (stance) or rest length.
  double LegLength(double rest_length) const;
  // Rate of change of the leg length; zero in flight.
  double LegLengthRate() const;

  friend bool operator==(const SimState&, const SimState&) = default;
};

struct ControlCommand {
  double thrust = 0.0;           // N, along the leg, stance only
  double touchdown_angle = 0.0;  // rad, flight only
  bool retract = false;          // flight only; a tucked foot cannot strike
};

struct TerrainSegment {
  double x_start = 0.0;
  double x_end = 0.0;
  double height = 0.0;

  friend bool operator==(const TerrainSegment&,
                         const TerrainSegment&) = default;
};

class Terrain {
 public:
  // Unbounded flat ground at height zero.
  Terrain();
  // Segments must be sorted and non-overlapping; gaps are implied between
  // consecutive segments.
  explicit Terrain(std::vector<TerrainSegment> segments);

  // Ground with one gap of the given width starting at gap_start.
  static Terrain WithGap(double gap_start, double gap_width);

  const std::vector<TerrainSegment>& segments() const { return segments_; }

  // Height of the segment under x, or nullopt over a gap.
  std::optional<double> HeightAt(double x) const;
  // Surface a foot would strike at x: the segment height, or over a gap
  // the lower of the two rims.
  double StrikeHeightAt(double x) const;
  bool IsGap(double x) const { return !HeightAt(x).has_value(); }

  friend bool operator==(const Terrain&, const Terrain&) = default;

 private:
  std::vector<TerrainSegment> segments_;
};

enum class EventKind { kNone, kApex, kTouchdown, kLiftoff, kFall };

std::string_view EventKindName(EventKind kind);

struct StepEvent {
  EventKind kind = EventKind::kNone;
  double t_event = 0.0;
};

struct StepResult {
  SimState state;
  StepEvent event;
};

// Advances by at most cfg.dt with fixed-step RK4. If an event occurs inside
// the step, its time is bracketed by bisection to within cfg.event_tol and
// the returned state lies exactly at the (post-)event instant.
// Throws Error(kNonFinite) if the integration diverges.
StepResult Step(const SimState& state, const ControlCommand& cmd,
                const SimConfig& cfg, const Terrain& terrain);

// As Step, with an explicit step length h in (0, cfg.dt].
StepResult StepFor(const SimState& state, const ControlCommand& cmd,
                   const SimConfig& cfg, const Terrain& terrain, double h);

// Kinetic + gravitational + (stance) spring potential energy, in joules.
double MechanicalEnergy(const SimState& state, const SimConfig& cfg);

}  // namespace gaitswitch
