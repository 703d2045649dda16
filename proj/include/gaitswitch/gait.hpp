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

// Analytic cyclic gait controllers for the spring-mass character.
//
// Each gait is a Raibert-style hopper: foot placement regulates forward
// speed and leg thrust during extension regulates the cycle energy. The
// leg swing during flight is scheduled by the controller clock, whose phase
// is the normalized time since the last apex. A clock that disagrees with
// the physical phase therefore produces a mistimed touchdown, which is what
// makes the switching instant matter.

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gaitswitch/dynamics.hpp"

namespace gaitswitch {

// Symbolic motion name. Identity is the name, so adding motions never
// renumbers existing ones.
struct MotionId {
  std::string name;

  friend auto operator<=>(const MotionId&, const MotionId&) = default;
};

struct ApexPoint {
  double z = 0.0;   // m
  double vx = 0.0;  // m/s

  friend bool operator==(const ApexPoint&, const ApexPoint&) = default;
};

struct GaitSpec {
  MotionId id;
  double target_speed = 0.0;        // m/s
  double target_apex_height = 1.0;  // m
  double raibert_gain = 0.1;        // s
  // Energy-regulation gain; for standing gaits, the leg damping ratio.
  double thrust_gain = 5.0;
  bool standing = false;

  // Measured by FindLimitCycle / MeasureGait.
  bool has_cycle = false;
  double nominal_cycle = 0.0;  // s; zero for standing gaits
  ApexPoint nominal_apex;
  double touchdown_phase = 0.0;
  double liftoff_phase = 0.0;

  friend bool operator==(const GaitSpec&, const GaitSpec&) = default;
};

struct Directive {
  double target_speed = 0.0;  // m/s
};

Directive DirectiveFor(const GaitSpec& gait);

struct ControllerClock {
  double phase = 0.0;            // [0, 1)
  double time_since_apex = 0.0;  // s

  friend bool operator==(const ControllerClock&,
                         const ControllerClock&) = default;
};

// Clock positioned at phase for the given gait (standing gaits stay at 0).
ControllerClock ClockAtPhase(const GaitSpec& gait, double phase);

ControlCommand Control(const GaitSpec& gait, const SimState& state,
                       const ControllerClock& clock, const Directive& directive,
                       const SimConfig& cfg);

// Raibert touchdown angle for forward speed vx and target speed.
double RaibertAngle(const GaitSpec& gait, double vx, double target_speed,
                    const SimConfig& cfg);

ControllerClock AdvanceClock(const ControllerClock& clock,
                             const StepEvent& event, const GaitSpec& gait,
                             double dt);

// Static stance height of the mass.
double StandingHeight(const SimConfig& cfg);

struct ApexMapResult {
  ApexPoint next;
  double period = 0.0;
  double touchdown_time = 0.0;  // since the starting apex
  double liftoff_time = 0.0;
};

// One apex-to-apex cycle starting at apex p under the gait's controller.
// Returns nullopt if the character falls or no apex follows a stance.
std::optional<ApexMapResult> ApexReturnMap(const GaitSpec& gait,
                                           const ApexPoint& p,
                                           const SimConfig& cfg);

struct LimitCycle {
  ApexPoint apex;
  double period = 0.0;
  double touchdown_phase = 0.0;
  double liftoff_phase = 0.0;
  double residual = 0.0;  // max-norm of A(p) - p
  int iterations = 0;
};

// Fixed point of the apex return map by damped secant (Broyden) iteration
// from (h*, v*). Standing gaits return the static equilibrium with period 0.
// Throws Error(kNoCycle) if 100 iterations do not converge.
LimitCycle FindLimitCycle(const GaitSpec& gait, const SimConfig& cfg);

// Copy of gait with the measured limit cycle filled in.
GaitSpec MeasureGait(GaitSpec gait, const SimConfig& cfg);

// Apex state on the gait's limit cycle.
SimState ApexState(const GaitSpec& gait, const ApexPoint& apex,
                   const SimConfig& cfg);

struct StabilityCriteria {
  double eps_height = 0.03;  // m
  double eps_speed = 0.1;    // m/s
  int apex_count = 3;

  friend bool operator==(const StabilityCriteria&,
                         const StabilityCriteria&) = default;
};

bool IsStable(std::span<const ApexPoint> apex_history, const GaitSpec& gait,
              double eps_height, double eps_speed, int apex_count);

// Streaming form of IsStable. Locomotion gaits are judged on apex events;
// standing gaits need the mass to stay still near the standing height for
// apex_count * 0.5 s.
class StabilityTracker {
 public:
  StabilityTracker(const GaitSpec& gait, const SimConfig& cfg,
                   StabilityCriteria criteria = {});

  // Feeds the state reached by one step and the step's event and duration.
  // Returns true once the gait is stable.
  bool Observe(const SimState& state, const StepEvent& event, double dt);
  bool stable() const { return stable_; }
  const std::vector<ApexPoint>& apex_history() const { return history_; }

 private:
  const GaitSpec* gait_;
  StabilityCriteria criteria_;
  double standing_height_;
  std::vector<ApexPoint> history_;
  double settled_time_ = 0.0;
  bool stable_ = false;
};

// Default motion vocabulary (targets and gains only; cycles unmeasured).
std::vector<GaitSpec> DefaultGaitLibrary();

const GaitSpec* FindGait(std::span<const GaitSpec> gaits, const MotionId& id);
const GaitSpec& GetGait(std::span<const GaitSpec> gaits, const MotionId& id);

}  // namespace gaitswitch
