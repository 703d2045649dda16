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

// Outcome measurement for a single controller switch. The same meter is used
// when populating the tensor and when the unified controller switches live.

#pragma once

#include "gaitswitch/dynamics.hpp"
#include "gaitswitch/gait.hpp"

namespace gaitswitch {

struct TransitionOutcome {
  int eta = 0;            // 1 if alive and stabilized
  double duration = 0.0;  // s, switch to first stable instant
  double effort = 0.0;    // J, actuator work magnitude over the duration
  double accuracy = 0.0;  // mean speed-tracking reward, [0, 1]

  friend bool operator==(const TransitionOutcome&,
                         const TransitionOutcome&) = default;
};

inline constexpr double kDefaultMinEffort = 1e-3;  // J

// eta * accuracy / max(effort, min_effort) * exp(-duration).
double Consolidate(const TransitionOutcome& o,
                   double min_effort = kDefaultMinEffort);

struct MeasurementOptions {
  double max_duration = 5.0;  // s
  double reward_sigma = 0.5;  // m/s
  StabilityCriteria criteria;

  friend bool operator==(const MeasurementOptions&,
                         const MeasurementOptions&) = default;
};

// Speed-tracking reward exp(-(vx - v*)^2 / (2 sigma^2)).
double TrackingReward(double vx, double target_speed, double sigma);

class TransitionMeter {
 public:
  // The meter keeps a reference to dest; it must outlive the meter.
  TransitionMeter(const GaitSpec& dest, const SimConfig& cfg,
                  MeasurementOptions options = {});

  // Feeds one step taken under the destination controller: the state before
  // the step, the command applied and the step result. Returns true once the
  // outcome is final.
  bool Observe(const SimState& before, const ControlCommand& cmd,
               const StepResult& step);

  bool done() const { return done_; }
  bool stabilized() const { return stabilized_; }
  double elapsed() const { return elapsed_; }
  const TransitionOutcome& outcome() const { return outcome_; }

 private:
  void Finish(int eta);

  const GaitSpec* dest_;
  SimConfig cfg_;
  double sigma_;
  double max_duration_;
  double window_;
  StabilityTracker tracker_;
  double elapsed_ = 0.0;
  double effort_ = 0.0;
  bool stabilized_ = false;
  double window_elapsed_ = 0.0;
  double reward_integral_ = 0.0;
  bool done_ = false;
  TransitionOutcome outcome_;
};

// Character state on the gait's limit cycle: starts from the nominal apex
// scaled by (1 + height_noise, 1 + speed_noise) and runs the gait for
// phase * T. The clock is returned through clock. Falls before reaching the
// phase are reported through the state's fallen flag.
SimState StateOnCycle(const GaitSpec& gait, double phase, double height_noise,
                      double speed_noise, const SimConfig& cfg,
                      const Terrain& terrain, ControllerClock* clock);

// Switches from state to dest with the clock at omega and runs until the
// meter finalizes.
TransitionOutcome RunSwitch(const SimState& state, const GaitSpec& dest,
                            double omega, const SimConfig& cfg,
                            const Terrain& terrain,
                            const MeasurementOptions& options = {});

}  // namespace gaitswitch
