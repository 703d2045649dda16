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

// Runtime that owns the active gait controller, plans switches to requested
// motions and measures each live transition.

#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include "gaitswitch/dynamics.hpp"
#include "gaitswitch/gait.hpp"
#include "gaitswitch/tensor.hpp"
#include "gaitswitch/transition.hpp"

namespace gaitswitch {

enum class SwitchStrategy {
  kTmt,
  kRandomPhase,
  kImmediate,
  kPoseDistance,
  kOutcomeOnly,
  kStabilityOnly,
};

std::string_view SwitchStrategyName(SwitchStrategy s);
// Throws Error(kInvalidArgument) for unknown names.
SwitchStrategy ParseSwitchStrategy(std::string_view name);

struct SwitchPlan {
  MotionId target;
  int phi_bin = 0;
  int omega_bin = 0;
  double omega = 0.0;  // destination clock phase at the switch
  double score = 0.0;  // quality, or negated pose distance
  double wait_time = 0.0;  // s
  bool immediate = false;  // fire on the next tick regardless of phase
};

struct UnifiedOptions {
  SwitchStrategy strategy = SwitchStrategy::kTmt;
  QueryOptions query;
  std::uint64_t seed = 0;  // random-phase planner stream
};

struct UnifiedState {
  MotionId active;
  ControllerClock clock;
  std::optional<SwitchPlan> pending;
  // Request received while a transition is being measured.
  std::optional<MotionId> deferred;
  std::optional<TransitionMeter> measuring;
  std::optional<TransitionOutcome> last_outcome;
};

struct TickResult {
  StepEvent event;
  bool switched = false;
  std::optional<TransitionOutcome> finished;
};

class UnifiedController {
 public:
  // The tensor must outlive the controller.
  UnifiedController(const TransitionTensor& tensor, const MotionId& initial,
                    UnifiedOptions options = {});

  const UnifiedState& state() const { return state_; }
  const GaitSpec& active_gait() const;
  const TransitionTensor& tensor() const { return *tensor_; }
  const UnifiedOptions& options() const { return options_; }

  // Places the controller on `motion` with the given clock, dropping any
  // pending plan and measurement.
  void Reset(const MotionId& motion, const ControllerClock& clock);

  // Plans a switch to target. Requests for the active motion clear the
  // pending plan; requests during a measured transition are deferred until it
  // finalizes. A newer request replaces an older one.
  // Throws Error(kNoViableTransition) (pending left unset) or
  // Error(kInvalidArgument) for motions outside the vocabulary.
  void RequestMotion(const MotionId& target);

  // Advances state by one simulation step, switching first if the planned
  // phase bin has been reached. Falls are reported through the event.
  TickResult Tick(SimState& state, const Terrain& terrain);

 private:
  SwitchPlan Plan(const MotionId& target);
  SwitchPlan PlanPoseDistance(const MotionId& target) const;
  SwitchPlan PlanRandomPhase(const MotionId& target);
  bool ShouldSwitch() const;
  void Switch();
  int PhaseBin(double phase) const;

  const TransitionTensor* tensor_;
  UnifiedOptions options_;
  UnifiedState state_;
  bool skipped_ = false;
  std::mt19937_64 rng_;
};

// Sample (z, vx, mode) of a gait's limit cycle at each phase-bin center.
struct CycleSample {
  double z = 0.0;
  double vx = 0.0;
  ContactMode mode = ContactMode::kFlight;
};
std::vector<CycleSample> SampleCycle(const GaitSpec& gait, int bins,
                                     const SimConfig& cfg);

}  // namespace gaitswitch
