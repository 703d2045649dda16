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

#include "gaitswitch/unified.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include "gaitswitch/error.hpp"

namespace gaitswitch {
namespace {

constexpr double kModeMismatchPenalty = 1e3;

bool Cyclic(const GaitSpec& g) { return !g.standing && g.nominal_cycle > 0.0; }

}  // namespace

std::string_view SwitchStrategyName(SwitchStrategy s) {
  switch (s) {
    case SwitchStrategy::kTmt:
      return "TMT";
    case SwitchStrategy::kRandomPhase:
      return "RandomPhase";
    case SwitchStrategy::kImmediate:
      return "Immediate";
    case SwitchStrategy::kPoseDistance:
      return "PoseDistance";
    case SwitchStrategy::kOutcomeOnly:
      return "OutcomeOnly";
    case SwitchStrategy::kStabilityOnly:
      return "StabilityOnly";
  }
  return "?";
}

SwitchStrategy ParseSwitchStrategy(std::string_view name) {
  for (SwitchStrategy s :
       {SwitchStrategy::kTmt, SwitchStrategy::kRandomPhase,
        SwitchStrategy::kImmediate, SwitchStrategy::kPoseDistance,
        SwitchStrategy::kOutcomeOnly, SwitchStrategy::kStabilityOnly}) {
    if (SwitchStrategyName(s) == name) return s;
  }
  throw Error(ErrorCode::kInvalidArgument,
              "unknown strategy '" + std::string(name) + "'");
}

std::vector<CycleSample> SampleCycle(const GaitSpec& gait, int bins,
                                     const SimConfig& cfg) {
  std::vector<CycleSample> out;
  const Terrain ground;
  for (int b = 0; b < bins; ++b) {
    const SimState s =
        StateOnCycle(gait, (b + 0.5) / bins, 0.0, 0.0, cfg, ground, nullptr);
    out.push_back({s.z, s.vx, s.mode});
  }
  return out;
}

UnifiedController::UnifiedController(const TransitionTensor& tensor,
                                     const MotionId& initial,
                                     UnifiedOptions options)
    : tensor_(&tensor), options_(options), rng_(options.seed) {
  GetGait(tensor.gaits(), initial);
  state_.active = initial;
}

const GaitSpec& UnifiedController::active_gait() const {
  return GetGait(tensor_->gaits(), state_.active);
}

void UnifiedController::Reset(const MotionId& motion,
                              const ControllerClock& clock) {
  GetGait(tensor_->gaits(), motion);
  state_ = UnifiedState{};
  state_.active = motion;
  state_.clock = clock;
  skipped_ = false;
}

int UnifiedController::PhaseBin(double phase) const {
  const int bins = tensor_->bins();
  return std::clamp(static_cast<int>(phase * bins), 0, bins - 1);
}

void UnifiedController::RequestMotion(const MotionId& target) {
  GetGait(tensor_->gaits(), target);
  if (state_.measuring) {
    if (target == state_.active) {
      state_.deferred.reset();
    } else {
      state_.deferred = target;
    }
    return;
  }
  if (target == state_.active) {
    state_.pending.reset();
    return;
  }
  state_.pending.reset();
  skipped_ = false;
  state_.pending = Plan(target);
}

SwitchPlan UnifiedController::Plan(const MotionId& target) {
  const GaitSpec& source = active_gait();
  const GaitSpec& dest = GetGait(tensor_->gaits(), target);
  const int bins = tensor_->bins();
  const double phase = state_.clock.phase;
  SwitchPlan plan;
  plan.target = target;
  switch (options_.strategy) {
    case SwitchStrategy::kTmt:
    case SwitchStrategy::kOutcomeOnly:
    case SwitchStrategy::kStabilityOnly: {
      QueryOptions q = options_.query;
      q.mode = options_.strategy == SwitchStrategy::kTmt ? ScoreMode::kQuality
               : options_.strategy == SwitchStrategy::kOutcomeOnly
                   ? ScoreMode::kOutcome
                   : ScoreMode::kStability;
      const QualityQueryResult r =
          tensor_->QueryBest(source.id, phase, target, q);
      plan.phi_bin = r.phi_bin;
      plan.omega_bin = r.omega_bin;
      plan.omega = (r.omega_bin + 0.5) / bins;
      plan.score = r.quality;
      plan.wait_time = r.wait_time;
      break;
    }
    case SwitchStrategy::kImmediate:
      plan.phi_bin = PhaseBin(phase);
      plan.omega = Cyclic(dest) ? phase : 0.0;
      plan.omega_bin = PhaseBin(plan.omega);
      plan.immediate = true;
      break;
    case SwitchStrategy::kRandomPhase:
      plan = PlanRandomPhase(target);
      break;
    case SwitchStrategy::kPoseDistance:
      plan = PlanPoseDistance(target);
      break;
  }
  if (!Cyclic(dest)) {
    plan.omega = 0.0;
    plan.omega_bin = 0;
  }
  return plan;
}

SwitchPlan UnifiedController::PlanRandomPhase(const MotionId& target) {
  const GaitSpec& source = active_gait();
  const int bins = tensor_->bins();
  const double phase = state_.clock.phase;
  std::vector<int> reachable;
  for (int p = 0; p < bins; ++p) {
    if (!Cyclic(source) && p != PhaseBin(phase)) continue;
    if (BinWaitPhase(phase, p, bins) <= options_.query.horizon) {
      reachable.push_back(p);
    }
  }
  if (reachable.empty()) reachable.push_back(PhaseBin(phase));
  std::uniform_int_distribution<std::size_t> pick(0, reachable.size() - 1);
  std::uniform_int_distribution<int> omega(0, bins - 1);
  SwitchPlan plan;
  plan.target = target;
  plan.phi_bin = reachable[pick(rng_)];
  plan.omega_bin = omega(rng_);
  plan.omega = (plan.omega_bin + 0.5) / bins;
  plan.wait_time = BinWaitPhase(phase, plan.phi_bin, bins) *
                   (Cyclic(source) ? source.nominal_cycle : 0.0);
  return plan;
}

SwitchPlan UnifiedController::PlanPoseDistance(const MotionId& target) const {
  const GaitSpec& source = active_gait();
  const GaitSpec& dest = GetGait(tensor_->gaits(), target);
  const SimConfig& cfg = tensor_->sim_config();
  const StabilityCriteria& eps = tensor_->params().measurement.criteria;
  const int bins = tensor_->bins();
  const double phase = state_.clock.phase;
  const std::vector<CycleSample> from = SampleCycle(source, bins, cfg);
  const std::vector<CycleSample> to = SampleCycle(dest, bins, cfg);

  SwitchPlan best;
  best.target = target;
  double best_distance = std::numeric_limits<double>::infinity();
  double best_wait = 0.0;
  for (int p = 0; p < bins; ++p) {
    if (!Cyclic(source) && p != PhaseBin(phase)) continue;
    const double wait_phase = BinWaitPhase(phase, p, bins);
    if (wait_phase > options_.query.horizon) continue;
    const double wait =
        wait_phase * (Cyclic(source) ? source.nominal_cycle : 0.0);
    for (int o = 0; o < bins; ++o) {
      const CycleSample& a = from[static_cast<std::size_t>(p)];
      const CycleSample& b = to[static_cast<std::size_t>(o)];
      const double distance =
          std::hypot((a.z - b.z) / eps.eps_height, (a.vx - b.vx) / eps.eps_speed) +
          (a.mode == b.mode ? 0.0 : kModeMismatchPenalty);
      if (std::tie(distance, wait, o) < std::tie(best_distance, best_wait,
                                                 best.omega_bin)) {
        best_distance = distance;
        best_wait = wait;
        best.phi_bin = p;
        best.omega_bin = o;
      }
    }
  }
  best.omega = (best.omega_bin + 0.5) / bins;
  best.score = -best_distance;
  best.wait_time = best_wait;
  return best;
}

bool UnifiedController::ShouldSwitch() const {
  const SwitchPlan& plan = *state_.pending;
  return plan.immediate || skipped_ ||
         PhaseBin(state_.clock.phase) == plan.phi_bin;
}

void UnifiedController::Switch() {
  const SwitchPlan plan = *state_.pending;
  const GaitSpec& dest = GetGait(tensor_->gaits(), plan.target);
  state_.active = plan.target;
  state_.clock = ClockAtPhase(dest, plan.omega);
  state_.pending.reset();
  skipped_ = false;
  state_.measuring.emplace(dest, tensor_->sim_config(),
                           tensor_->params().measurement);
}

TickResult UnifiedController::Tick(SimState& state, const Terrain& terrain) {
  TickResult result;
  if (state_.pending && !state_.measuring && ShouldSwitch()) {
    Switch();
    result.switched = true;
  }
  const GaitSpec& gait = active_gait();
  const SimConfig& cfg = tensor_->sim_config();
  const ControlCommand cmd =
      Control(gait, state, state_.clock, DirectiveFor(gait), cfg);
  const StepResult step = Step(state, cmd, cfg, terrain);
  const double progress = gait.nominal_cycle > 0.0
                              ? state_.clock.time_since_apex / gait.nominal_cycle
                              : 0.0;
  state_.clock = AdvanceClock(state_.clock, step.event, gait, step.state.t - state.t);
  // An early apex resets the clock before the planned bin was entered.
  if (state_.pending && step.event.kind == EventKind::kApex &&
      progress < static_cast<double>(state_.pending->phi_bin) / tensor_->bins()) {
    skipped_ = true;
  }
  if (state_.measuring && state_.measuring->Observe(state, cmd, step)) {
    result.finished = state_.measuring->outcome();
    state_.last_outcome = result.finished;
    state_.measuring.reset();
    if (state_.deferred && !step.state.fallen) {
      const MotionId next = *state_.deferred;
      state_.deferred.reset();
      try {
        RequestMotion(next);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kNoViableTransition) throw;
      }
    }
  }
  state = step.state;
  result.event = step.event;
  return result;
}

}  // namespace gaitswitch
