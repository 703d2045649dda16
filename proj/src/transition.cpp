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

#include "gaitswitch/transition.hpp"

#include <algorithm>
#include <cmath>

namespace gaitswitch {
namespace {

constexpr double kStandingRewardWindow = 0.5;  // s

}  // namespace

double Consolidate(const TransitionOutcome& o, double min_effort) {
  if (o.eta == 0) return 0.0;
  return o.accuracy / std::max(o.effort, min_effort) * std::exp(-o.duration);
}

double TrackingReward(double vx, double target_speed, double sigma) {
  const double d = vx - target_speed;
  return std::exp(-d * d / (2.0 * sigma * sigma));
}

TransitionMeter::TransitionMeter(const GaitSpec& dest, const SimConfig& cfg,
                                 MeasurementOptions options)
    : dest_(&dest),
      cfg_(cfg),
      sigma_(options.reward_sigma),
      max_duration_(options.max_duration),
      window_(dest.standing ? kStandingRewardWindow : dest.nominal_cycle),
      tracker_(dest, cfg, options.criteria) {}

void TransitionMeter::Finish(int eta) {
  done_ = true;
  outcome_.eta = eta;
  outcome_.effort = effort_;
  if (!stabilized_) outcome_.duration = elapsed_;
  outcome_.accuracy =
      window_elapsed_ > 0.0 ? reward_integral_ / window_elapsed_ : 0.0;
}

bool TransitionMeter::Observe(const SimState& before, const ControlCommand&,
                              const StepResult& step) {
  if (done_) return true;
  const SimState& after = step.state;
  const double h = after.t - before.t;
  elapsed_ += h;

  if (!stabilized_) {
    if (before.mode == ContactMode::kStance) {
      // The actuator is the only non-conservative force, so its work over a
      // step is the change of mechanical energy. This counts the force
      // actually applied when the leg force saturates at zero.
      effort_ += std::abs(MechanicalEnergy(after, cfg_) - MechanicalEnergy(before, cfg_));
    }
    if (step.event.kind == EventKind::kFall) {
      Finish(0);
      return true;
    }
    if (tracker_.Observe(after, step.event, h)) {
      stabilized_ = true;
      outcome_.duration = elapsed_;
      if (window_ <= 0.0) Finish(1);
    } else if (elapsed_ >= max_duration_) {
      Finish(0);
    }
    return done_;
  }

  if (step.event.kind == EventKind::kFall) {
    Finish(0);
    return true;
  }
  reward_integral_ += h * TrackingReward(after.vx, dest_->target_speed, sigma_);
  window_elapsed_ += h;
  if (window_elapsed_ >= window_) Finish(1);
  return done_;
}

SimState StateOnCycle(const GaitSpec& gait, double phase, double height_noise,
                      double speed_noise, const SimConfig& cfg,
                      const Terrain& terrain, ControllerClock* clock) {
  ApexPoint apex = gait.nominal_apex;
  apex.z *= 1.0 + height_noise;
  apex.vx *= 1.0 + speed_noise;
  SimState s = ApexState(gait, apex, cfg);
  ControllerClock c;
  if (!gait.standing) {
    const Directive directive = DirectiveFor(gait);
    const double until = phase * gait.nominal_cycle;
    while (s.t < until) {
      const ControlCommand cmd = Control(gait, s, c, directive, cfg);
      const double t0 = s.t;
      const StepResult r =
          StepFor(s, cmd, cfg, terrain, std::min(cfg.dt, until - s.t));
      c = AdvanceClock(c, r.event, gait, r.state.t - t0);
      s = r.state;
      if (r.event.kind == EventKind::kFall) {
        s.fallen = true;
        break;
      }
    }
  }
  if (clock) *clock = c;
  return s;
}

TransitionOutcome RunSwitch(const SimState& state, const GaitSpec& dest,
                            double omega, const SimConfig& cfg,
                            const Terrain& terrain,
                            const MeasurementOptions& options) {
  TransitionMeter meter(dest, cfg, options);
  if (state.fallen) return meter.outcome();
  const Directive directive = DirectiveFor(dest);
  ControllerClock clock = ClockAtPhase(dest, omega);
  SimState s = state;
  while (true) {
    const ControlCommand cmd = Control(dest, s, clock, directive, cfg);
    const StepResult r = Step(s, cmd, cfg, terrain);
    clock = AdvanceClock(clock, r.event, dest, r.state.t - s.t);
    if (meter.Observe(s, cmd, r)) break;
    s = r.state;
  }
  return meter.outcome();
}

}  // namespace gaitswitch
