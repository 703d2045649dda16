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

#include "gaitswitch/gait.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "gaitswitch/error.hpp"

namespace gaitswitch {
namespace {

constexpr double kMaxOffsetRatio = 0.9;
constexpr double kMaxSpeedError = 0.8;  // m/s, Raibert speed-error saturation
constexpr double kMaxCycleTime = 10.0;  // s
constexpr int kMaxSecantIterations = 100;
constexpr double kCycleTolerance = 1e-3;
constexpr double kSecantTarget = 1e-10;
constexpr double kStandingWindowPerApex = 0.5;  // s

double TargetEnergy(const GaitSpec& gait, double target_speed,
                    const SimConfig& cfg) {
  return cfg.mass * cfg.gravity * gait.target_apex_height +
         0.5 * cfg.mass * target_speed * target_speed;
}

double SmoothStep(double s) {
  s = std::clamp(s, 0.0, 1.0);
  return s * s * (3.0 - 2.0 * s);
}

bool InSwing(const GaitSpec& gait, const ControllerClock& clock) {
  return gait.has_cycle && gait.liftoff_phase < 1.0 &&
         clock.phase >= gait.liftoff_phase;
}

// Leg angle scheduled by the clock: after liftoff the tucked leg swings from
// the mirrored (trailing) angle to the Raibert angle, arriving at the apex.
double ScheduledLegAngle(const GaitSpec& gait, double raibert,
                         const ControllerClock& clock) {
  if (!InSwing(gait, clock)) return raibert;
  const double w = SmoothStep((clock.phase - gait.liftoff_phase) /
                              (1.0 - gait.liftoff_phase));
  return (2.0 * w - 1.0) * raibert;
}

using Vec2 = std::array<double, 2>;
using Mat2 = std::array<std::array<double, 2>, 2>;

double MaxNorm(const Vec2& v) { return std::max(std::abs(v[0]), std::abs(v[1])); }

Vec2 Solve(const Mat2& a, const Vec2& b) {
  const double det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
  if (std::abs(det) < 1e-14) return {b[0], b[1]};
  return {(a[1][1] * b[0] - a[0][1] * b[1]) / det,
          (a[0][0] * b[1] - a[1][0] * b[0]) / det};
}

[[noreturn]] void ThrowNoCycle(const GaitSpec& gait, const std::string& why) {
  throw Error(ErrorCode::kNoCycle, "gait " + gait.id.name + ": " + why);
}

}  // namespace

Directive DirectiveFor(const GaitSpec& gait) {
  return Directive{gait.target_speed};
}

ControllerClock ClockAtPhase(const GaitSpec& gait, double phase) {
  if (gait.standing || gait.nominal_cycle <= 0.0) return {};
  phase -= std::floor(phase);
  if (phase >= 1.0) phase = 0.0;
  return {phase, phase * gait.nominal_cycle};
}

double RaibertAngle(const GaitSpec& gait, double vx, double target_speed,
                    const SimConfig& cfg) {
  const double error =
      std::clamp(vx - target_speed, -kMaxSpeedError, kMaxSpeedError);
  const double offset =
      vx * cfg.StanceTimeEstimate() / 2.0 + gait.raibert_gain * error;
  return std::asin(
      std::clamp(offset / cfg.rest_length, -kMaxOffsetRatio, kMaxOffsetRatio));
}

ControlCommand Control(const GaitSpec& gait, const SimState& state,
                       const ControllerClock& clock, const Directive& directive,
                       const SimConfig& cfg) {
  ControlCommand cmd;
  if (state.mode == ContactMode::kFlight) {
    const double target = gait.standing ? 0.0 : directive.target_speed;
    const double raibert = RaibertAngle(gait, state.vx, target, cfg);
    if (gait.standing) {
      cmd.touchdown_angle = raibert;
    } else {
      cmd.touchdown_angle = ScheduledLegAngle(gait, raibert, clock);
      cmd.retract = InSwing(gait, clock);
    }
    return cmd;
  }

  const double leg_rate = state.LegLengthRate();
  if (gait.standing) {
    const double damping =
        2.0 * gait.thrust_gain * std::sqrt(cfg.stiffness * cfg.mass);
    cmd.thrust = -damping * leg_rate;
  } else if (leg_rate >= 0.0) {
    const double deficit =
        TargetEnergy(gait, directive.target_speed, cfg) - MechanicalEnergy(state, cfg);
    cmd.thrust = gait.thrust_gain * deficit / cfg.rest_length;
  }
  cmd.thrust = std::clamp(cmd.thrust, -cfg.thrust_limit, cfg.thrust_limit);
  return cmd;
}

ControllerClock AdvanceClock(const ControllerClock& clock,
                             const StepEvent& event, const GaitSpec& gait,
                             double dt) {
  ControllerClock out;
  out.time_since_apex =
      event.kind == EventKind::kApex ? 0.0 : clock.time_since_apex + dt;
  if (gait.standing || gait.nominal_cycle <= 0.0) {
    out.phase = 0.0;
    return out;
  }
  const double cycles = out.time_since_apex / gait.nominal_cycle;
  out.phase = cycles - std::floor(cycles);
  if (out.phase >= 1.0 || out.phase < 0.0) out.phase = 0.0;
  return out;
}

double StandingHeight(const SimConfig& cfg) {
  return cfg.rest_length - cfg.mass * cfg.gravity / cfg.stiffness;
}

SimState ApexState(const GaitSpec& gait, const ApexPoint& apex,
                   const SimConfig& cfg) {
  SimState s;
  s.z = apex.z;
  s.vx = apex.vx;
  if (gait.standing) {
    s.mode = ContactMode::kStance;
    s.foot_x = 0.0;
    s.foot_z = 0.0;
    s.vx = 0.0;
    return s;
  }
  s.mode = ContactMode::kFlight;
  s.leg_angle = RaibertAngle(gait, apex.vx, gait.target_speed, cfg);
  s.last_apex = ApexRecord{0.0, apex.z, apex.vx};
  return s;
}

std::optional<ApexMapResult> ApexReturnMap(const GaitSpec& gait,
                                           const ApexPoint& p,
                                           const SimConfig& cfg) {
  if (gait.standing) return std::nullopt;
  const Terrain ground;
  const Directive directive = DirectiveFor(gait);
  SimState s = ApexState(gait, p, cfg);
  ControllerClock clock;
  ApexMapResult out;
  bool touched = false;
  bool lifted = false;
  while (s.t < kMaxCycleTime) {
    const ControlCommand cmd = Control(gait, s, clock, directive, cfg);
    const double t_before = s.t;
    StepResult r = Step(s, cmd, cfg, ground);
    clock = AdvanceClock(clock, r.event, gait, r.state.t - t_before);
    s = r.state;
    switch (r.event.kind) {
      case EventKind::kFall:
        return std::nullopt;
      case EventKind::kTouchdown:
        touched = true;
        out.touchdown_time = s.t;
        break;
      case EventKind::kLiftoff:
        lifted = touched;
        out.liftoff_time = s.t;
        break;
      case EventKind::kApex:
        if (lifted) {
          out.next = {s.z, s.vx};
          out.period = s.t;
          return out;
        }
        break;
      case EventKind::kNone:
        break;
    }
  }
  return std::nullopt;
}

LimitCycle FindLimitCycle(const GaitSpec& gait_in, const SimConfig& cfg) {
  if (gait_in.standing) {
    LimitCycle cycle;
    cycle.apex = {StandingHeight(cfg), 0.0};
    return cycle;
  }
  // The leg swing finishes before touchdown on the cycle, so the search runs
  // without the clock schedule.
  GaitSpec gait = gait_in;
  gait.has_cycle = false;

  auto residual = [&](const Vec2& p) -> std::optional<Vec2> {
    auto r = ApexReturnMap(gait, {p[0], p[1]}, cfg);
    if (!r) return std::nullopt;
    return Vec2{r->next.z - p[0], r->next.vx - p[1]};
  };

  Vec2 p{gait.target_apex_height, gait.target_speed};
  auto f = residual(p);
  if (!f) ThrowNoCycle(gait, "falls from the initial guess");

  Mat2 jac{};
  constexpr double kProbe = 1e-5;
  for (int j = 0; j < 2; ++j) {
    Vec2 q = p;
    q[j] += kProbe;
    auto fq = residual(q);
    if (!fq) ThrowNoCycle(gait, "falls near the initial guess");
    for (int i = 0; i < 2; ++i) jac[i][j] = ((*fq)[i] - (*f)[i]) / kProbe;
  }

  int iter = 0;
  for (; iter < kMaxSecantIterations && MaxNorm(*f) > kSecantTarget; ++iter) {
    const Vec2 full = Solve(jac, {-(*f)[0], -(*f)[1]});
    // Damping: halve the secant step until the residual decreases.
    double lambda = 1.0;
    Vec2 p_next{};
    std::optional<Vec2> f_next;
    for (int halving = 0; halving < 12; ++halving, lambda *= 0.5) {
      p_next = {p[0] + lambda * full[0], p[1] + lambda * full[1]};
      f_next = residual(p_next);
      if (f_next && MaxNorm(*f_next) < MaxNorm(*f)) break;
    }
    if (!f_next) ThrowNoCycle(gait, "secant step leaves the basin");
    const Vec2 dp{p_next[0] - p[0], p_next[1] - p[1]};
    const Vec2 df{(*f_next)[0] - (*f)[0], (*f_next)[1] - (*f)[1]};
    const double dp2 = dp[0] * dp[0] + dp[1] * dp[1];
    if (dp2 == 0.0) break;
    // Broyden rank-one update.
    for (int i = 0; i < 2; ++i) {
      const double mismatch = df[i] - (jac[i][0] * dp[0] + jac[i][1] * dp[1]);
      for (int j = 0; j < 2; ++j) jac[i][j] += mismatch * dp[j] / dp2;
    }
    p = p_next;
    f = f_next;
  }

  if (MaxNorm(*f) >= kCycleTolerance) {
    std::ostringstream msg;
    msg << "no fixed point after " << iter << " iterations (residual "
        << MaxNorm(*f) << ")";
    ThrowNoCycle(gait, msg.str());
  }
  const auto final_map = ApexReturnMap(gait, {p[0], p[1]}, cfg);
  LimitCycle cycle;
  cycle.apex = {p[0], p[1]};
  cycle.period = final_map->period;
  cycle.touchdown_phase = final_map->touchdown_time / final_map->period;
  cycle.liftoff_phase = final_map->liftoff_time / final_map->period;
  cycle.residual = MaxNorm(*f);
  cycle.iterations = iter;
  return cycle;
}

GaitSpec MeasureGait(GaitSpec gait, const SimConfig& cfg) {
  const LimitCycle cycle = FindLimitCycle(gait, cfg);
  gait.has_cycle = true;
  gait.nominal_apex = cycle.apex;
  gait.nominal_cycle = cycle.period;
  gait.touchdown_phase = cycle.touchdown_phase;
  gait.liftoff_phase = cycle.liftoff_phase;
  return gait;
}

bool IsStable(std::span<const ApexPoint> apex_history, const GaitSpec& gait,
              double eps_height, double eps_speed, int apex_count) {
  if (apex_count <= 0 || apex_history.size() < static_cast<std::size_t>(apex_count)) {
    return false;
  }
  const auto recent = apex_history.last(static_cast<std::size_t>(apex_count));
  return std::all_of(recent.begin(), recent.end(), [&](const ApexPoint& a) {
    return std::abs(a.z - gait.nominal_apex.z) < eps_height &&
           std::abs(a.vx - gait.nominal_apex.vx) < eps_speed;
  });
}

StabilityTracker::StabilityTracker(const GaitSpec& gait, const SimConfig& cfg,
                                   StabilityCriteria criteria)
    : gait_(&gait), criteria_(criteria), standing_height_(StandingHeight(cfg)) {}

bool StabilityTracker::Observe(const SimState& state, const StepEvent& event,
                               double dt) {
  if (stable_) return true;
  if (gait_->standing) {
    const bool still = state.mode == ContactMode::kStance &&
                       std::abs(state.vx) < criteria_.eps_speed &&
                       std::abs(state.z - standing_height_) < criteria_.eps_height;
    settled_time_ = still ? settled_time_ + dt : 0.0;
    stable_ = settled_time_ >= criteria_.apex_count * kStandingWindowPerApex;
    return stable_;
  }
  if (event.kind == EventKind::kApex) {
    history_.push_back({state.z, state.vx});
    stable_ = IsStable(history_, *gait_, criteria_.eps_height,
                       criteria_.eps_speed, criteria_.apex_count);
  }
  return stable_;
}

std::vector<GaitSpec> DefaultGaitLibrary() {
  auto gait = [](const char* name, double speed, double height, double kv,
                 double ke) {
    GaitSpec g;
    g.id = MotionId{name};
    g.target_speed = speed;
    g.target_apex_height = height;
    g.raibert_gain = kv;
    g.thrust_gain = ke;
    return g;
  };
  std::vector<GaitSpec> gaits = {
      gait("Trot", 1.5, 1.05, 0.30, 8.0),
      gait("Pace", 1.0, 1.04, 0.30, 8.0),
      gait("Canter", 3.0, 1.10, 0.12, 8.0),
      gait("Jump", 1.5, 1.60, 0.08, 8.0),
  };
  GaitSpec stand = gait("Stand", 0.0, 0.96076, 0.10, 0.7);
  stand.standing = true;
  gaits.push_back(stand);
  return gaits;
}

const GaitSpec* FindGait(std::span<const GaitSpec> gaits, const MotionId& id) {
  for (const GaitSpec& g : gaits) {
    if (g.id == id) return &g;
  }
  return nullptr;
}

const GaitSpec& GetGait(std::span<const GaitSpec> gaits, const MotionId& id) {
  const GaitSpec* g = FindGait(gaits, id);
  if (!g) throw Error(ErrorCode::kInvalidArgument, "unknown motion " + id.name);
  return *g;
}

}  // namespace gaitswitch
