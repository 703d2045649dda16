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

#include "gaitswitch/dynamics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

#include "gaitswitch/error.hpp"

namespace gaitswitch {
namespace {

constexpr double kUnbounded = 1e9;
constexpr double kMaxLegAngle = std::numbers::pi / 2 - 1e-6;

// Continuous part of the state: x, z, vx, vz.
using Vec4 = std::array<double, 4>;

struct Flow {
  ContactMode mode;
  double foot_x;
  double foot_z;
  double thrust;
};

Vec4 Derivative(const Vec4& s, const Flow& flow, const SimConfig& cfg) {
  if (flow.mode == ContactMode::kFlight) {
    return {s[2], s[3], 0.0, -cfg.gravity};
  }
  const double dx = s[0] - flow.foot_x;
  const double dz = s[1] - flow.foot_z;
  const double len = std::hypot(dx, dz);
  // The foot cannot pull on the ground.
  const double force =
      std::max(0.0, cfg.stiffness * (cfg.rest_length - len) + flow.thrust);
  const double a = force / (cfg.mass * len);
  return {s[2], s[3], a * dx, a * dz - cfg.gravity};
}

Vec4 Rk4(const Vec4& s, const Flow& flow, const SimConfig& cfg, double h) {
  auto axpy = [](const Vec4& a, const Vec4& b, double k) {
    return Vec4{a[0] + k * b[0], a[1] + k * b[1], a[2] + k * b[2],
                a[3] + k * b[3]};
  };
  const Vec4 k1 = Derivative(s, flow, cfg);
  const Vec4 k2 = Derivative(axpy(s, k1, h / 2), flow, cfg);
  const Vec4 k3 = Derivative(axpy(s, k2, h / 2), flow, cfg);
  const Vec4 k4 = Derivative(axpy(s, k3, h), flow, cfg);
  Vec4 out;
  for (int i = 0; i < 4; ++i) {
    out[i] = s[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  return out;
}

SimState Advance(const SimState& s0, const Flow& flow, const SimConfig& cfg,
                 double h) {
  SimState s = s0;
  if (h <= 0.0) return s;
  const Vec4 v = Rk4({s0.x, s0.z, s0.vx, s0.vz}, flow, cfg, h);
  s.x = v[0];
  s.z = v[1];
  s.vx = v[2];
  s.vz = v[3];
  s.t = s0.t + h;
  return s;
}

double FootX(const SimState& s, double l0) {
  return s.x + l0 * std::sin(s.leg_angle);
}
double FootZ(const SimState& s, double l0) {
  return s.z - l0 * std::cos(s.leg_angle);
}

bool FallCondition(const SimState& s, const SimConfig& cfg) {
  if (s.z < cfg.fall_height) return true;
  if (s.vx < -cfg.max_backward_speed) return true;
  if (s.mode == ContactMode::kStance &&
      s.LegLength(cfg.rest_length) < cfg.min_leg_fraction * cfg.rest_length) {
    return true;
  }
  return false;
}

// Leg compression rate if the foot were planted at (foot_x, foot_z).
double ApproachRate(const SimState& s, double foot_x, double foot_z) {
  return (s.x - foot_x) * s.vx + (s.z - foot_z) * s.vz;
}

// The foot strikes when it reaches the surface while the mass descends and
// moves toward the foot; a foot brushing the ground while the mass moves
// away does not load the leg.
bool TouchdownCondition(const SimState& s, const SimConfig& cfg,
                        const Terrain& terrain) {
  if (s.vz >= 0.0) return false;
  const double l0 = cfg.rest_length;
  const double fx = FootX(s, l0);
  const double surface = terrain.StrikeHeightAt(fx);
  return FootZ(s, l0) <= surface && ApproachRate(s, fx, surface) < 0.0;
}

enum class Candidate { kFall, kTouchdown, kLiftoff, kApex };

bool Holds(Candidate c, const SimState& s, const SimConfig& cfg,
           const Terrain& terrain) {
  switch (c) {
    case Candidate::kFall:
      return FallCondition(s, cfg);
    case Candidate::kTouchdown:
      return TouchdownCondition(s, cfg, terrain);
    case Candidate::kLiftoff:
      return s.LegLength(cfg.rest_length) >= cfg.rest_length;
    case Candidate::kApex:
      return s.vz <= 0.0;
  }
  return false;
}

void CheckFinite(const SimState& s) {
  if (!std::isfinite(s.x) || !std::isfinite(s.z) || !std::isfinite(s.vx) ||
      !std::isfinite(s.vz) || !std::isfinite(s.t)) {
    std::ostringstream msg;
    msg << "integration diverged at t=" << s.t;
    throw Error(ErrorCode::kNonFinite, msg.str());
  }
}

// Touchdown at the start of a step: the leg was swung into the ground while
// descending. The foot strikes at full length where the leg meets the
// surface, so no spring energy is injected.
std::optional<StepResult> SwingStrike(const SimState& s, const SimConfig& cfg,
                                      const Terrain& terrain) {
  if (!TouchdownCondition(s, cfg, terrain)) return std::nullopt;
  const double l0 = cfg.rest_length;
  const double surface = terrain.StrikeHeightAt(FootX(s, l0));
  const double cos_strike = std::clamp((s.z - surface) / l0, 0.0, 1.0);
  SimState out = s;
  out.leg_angle = std::copysign(std::acos(cos_strike), s.leg_angle);
  if (ApproachRate(out, FootX(out, l0), surface) >= 0.0) return std::nullopt;
  return StepResult{out, {EventKind::kTouchdown, s.t}};
}

StepResult ApplyEvent(SimState s, Candidate c, const SimConfig& cfg,
                      const Terrain& terrain) {
  const double l0 = cfg.rest_length;
  switch (c) {
    case Candidate::kFall:
      s.fallen = true;
      return {s, {EventKind::kFall, s.t}};
    case Candidate::kApex:
      s.last_apex = ApexRecord{s.t, s.z, s.vx};
      return {s, {EventKind::kApex, s.t}};
    case Candidate::kTouchdown: {
      const double fx = FootX(s, l0);
      const auto ground = terrain.HeightAt(fx);
      if (!ground) {
        s.fallen = true;
        return {s, {EventKind::kFall, s.t}};
      }
      s.mode = ContactMode::kStance;
      s.foot_x = fx;
      s.foot_z = *ground;
      return {s, {EventKind::kTouchdown, s.t}};
    }
    case Candidate::kLiftoff:
      s.mode = ContactMode::kFlight;
      s.leg_angle = std::atan2(s.foot_x - s.x, s.z - s.foot_z);
      return {s, {EventKind::kLiftoff, s.t}};
  }
  return {s, {EventKind::kNone, s.t}};
}

}  // namespace

void SimConfig::Validate() const {
  auto fail = [](const char* what) {
    throw Error(ErrorCode::kInvalidArgument, what);
  };
  if (!(mass > 0) || !(gravity > 0) || !(rest_length > 0) ||
      !(stiffness > 0) || !(dt > 0) || !(event_tol > 0) ||
      !(fall_height > 0) || !(max_backward_speed > 0) || !(thrust_limit > 0)) {
    fail("physical constants must be strictly positive");
  }
  if (!(min_leg_fraction > 0 && min_leg_fraction < 1)) {
    fail("min_leg_fraction must lie in (0, 1)");
  }
  if (!(event_tol < dt)) fail("event_tol must be smaller than dt");
}

double SimConfig::StanceTimeEstimate() const {
  return std::numbers::pi * std::sqrt(mass / stiffness);
}

std::string_view ContactModeName(ContactMode mode) {
  return mode == ContactMode::kFlight ? "flight" : "stance";
}

std::string_view EventKindName(EventKind kind) {
  switch (kind) {
    case EventKind::kNone:
      return "none";
    case EventKind::kApex:
      return "apex";
    case EventKind::kTouchdown:
      return "touchdown";
    case EventKind::kLiftoff:
      return "liftoff";
    case EventKind::kFall:
      return "fall";
  }
  return "unknown";
}

double SimState::LegLength(double rest_length) const {
  if (mode == ContactMode::kFlight) return rest_length;
  return std::hypot(x - foot_x, z - foot_z);
}

double SimState::LegLengthRate() const {
  if (mode == ContactMode::kFlight) return 0.0;
  const double dx = x - foot_x;
  const double dz = z - foot_z;
  return (dx * vx + dz * vz) / std::hypot(dx, dz);
}

Terrain::Terrain() : segments_{{-kUnbounded, kUnbounded, 0.0}} {}

Terrain::Terrain(std::vector<TerrainSegment> segments)
    : segments_(std::move(segments)) {
  if (segments_.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "terrain needs a segment");
  }
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    if (!(segments_[i].x_start < segments_[i].x_end)) {
      throw Error(ErrorCode::kInvalidArgument, "empty terrain segment");
    }
    if (i > 0 && segments_[i].x_start < segments_[i - 1].x_end) {
      throw Error(ErrorCode::kInvalidArgument,
                  "terrain segments must be sorted and non-overlapping");
    }
  }
}

Terrain Terrain::WithGap(double gap_start, double gap_width) {
  if (gap_width <= 0.0) return Terrain();
  return Terrain({{-kUnbounded, gap_start, 0.0},
                  {gap_start + gap_width, kUnbounded, 0.0}});
}

std::optional<double> Terrain::HeightAt(double x) const {
  auto it = std::upper_bound(
      segments_.begin(), segments_.end(), x,
      [](double v, const TerrainSegment& seg) { return v < seg.x_start; });
  if (it == segments_.begin()) return std::nullopt;
  --it;
  if (x <= it->x_end) return it->height;
  return std::nullopt;
}

double Terrain::StrikeHeightAt(double x) const {
  if (auto h = HeightAt(x)) return *h;
  auto next = std::upper_bound(
      segments_.begin(), segments_.end(), x,
      [](double v, const TerrainSegment& seg) { return v < seg.x_start; });
  if (next == segments_.begin()) return next->height;
  if (next == segments_.end()) return segments_.back().height;
  return std::min(std::prev(next)->height, next->height);
}

StepResult Step(const SimState& state, const ControlCommand& cmd,
                const SimConfig& cfg, const Terrain& terrain) {
  return StepFor(state, cmd, cfg, terrain, cfg.dt);
}

StepResult StepFor(const SimState& state, const ControlCommand& cmd,
                   const SimConfig& cfg, const Terrain& terrain, double h) {
  if (state.fallen) {
    throw Error(ErrorCode::kInvalidArgument, "cannot step a fallen state");
  }
  if (!(h > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "step length must be positive");
  }

  SimState s0 = state;
  if (FallCondition(s0, cfg)) return ApplyEvent(s0, Candidate::kFall, cfg, terrain);
  if (s0.mode == ContactMode::kFlight) {
    s0.leg_angle = std::clamp(cmd.touchdown_angle, -kMaxLegAngle, kMaxLegAngle);
    if (!cmd.retract) {
      if (auto strike = SwingStrike(s0, cfg, terrain)) {
        return ApplyEvent(strike->state, Candidate::kTouchdown, cfg, terrain);
      }
    }
  } else if (s0.LegLength(cfg.rest_length) >= cfg.rest_length &&
             s0.LegLengthRate() >= 0.0) {
    return ApplyEvent(s0, Candidate::kLiftoff, cfg, terrain);
  }

  const Flow flow{s0.mode, s0.foot_x, s0.foot_z,
                  std::clamp(cmd.thrust, -cfg.thrust_limit, cfg.thrust_limit)};
  const SimState s1 = Advance(s0, flow, cfg, h);
  CheckFinite(s1);

  std::vector<Candidate> candidates;
  if (s0.mode == ContactMode::kFlight) {
    candidates = {Candidate::kFall, Candidate::kApex};
    if (!cmd.retract) candidates.insert(candidates.begin() + 1, Candidate::kTouchdown);
  } else {
    candidates = {Candidate::kFall, Candidate::kLiftoff};
  }

  double best_tau = h;
  std::optional<Candidate> best;
  for (Candidate c : candidates) {
    if (c == Candidate::kApex && s0.vz <= 0.0) continue;
    if (Holds(c, s0, cfg, terrain) || !Holds(c, s1, cfg, terrain)) continue;
    double lo = 0.0;
    double hi = h;
    while (hi - lo > cfg.event_tol) {
      const double mid = 0.5 * (lo + hi);
      if (Holds(c, Advance(s0, flow, cfg, mid), cfg, terrain)) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    // Candidates are ordered by priority, so only a strictly earlier event
    // displaces an already found one.
    if (!best || hi < best_tau) {
      best = c;
      best_tau = hi;
    }
  }

  if (!best) return {s1, {EventKind::kNone, s1.t}};
  const SimState at_event = Advance(s0, flow, cfg, best_tau);
  CheckFinite(at_event);
  return ApplyEvent(at_event, *best, cfg, terrain);
}

double MechanicalEnergy(const SimState& state, const SimConfig& cfg) {
  double energy = 0.5 * cfg.mass * (state.vx * state.vx + state.vz * state.vz) +
                  cfg.mass * cfg.gravity * state.z;
  if (state.mode == ContactMode::kStance) {
    const double compression = cfg.rest_length - state.LegLength(cfg.rest_length);
    energy += 0.5 * cfg.stiffness * compression * compression;
  }
  return energy;
}

}  // namespace gaitswitch
