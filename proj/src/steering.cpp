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

#include "gaitswitch/steering.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include <openssl/evp.h>

#include "gaitswitch/config.hpp"
#include "gaitswitch/error.hpp"
#include "gaitswitch/gait.hpp"

namespace gaitswitch {
namespace {

using nlohmann::json;

constexpr double kMaxTimescale = 100.0;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

const json& Field(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) {
    throw Error(ErrorCode::kBadPayload, std::string("missing field '") + key + "'");
  }
  return *it;
}

double NumberField(const json& j, const char* key) {
  const json& v = Field(j, key);
  if (!v.is_number() || !std::isfinite(v.get<double>())) {
    throw Error(ErrorCode::kBadPayload, std::string("field '") + key + "' must be a finite number");
  }
  return v.get<double>();
}

MotionId MotionField(const json& j, const char* key,
                     const std::vector<MotionId>& vocabulary) {
  const json& v = Field(j, key);
  if (!v.is_string()) {
    throw Error(ErrorCode::kBadPayload, std::string("field '") + key + "' must be a string");
  }
  MotionId id{v.get<std::string>()};
  if (std::find(vocabulary.begin(), vocabulary.end(), id) == vocabulary.end()) {
    throw Error(ErrorCode::kUnknownCommand, "unknown motion '" + id.name + "'");
  }
  return id;
}

std::string Hex(const unsigned char* data, unsigned int len) {
  static const char kDigits[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kDigits[data[i] >> 4];
    out += kDigits[data[i] & 15];
  }
  return out;
}

json Reply(std::string_view type, std::string_view command,
           const std::optional<json>& id) {
  json j{{"type", type}, {"command", command}};
  if (id) j["id"] = *id;
  return j;
}

}  // namespace

std::string_view CommandName(const CommandBody& body) {
  return std::visit(
      Overloaded{
          [](const SetMotion&) { return std::string_view("set_motion"); },
          [](const Perturb&) { return std::string_view("perturb"); },
          [](const Pause&) { return std::string_view("pause"); },
          [](const Resume&) { return std::string_view("resume"); },
          [](const ResetCommand&) { return std::string_view("reset"); },
          [](const SetTimescale&) { return std::string_view("set_timescale"); },
          [](const QualityGridRequest&) { return std::string_view("quality_grid"); },
      },
      body);
}

Command ParseCommand(const std::string& text,
                     const std::vector<MotionId>& vocabulary) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kBadPayload, std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::kBadPayload, "message must be an object");
  const json& type = Field(j, "type");
  if (!type.is_string()) throw Error(ErrorCode::kBadPayload, "field 'type' must be a string");
  const std::string name = type.get<std::string>();

  Command cmd;
  if (const auto it = j.find("id"); it != j.end()) cmd.id = *it;
  if (name == "set_motion") {
    cmd.body = SetMotion{MotionField(j, "motion", vocabulary)};
  } else if (name == "perturb") {
    cmd.body = Perturb{NumberField(j, "dvx"), NumberField(j, "dvz")};
  } else if (name == "pause") {
    cmd.body = Pause{};
  } else if (name == "resume") {
    cmd.body = Resume{};
  } else if (name == "reset") {
    cmd.body = ResetCommand{};
  } else if (name == "set_timescale") {
    const double s = NumberField(j, "s");
    if (s <= 0.0 || s > kMaxTimescale) {
      throw Error(ErrorCode::kBadPayload, "timescale must be in (0, 100]");
    }
    cmd.body = SetTimescale{s};
  } else if (name == "quality_grid") {
    cmd.body = QualityGridRequest{MotionField(j, "m", vocabulary),
                                  MotionField(j, "n", vocabulary)};
  } else {
    throw Error(ErrorCode::kUnknownCommand, "unknown command '" + name + "'");
  }
  return cmd;
}

std::string ErrorReply(const Error& error, const std::optional<json>& id) {
  json j{{"type", "error"},
         {"code", ErrorCodeName(error.code())},
         {"message", error.what()}};
  if (id) j["id"] = *id;
  return j.dump();
}

json QualityGridJson(const TransitionTensor& tensor, const MotionId& m,
                     const MotionId& n) {
  const QualityGrid grid = tensor.Grid(m, n);
  json rows = json::array();
  for (int phi = 0; phi < grid.bins; ++phi) {
    json row = json::array();
    for (int omega = 0; omega < grid.bins; ++omega) {
      row.push_back(grid.quality[static_cast<std::size_t>(phi * grid.bins + omega)]);
    }
    rows.push_back(std::move(row));
  }
  return json{{"type", "quality_grid"}, {"m", m.name}, {"n", n.name},
              {"bins", grid.bins}, {"q", std::move(rows)}};
}

std::string TerrainDigest(const Terrain& terrain) {
  const std::string text = TerrainToJson(terrain).dump();
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(),
                 nullptr) != 1) {
    throw Error(ErrorCode::kInvalidArgument, "SHA-256 unavailable");
  }
  return Hex(digest, std::min(len, 8u));
}

SteeringSession::SteeringSession(const TransitionTensor& tensor,
                                 Terrain terrain, const MotionId& initial,
                                 SessionOptions options)
    : tensor_(&tensor),
      terrain_(std::move(terrain)),
      terrain_digest_(TerrainDigest(terrain_)),
      options_(options),
      controller_(tensor, initial, options.controller),
      timescale_(options.timescale) {
  tensor.VerifyConfigHash();
  if (!(options_.frame_rate > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "frame rate must be positive");
  }
  if (!(timescale_ > 0.0) || timescale_ > kMaxTimescale) {
    throw Error(ErrorCode::kInvalidArgument, "timescale must be in (0, 100]");
  }
  ResetCharacter();
}

std::string SteeringSession::Hello() const {
  json vocab = json::array();
  for (const MotionId& id : tensor_->vocabulary()) vocab.push_back(id.name);
  return json{{"type", "hello"},
              {"protocol", kProtocolVersion},
              {"vocabulary", std::move(vocab)},
              {"bins", tensor_->bins()},
              {"terrain", TerrainToJson(terrain_)},
              {"terrain_digest", terrain_digest_},
              {"config_hash", tensor_->config_hash()},
              {"frame_rate", options_.frame_rate},
              {"active", controller_.state().active.name}}
      .dump();
}

std::optional<std::string> SteeringSession::Submit(std::uint64_t client,
                                                   const std::string& text) {
  std::optional<json> id;
  try {
    const json j = json::parse(text, nullptr, false);
    if (j.is_object() && j.contains("id")) id = j["id"];
    Command cmd = ParseCommand(text, tensor_->vocabulary());
    std::lock_guard<std::mutex> lock(queue_mutex_);
    queue_.emplace_back(client, std::move(cmd));
    return std::nullopt;
  } catch (const Error& e) {
    return ErrorReply(e, id);
  }
}

void SteeringSession::Drain(std::vector<Outgoing>& out) {
  std::deque<std::pair<std::uint64_t, Command>> batch;
  {
    std::lock_guard<std::mutex> lock(queue_mutex_);
    batch.swap(queue_);
  }
  std::deque<std::pair<std::uint64_t, Command>> held;
  for (auto& [client, cmd] : batch) {
    // While paused only loop control and queries run; the rest waits for
    // resume, keeping its order.
    const bool control = std::holds_alternative<Pause>(cmd.body) ||
                         std::holds_alternative<Resume>(cmd.body) ||
                         std::holds_alternative<SetTimescale>(cmd.body) ||
                         std::holds_alternative<QualityGridRequest>(cmd.body);
    if (paused_ && !control) {
      held.emplace_back(client, std::move(cmd));
      continue;
    }
    const bool was_paused = paused_;
    Apply(client, cmd, out);
    if (was_paused && !paused_) {
      for (auto& [c, h] : held) Apply(c, h, out);
      held.clear();
    }
  }
  if (!held.empty()) {
    std::lock_guard<std::mutex> lock(queue_mutex_);
    queue_.insert(queue_.begin(), std::make_move_iterator(held.begin()),
                  std::make_move_iterator(held.end()));
  }
}

void SteeringSession::Apply(std::uint64_t client, const Command& cmd,
                            std::vector<Outgoing>& out) {
  json reply = Reply("ack", CommandName(cmd.body), cmd.id);
  try {
    std::visit(
        Overloaded{
            [&](const SetMotion& c) {
              controller_.RequestMotion(c.motion);
              reply["motion"] = c.motion.name;
            },
            [&](const Perturb& c) {
              sim_.vx += c.dvx;
              sim_.vz += c.dvz;
            },
            [&](const Pause&) { paused_ = true; },
            [&](const Resume&) { paused_ = false; },
            [&](const ResetCommand&) { ResetCharacter(); },
            [&](const SetTimescale& c) { timescale_ = c.scale; },
            [&](const QualityGridRequest& c) {
              reply = QualityGridJson(*tensor_, c.m, c.n);
              if (cmd.id) reply["id"] = *cmd.id;
            },
        },
        cmd.body);
  } catch (const Error& e) {
    out.push_back({client, ErrorReply(e, cmd.id)});
    return;
  }
  out.push_back({client, reply.dump()});
}

void SteeringSession::ResetCharacter() {
  const MotionId active = controller_.state().active;
  const GaitSpec& gait = GetGait(tensor_->gaits(), active);
  sim_ = ApexState(gait, gait.nominal_apex, tensor_->sim_config());
  controller_.Reset(active, ClockAtPhase(gait, 0.0));
  carry_ = 0.0;
}

void SteeringSession::StepOnce() {
  if (sim_.fallen) return;
  controller_.Tick(sim_, terrain_);
}

void SteeringSession::Step(std::vector<Outgoing>& out) {
  Drain(out);
  if (!paused_) StepOnce();
}

void SteeringSession::Frame(std::vector<Outgoing>& out) {
  Drain(out);
  if (!paused_) {
    const double dt = tensor_->sim_config().dt;
    carry_ += timescale_ / options_.frame_rate;
    while (carry_ >= dt * (1.0 - 1e-9)) {
      StepOnce();
      carry_ -= dt;
    }
  }
  ++frames_;
  out.push_back({0, FrameJson().dump()});
}

json SteeringSession::FrameJson() const {
  const UnifiedState& us = controller_.state();
  json pending = nullptr;
  if (us.pending) {
    const double bins = tensor_->bins();
    pending = json{{"target", us.pending->target.name},
                   {"phi_bin", us.pending->phi_bin},
                   {"omega_bin", us.pending->omega_bin},
                   {"phi", (us.pending->phi_bin + 0.5) / bins},
                   {"omega", us.pending->omega},
                   {"q", us.pending->score},
                   {"wait_time", us.pending->wait_time}};
  }
  return json{{"type", "frame"},
              {"seq", frames_},
              {"t", sim_.t},
              {"x", sim_.x},
              {"z", sim_.z},
              {"vx", sim_.vx},
              {"vz", sim_.vz},
              {"mode", ContactModeName(sim_.mode)},
              {"foot_x", sim_.mode == ContactMode::kStance ? json(sim_.foot_x) : json(nullptr)},
              {"active", us.active.name},
              {"phase", us.clock.phase},
              {"pending", std::move(pending)},
              {"transitioning", us.measuring.has_value()},
              {"alive", !sim_.fallen},
              {"paused", paused_},
              {"timescale", timescale_},
              {"terrain_digest", terrain_digest_}};
}

}  // namespace gaitswitch
