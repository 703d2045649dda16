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

// Live steering: one simulated character driven by the unified controller,
// commanded through JSON text messages. The session is transport-agnostic;
// SteeringServer exposes it over WebSocket and HTTP.

#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <json.hpp>

#include "gaitswitch/dynamics.hpp"
#include "gaitswitch/error.hpp"
#include "gaitswitch/tensor.hpp"
#include "gaitswitch/unified.hpp"

namespace gaitswitch {

inline constexpr int kProtocolVersion = 1;

struct SetMotion { MotionId motion; };
struct Perturb { double dvx = 0.0; double dvz = 0.0; };
struct Pause {};
struct Resume {};
struct ResetCommand {};
struct SetTimescale { double scale = 1.0; };
struct QualityGridRequest { MotionId m; MotionId n; };

using CommandBody = std::variant<SetMotion, Perturb, Pause, Resume,
                                 ResetCommand, SetTimescale, QualityGridRequest>;

struct Command {
  CommandBody body;
  std::optional<nlohmann::json> id;  // echoed in the reply
};

std::string_view CommandName(const CommandBody& body);

// Parses one client message. Throws Error(kBadPayload) for malformed JSON,
// missing or mistyped fields, and Error(kUnknownCommand) for unknown command
// types or motion names outside the vocabulary.
Command ParseCommand(const std::string& text,
                     const std::vector<MotionId>& vocabulary);

std::string ErrorReply(const Error& error,
                       const std::optional<nlohmann::json>& id);

// B×B Q values of one slice, row-major by φ bin, as sent to clients.
nlohmann::json QualityGridJson(const TransitionTensor& tensor,
                               const MotionId& m, const MotionId& n);

// First 16 hex digits of the SHA-256 of the terrain's JSON form.
std::string TerrainDigest(const Terrain& terrain);

struct SessionOptions {
  double frame_rate = 60.0;  // Hz
  double timescale = 1.0;    // simulated seconds per wall-clock second
  UnifiedOptions controller;
};

// Reply addressed to one client, or to all when client is 0.
struct Outgoing {
  std::uint64_t client = 0;
  std::string text;
};

class SteeringSession {
 public:
  // The tensor must outlive the session; its config hash is verified.
  SteeringSession(const TransitionTensor& tensor, Terrain terrain,
                  const MotionId& initial, SessionOptions options = {});

  std::string Hello() const;

  // Thread-safe. Malformed messages are answered at once through the return
  // value; well-formed commands are queued and answered when applied.
  std::optional<std::string> Submit(std::uint64_t client,
                                    const std::string& text);

  // Runs one frame: drains the command queue, advances the simulation by
  // timescale/frame_rate seconds unless paused, and appends the replies
  // followed by the frame message to out. Only the loop thread may call it.
  void Frame(std::vector<Outgoing>& out);

  // Drains the queue and takes exactly one simulation step (for tests).
  void Step(std::vector<Outgoing>& out);

  const SimState& sim() const { return sim_; }
  const UnifiedController& controller() const { return controller_; }
  bool paused() const { return paused_; }
  double timescale() const { return timescale_; }
  double frame_period() const { return 1.0 / options_.frame_rate; }
  std::uint64_t frames() const { return frames_; }
  const TransitionTensor& tensor() const { return *tensor_; }

  nlohmann::json FrameJson() const;

 private:
  void Drain(std::vector<Outgoing>& out);
  void Apply(std::uint64_t client, const Command& cmd,
             std::vector<Outgoing>& out);
  void StepOnce();
  void ResetCharacter();

  const TransitionTensor* tensor_;
  Terrain terrain_;
  std::string terrain_digest_;
  SessionOptions options_;
  UnifiedController controller_;
  SimState sim_;
  bool paused_ = false;
  double timescale_;
  double carry_ = 0.0;  // simulated time owed to the next frame
  std::uint64_t frames_ = 0;

  std::mutex queue_mutex_;
  std::deque<std::pair<std::uint64_t, Command>> queue_;
};

struct ServerOptions {
  int port = 8765;  // 0 picks a free port
  std::string bind_address = "127.0.0.1";
};

// WebSocket at /ws (handshake message, frames, commands) and
// GET /quality_grid?m=..&n=.. on the same port.
class SteeringServer {
 public:
  // Binds immediately; throws Error(kPortInUse) if the port is taken.
  SteeringServer(SteeringSession& session, ServerOptions options = {});
  ~SteeringServer();
  SteeringServer(const SteeringServer&) = delete;
  SteeringServer& operator=(const SteeringServer&) = delete;

  int port() const { return port_; }

  // Starts the accept and simulation threads.
  void Start();
  // Closes every connection and joins all threads. Idempotent.
  void Stop();
  bool running() const { return running_; }
  std::size_t clients() const;

 private:
  struct Connection;

  void AcceptLoop();
  void SimulationLoop();
  void Serve(std::shared_ptr<Connection> conn);
  void Broadcast(const std::vector<Outgoing>& out);

  SteeringSession* session_;
  ServerOptions options_;
  int listen_fd_ = -1;
  int port_ = 0;
  std::atomic<bool> running_{false};
  std::atomic<std::uint64_t> next_client_{1};
  std::thread accept_thread_;
  std::thread sim_thread_;
  mutable std::mutex conns_mutex_;
  std::vector<std::shared_ptr<Connection>> conns_;
};

}  // namespace gaitswitch
