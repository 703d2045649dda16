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

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <sys/time.h>
#include <unistd.h>

#include <chrono>
#include <cstring>
#include <random>
#include <sstream>
#include <thread>

#include <gtest/gtest.h>

#include "test_support.hpp"

namespace gaitswitch {
namespace {

using nlohmann::json;
using testing::SetCell;

const MotionId kTrot{"Trot"};
const MotionId kCanter{"Canter"};
const MotionId kJump{"Jump"};

// Real gaits; every pair viable with a phase-dependent quality so that plans
// are unambiguous.
const TransitionTensor& Tensor() {
  static const TransitionTensor t = [] {
    std::vector<GaitSpec> gaits;
    for (const MotionId& id : {kTrot, kCanter, kJump}) {
      gaits.push_back(MeasureGait(GetGait(DefaultGaitLibrary(), id), SimConfig()));
    }
    PopulationParams p;
    p.bins = 4;
    TransitionTensor out(gaits, SimConfig(), p);
    for (const MotionPair& pair : AllPairs(out.vocabulary())) {
      auto& slice = out.AddPair(pair.first, pair.second);
      for (std::size_t i = 0; i < slice.size(); ++i) {
        SetCell(slice[i], {0.1 + 0.05 * static_cast<double>(i % 5)}, {true});
      }
    }
    return out;
  }();
  return t;
}

std::vector<json> Parse(const std::vector<Outgoing>& out) {
  std::vector<json> v;
  for (const Outgoing& o : out) v.push_back(json::parse(o.text));
  return v;
}

TEST(Protocol, ParsesEveryCommand) {
  const auto vocab = Tensor().vocabulary();
  EXPECT_EQ(CommandName(ParseCommand(R"({"type":"set_motion","motion":"Jump"})", vocab).body),
            "set_motion");
  const Command p = ParseCommand(R"({"type":"perturb","dvx":0.5,"dvz":-1,"id":7})", vocab);
  EXPECT_EQ(std::get<Perturb>(p.body).dvx, 0.5);
  EXPECT_EQ(std::get<Perturb>(p.body).dvz, -1.0);
  EXPECT_EQ(*p.id, 7);
  for (const char* t : {"pause", "resume", "reset"}) {
    EXPECT_EQ(CommandName(ParseCommand(json{{"type", t}}.dump(), vocab).body), t);
  }
  EXPECT_EQ(std::get<SetTimescale>(
                ParseCommand(R"({"type":"set_timescale","s":2.5})", vocab).body).scale,
            2.5);
  EXPECT_EQ(std::get<QualityGridRequest>(
                ParseCommand(R"({"type":"quality_grid","m":"Trot","n":"Jump"})", vocab).body).n,
            kJump);
}

TEST(Protocol, RejectsMalformedMessages) {
  const auto vocab = Tensor().vocabulary();
  auto code = [&](const std::string& text) {
    try {
      ParseCommand(text, vocab);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kInvalidArgument;
  };
  EXPECT_EQ(code("{"), ErrorCode::kBadPayload);
  EXPECT_EQ(code("[1]"), ErrorCode::kBadPayload);
  EXPECT_EQ(code(R"({"motion":"Trot"})"), ErrorCode::kBadPayload);
  EXPECT_EQ(code(R"({"type":"set_motion"})"), ErrorCode::kBadPayload);
  EXPECT_EQ(code(R"({"type":"set_motion","motion":3})"), ErrorCode::kBadPayload);
  EXPECT_EQ(code(R"({"type":"perturb","dvx":"fast","dvz":0})"), ErrorCode::kBadPayload);
  EXPECT_EQ(code(R"({"type":"set_timescale","s":0})"), ErrorCode::kBadPayload);
  EXPECT_EQ(code(R"({"type":"set_timescale","s":1000})"), ErrorCode::kBadPayload);
  EXPECT_EQ(code(R"({"type":"fly"})"), ErrorCode::kUnknownCommand);
  EXPECT_EQ(code(R"({"type":"set_motion","motion":"Gallop"})"), ErrorCode::kUnknownCommand);
}

TEST(Protocol, TerrainDigestIsStable) {
  EXPECT_EQ(TerrainDigest(Terrain()).size(), 16u);
  EXPECT_EQ(TerrainDigest(Terrain()), TerrainDigest(Terrain()));
  EXPECT_NE(TerrainDigest(Terrain()), TerrainDigest(Terrain::WithGap(5, 1)));
}

TEST(Session, HelloDescribesTheSession) {
  SteeringSession s(Tensor(), Terrain(), kTrot);
  const json h = json::parse(s.Hello());
  EXPECT_EQ(h["type"], "hello");
  EXPECT_EQ(h["protocol"], kProtocolVersion);
  EXPECT_EQ(h["vocabulary"], json({"Trot", "Canter", "Jump"}));
  EXPECT_EQ(h["bins"], 4);
  EXPECT_EQ(h["active"], "Trot");
  EXPECT_EQ(h["config_hash"], Tensor().config_hash());
  EXPECT_EQ(h["terrain_digest"], TerrainDigest(Terrain()));
}

TEST(Session, RejectsBadOptions) {
  SessionOptions o;
  o.timescale = 0.0;
  EXPECT_THROW(SteeringSession(Tensor(), Terrain(), kTrot, o), Error);
  o = SessionOptions();
  o.frame_rate = -1.0;
  EXPECT_THROW(SteeringSession(Tensor(), Terrain(), kTrot, o), Error);
  EXPECT_THROW(SteeringSession(Tensor(), Terrain(), {"Gallop"}), Error);
}

TEST(Session, UnknownMotionLeavesStateUnchanged) {
  SteeringSession s(Tensor(), Terrain(), kTrot);
  std::vector<Outgoing> out;
  s.Frame(out);
  const SimState before = s.sim();
  const auto reply = s.Submit(3, R"({"type":"set_motion","motion":"Gallop","id":"a"})");
  ASSERT_TRUE(reply.has_value());
  const json j = json::parse(*reply);
  EXPECT_EQ(j["type"], "error");
  EXPECT_EQ(j["code"], "UnknownCommand");
  EXPECT_EQ(j["id"], "a");
  EXPECT_EQ(s.sim(), before);
  EXPECT_FALSE(s.controller().state().pending.has_value());
  const json bad = json::parse(*s.Submit(3, "not json"));
  EXPECT_EQ(bad["code"], "BadPayload");
}

TEST(Session, AckPrecedesTheFrameAndTheSwitchHappens) {
  SteeringSession s(Tensor(), Terrain(), kTrot);
  EXPECT_FALSE(s.Submit(5, R"({"type":"set_motion","motion":"Jump","id":1})").has_value());
  std::vector<Outgoing> out;
  s.Frame(out);
  const auto msgs = Parse(out);
  ASSERT_EQ(msgs.size(), 2u);
  EXPECT_EQ(out[0].client, 5u);
  EXPECT_EQ(msgs[0]["type"], "ack");
  EXPECT_EQ(msgs[0]["command"], "set_motion");
  EXPECT_EQ(msgs[0]["id"], 1);
  EXPECT_EQ(msgs[0]["motion"], "Jump");
  EXPECT_EQ(out[1].client, 0u);
  EXPECT_EQ(msgs[1]["type"], "frame");
  ASSERT_TRUE(msgs[1]["pending"].is_object());
  EXPECT_EQ(msgs[1]["pending"]["target"], "Jump");
  bool switched = false;
  for (int i = 0; i < 200 && !switched; ++i) {
    out.clear();
    s.Frame(out);
    switched = Parse(out).back()["active"] == "Jump";
  }
  EXPECT_TRUE(switched);
}

TEST(Session, FrameAdvancesTimescaleOverFrameRate) {
  SessionOptions o;
  o.frame_rate = 50.0;
  o.timescale = 0.5;
  SteeringSession s(Tensor(), Terrain(), kCanter, o);
  const double t0 = s.sim().t;
  std::vector<Outgoing> out;
  for (int i = 0; i < 10; ++i) s.Frame(out);
  EXPECT_NEAR(s.sim().t - t0, 10 * 0.5 / 50.0, 1e-9);
  EXPECT_EQ(s.frames(), 10u);
  EXPECT_EQ(Parse(out).back()["seq"], 10);
}

TEST(Session, PausedCommandsApplyOnResume) {
  SteeringSession s(Tensor(), Terrain(), kTrot);
  std::vector<Outgoing> out;
  s.Submit(1, R"({"type":"pause"})");
  s.Frame(out);
  const double t = s.sim().t;
  ASSERT_TRUE(s.paused());
  out.clear();
  s.Submit(1, R"({"type":"set_motion","motion":"Canter"})");
  s.Submit(1, R"({"type":"set_timescale","s":2})");
  s.Frame(out);
  EXPECT_EQ(s.sim().t, t);
  EXPECT_FALSE(s.controller().state().pending.has_value());
  EXPECT_EQ(s.timescale(), 2.0);
  auto msgs = Parse(out);
  ASSERT_EQ(msgs.size(), 2u);
  EXPECT_EQ(msgs[0]["command"], "set_timescale");
  EXPECT_EQ(msgs[1]["paused"], true);

  out.clear();
  s.Submit(1, R"({"type":"resume"})");
  s.Frame(out);
  msgs = Parse(out);
  ASSERT_EQ(msgs.size(), 3u);
  EXPECT_EQ(msgs[0]["command"], "resume");
  EXPECT_EQ(msgs[1]["command"], "set_motion");
  EXPECT_GT(s.sim().t, t);
  EXPECT_TRUE(s.controller().state().pending.has_value() ||
              s.controller().state().active == kCanter);
}

TEST(Session, PerturbAddsToTheVelocity) {
  SteeringSession s(Tensor(), Terrain(), kTrot);
  std::vector<Outgoing> out;
  ASSERT_EQ(s.sim().mode, ContactMode::kFlight);
  s.Submit(1, R"({"type":"pause"})");
  s.Frame(out);
  const SimState before = s.sim();
  s.Submit(1, R"({"type":"resume"})");
  s.Submit(1, R"({"type":"perturb","dvx":0.3,"dvz":-0.2})");
  s.Submit(1, R"({"type":"pause"})");
  s.Frame(out);
  // Resume, perturb and pause all run before the frame's steps, which the
  // final pause then skips.
  EXPECT_EQ(s.sim().vx, before.vx + 0.3);
  EXPECT_EQ(s.sim().vz, before.vz - 0.2);
}

TEST(Session, ResetRestoresTheLimitCycle) {
  SteeringSession s(Tensor(), Terrain(), kCanter);
  const SimState start = s.sim();
  std::vector<Outgoing> out;
  s.Submit(1, R"({"type":"perturb","dvx":2.0,"dvz":3.0})");
  for (int i = 0; i < 30; ++i) s.Frame(out);
  EXPECT_NE(s.sim().x, start.x);
  s.Submit(1, R"({"type":"reset"})");
  s.Submit(1, R"({"type":"pause"})");
  s.Frame(out);
  EXPECT_EQ(s.sim(), start);
  EXPECT_EQ(s.controller().state().clock.phase, 0.0);
}

TEST(Session, FallenCharacterStaysDownUntilReset) {
  SteeringSession s(Tensor(), Terrain(), kTrot);
  std::vector<Outgoing> out;
  s.Submit(1, R"({"type":"perturb","dvx":-30,"dvz":-20})");
  for (int i = 0; i < 60 && !s.sim().fallen; ++i) s.Frame(out);
  ASSERT_TRUE(s.sim().fallen);
  const double t = s.sim().t;
  out.clear();
  s.Frame(out);
  EXPECT_EQ(s.sim().t, t);
  EXPECT_EQ(Parse(out).back()["alive"], false);
  s.Submit(1, R"({"type":"reset"})");
  s.Frame(out);
  EXPECT_FALSE(s.sim().fallen);
}

TEST(Session, QualityGridMatchesTheTensorExport) {
  SteeringSession s(Tensor(), Terrain(), kTrot);
  s.Submit(2, R"({"type":"quality_grid","m":"Canter","n":"Jump","id":"g"})");
  std::vector<Outgoing> out;
  s.Frame(out);
  const json g = json::parse(out[0].text);
  EXPECT_EQ(g["type"], "quality_grid");
  EXPECT_EQ(g["id"], "g");
  EXPECT_EQ(g, [] {
    json j = QualityGridJson(Tensor(), kCanter, kJump);
    j["id"] = "g";
    return j;
  }());
  // Same numbers as the CSV export.
  const QualityGrid grid = Tensor().Grid(kCanter, kJump);
  std::istringstream csv(QualityCsv(grid));
  std::string line;
  std::getline(csv, line);
  for (int p = 0; p < 4; ++p) {
    for (int o = 0; o < 4; ++o) {
      std::getline(csv, line);
      std::vector<std::string> f;
      std::stringstream ss(line);
      for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
      EXPECT_EQ(std::stod(f[4]), g["q"][p][o].get<double>());
    }
  }
  // Self pairs are not in the tensor.
  s.Submit(2, R"({"type":"quality_grid","m":"Jump","n":"Jump"})");
  out.clear();
  s.Frame(out);
  EXPECT_EQ(json::parse(out[0].text)["type"], "error");
}

TEST(Session, InfeasibleRequestReportsNoViableTransition) {
  TransitionTensor t = Tensor();
  for (TensorCell& c : t.MutableSlice(kTrot, kCanter)) SetCell(c, {0.0}, {false});
  SteeringSession s(t, Terrain(), kTrot);
  s.Submit(1, R"({"type":"set_motion","motion":"Canter","id":9})");
  std::vector<Outgoing> out;
  s.Frame(out);
  const json e = json::parse(out[0].text);
  EXPECT_EQ(e["type"], "error");
  EXPECT_EQ(e["code"], "NoViableTransition");
  EXPECT_EQ(e["id"], 9);
}

TEST(Session, RefusesTensorWithInconsistentHash) {
  TransitionTensor t = Tensor();
  t.set_config_hash("deadbeef");
  EXPECT_THROW(SteeringSession(t, Terrain(), kTrot), Error);
}

// Minimal blocking client for the server tests.
class Client {
 public:
  explicit Client(int port) {
    fd_ = socket(AF_INET, SOCK_STREAM, 0);
    timeval tv{5, 0};
    setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    ok_ = connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0;
  }
  ~Client() { Close(); }
  void Close() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }
  bool ok() const { return ok_; }

  void Write(const std::string& s) {
    std::size_t sent = 0;
    while (sent < s.size()) {
      const ssize_t n = ::send(fd_, s.data() + sent, s.size() - sent, MSG_NOSIGNAL);
      if (n <= 0) return;
      sent += static_cast<std::size_t>(n);
    }
  }
  bool ReadExact(std::string& out, std::size_t n) {
    out.resize(n);
    std::size_t got = 0;
    while (got < n) {
      const ssize_t r = ::recv(fd_, out.data() + got, n - got, 0);
      if (r <= 0) return false;
      got += static_cast<std::size_t>(r);
    }
    return true;
  }
  std::string ReadAll() {
    std::string out;
    char buf[4096];
    ssize_t r;
    while ((r = ::recv(fd_, buf, sizeof(buf), 0)) > 0) out.append(buf, static_cast<std::size_t>(r));
    return out;
  }
  std::string ReadHeaders() {
    std::string out;
    char c;
    while (out.find("\r\n\r\n") == std::string::npos && ::recv(fd_, &c, 1, 0) == 1) out += c;
    return out;
  }

  // Sends a masked text frame.
  void SendText(const std::string& payload, std::uint8_t opcode = 0x1) {
    std::string f;
    f += static_cast<char>(0x80 | opcode);
    if (payload.size() < 126) {
      f += static_cast<char>(0x80 | payload.size());
    } else {
      f += static_cast<char>(0x80 | 126);
      f += static_cast<char>(payload.size() >> 8);
      f += static_cast<char>(payload.size() & 0xff);
    }
    const unsigned char mask[4] = {0x12, 0x34, 0x56, 0x78};
    f.append(reinterpret_cast<const char*>(mask), 4);
    for (std::size_t i = 0; i < payload.size(); ++i) {
      f += static_cast<char>(payload[i] ^ mask[i % 4]);
    }
    Write(f);
  }

  // Reads one unfragmented server frame; returns opcode and payload.
  std::optional<std::pair<int, std::string>> ReadMessage() {
    std::string h;
    if (!ReadExact(h, 2)) return std::nullopt;
    const int opcode = h[0] & 0x0f;
    std::uint64_t len = static_cast<unsigned char>(h[1]) & 0x7f;
    if (len == 126) {
      if (!ReadExact(h, 2)) return std::nullopt;
      len = (static_cast<unsigned char>(h[0]) << 8) | static_cast<unsigned char>(h[1]);
    } else if (len == 127) {
      if (!ReadExact(h, 8)) return std::nullopt;
      len = 0;
      for (char c : h) len = (len << 8) | static_cast<unsigned char>(c);
    }
    std::string payload;
    if (!ReadExact(payload, len)) return std::nullopt;
    return std::make_pair(opcode, payload);
  }

  // Next text message whose type is `type`.
  std::optional<json> Await(const std::string& type) {
    for (int i = 0; i < 2000; ++i) {
      const auto m = ReadMessage();
      if (!m) return std::nullopt;
      if (m->first != 0x1) continue;
      json j = json::parse(m->second);
      if (j["type"] == type) return j;
    }
    return std::nullopt;
  }

 private:
  int fd_ = -1;
  bool ok_ = false;
};

std::string Upgrade() {
  return "GET /ws HTTP/1.1\r\nHost: localhost\r\nUpgrade: websocket\r\n"
         "Connection: Upgrade\r\nSec-WebSocket-Key: dGhlIHNhbXBsZSBub25jZQ==\r\n"
         "Sec-WebSocket-Version: 13\r\n\r\n";
}

class ServerTest : public ::testing::Test {
 protected:
  void SetUp() override {
    session_ = std::make_unique<SteeringSession>(Tensor(), Terrain(), kTrot);
    ServerOptions o;
    o.port = 0;
    server_ = std::make_unique<SteeringServer>(*session_, o);
    server_->Start();
  }
  void TearDown() override { server_->Stop(); }

  std::unique_ptr<SteeringSession> session_;
  std::unique_ptr<SteeringServer> server_;
};

TEST_F(ServerTest, HandshakeHelloAndCommands) {
  Client c(server_->port());
  ASSERT_TRUE(c.ok());
  c.Write(Upgrade());
  const std::string headers = c.ReadHeaders();
  EXPECT_NE(headers.find("101 Switching Protocols"), std::string::npos);
  // Accept key of the handshake example nonce.
  EXPECT_NE(headers.find("s3pPLMBiTxaQ9kYGzzhZRbK+xOo="), std::string::npos);
  const auto hello = c.Await("hello");
  ASSERT_TRUE(hello.has_value());
  EXPECT_EQ((*hello)["active"], "Trot");
  ASSERT_TRUE(c.Await("frame").has_value());

  c.SendText(R"({"type":"set_motion","motion":"Canter","id":42})");
  const auto ack = c.Await("ack");
  ASSERT_TRUE(ack.has_value());
  EXPECT_EQ((*ack)["id"], 42);

  c.SendText(R"({"type":"set_motion","motion":"Gallop"})");
  const auto err = c.Await("error");
  ASSERT_TRUE(err.has_value());
  EXPECT_EQ((*err)["code"], "UnknownCommand");

  c.SendText("\x01\x02", 0x2);
  const auto bin = c.Await("error");
  ASSERT_TRUE(bin.has_value());
  EXPECT_EQ((*bin)["code"], "BadPayload");

  // Large (16-bit length) message.
  c.SendText(R"({"type":"pause","pad":")" + std::string(300, 'x') + R"("})");
  const auto pause = c.Await("ack");
  ASSERT_TRUE(pause.has_value());
  EXPECT_EQ((*pause)["command"], "pause");

  c.SendText("ping!", 0x9);
  std::optional<std::pair<int, std::string>> m;
  do m = c.ReadMessage();
  while (m && m->first != 0xA);
  ASSERT_TRUE(m.has_value());
  EXPECT_EQ(m->second, "ping!");
}

TEST_F(ServerTest, DisconnectDoesNotStopTheSimulation) {
  {
    Client c(server_->port());
    c.Write(Upgrade());
    c.ReadHeaders();
    ASSERT_TRUE(c.Await("frame").has_value());
  }
  Client d(server_->port());
  d.Write(Upgrade());
  d.ReadHeaders();
  const auto a = d.Await("frame");
  ASSERT_TRUE(a.has_value());
  const auto b = d.Await("frame");
  ASSERT_TRUE(b.has_value());
  EXPECT_GT((*b)["seq"].get<int>(), (*a)["seq"].get<int>());
  EXPECT_TRUE(server_->running());
}

TEST_F(ServerTest, HttpQualityGrid) {
  Client c(server_->port());
  c.Write("GET /quality_grid?m=Trot&n=Jump HTTP/1.1\r\nHost: x\r\n\r\n");
  const std::string r = c.ReadAll();
  EXPECT_EQ(r.rfind("HTTP/1.1 200", 0), 0u);
  const json body = json::parse(r.substr(r.find("\r\n\r\n") + 4));
  EXPECT_EQ(body, QualityGridJson(Tensor(), kTrot, kJump));

  Client bad(server_->port());
  bad.Write("GET /quality_grid?m=Trot&n=Gallop HTTP/1.1\r\nHost: x\r\n\r\n");
  const std::string e = bad.ReadAll();
  EXPECT_EQ(e.rfind("HTTP/1.1 400", 0), 0u);
  EXPECT_NE(e.find("UnknownCommand"), std::string::npos);

  Client missing(server_->port());
  missing.Write("GET /nothing HTTP/1.1\r\nHost: x\r\n\r\n");
  EXPECT_EQ(missing.ReadAll().rfind("HTTP/1.1 404", 0), 0u);
}

TEST_F(ServerTest, SecondBindOnTheSamePortFails) {
  SteeringSession other(Tensor(), Terrain(), kTrot);
  ServerOptions o;
  o.port = server_->port();
  try {
    SteeringServer second(other, o);
    FAIL() << "bound twice";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kPortInUse);
  }
}

TEST_F(ServerTest, StopIsIdempotent) {
  server_->Stop();
  EXPECT_FALSE(server_->running());
  server_->Stop();
}

}  // namespace
}  // namespace gaitswitch
