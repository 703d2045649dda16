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

// Minimal HTTP/1.1 and WebSocket (RFC 6455) transport over POSIX sockets.

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <map>
#include <string>

#include <openssl/evp.h>

#include "gaitswitch/steering.hpp"

namespace gaitswitch {
namespace {

using nlohmann::json;

constexpr char kWebSocketGuid[] = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";
constexpr std::size_t kMaxHeaderBytes = 16 * 1024;
constexpr std::uint64_t kMaxMessageBytes = 1 << 20;
constexpr int kPollMs = 100;

bool SendAll(int fd, const char* data, std::size_t size) {
  while (size > 0) {
    const ssize_t n = ::send(fd, data, size, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    data += n;
    size -= static_cast<std::size_t>(n);
  }
  return true;
}

// Reads exactly size bytes; false on EOF, error or shutdown.
bool RecvAll(int fd, char* data, std::size_t size) {
  while (size > 0) {
    const ssize_t n = ::recv(fd, data, size, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    data += n;
    size -= static_cast<std::size_t>(n);
  }
  return true;
}

std::string Lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct HttpRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::map<std::string, std::string> headers;  // lower-case names
};

std::string UrlDecode(const std::string& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '+') {
      out += ' ';
    } else if (s[i] == '%' && i + 2 < s.size() &&
               std::isxdigit(static_cast<unsigned char>(s[i + 1])) &&
               std::isxdigit(static_cast<unsigned char>(s[i + 2]))) {
      out += static_cast<char>(std::stoi(s.substr(i + 1, 2), nullptr, 16));
      i += 2;
    } else {
      out += s[i];
    }
  }
  return out;
}

std::optional<HttpRequest> ReadRequest(int fd) {
  std::string buf;
  char c;
  while (buf.size() < kMaxHeaderBytes) {
    if (!RecvAll(fd, &c, 1)) return std::nullopt;
    buf += c;
    if (buf.size() >= 4 && buf.compare(buf.size() - 4, 4, "\r\n\r\n") == 0) break;
  }
  if (buf.size() >= kMaxHeaderBytes) return std::nullopt;

  HttpRequest req;
  std::size_t pos = buf.find("\r\n");
  const std::string line = buf.substr(0, pos);
  const auto sp1 = line.find(' ');
  const auto sp2 = line.find(' ', sp1 + 1);
  if (sp1 == std::string::npos || sp2 == std::string::npos) return std::nullopt;
  req.method = line.substr(0, sp1);
  std::string target = line.substr(sp1 + 1, sp2 - sp1 - 1);
  if (const auto q = target.find('?'); q != std::string::npos) {
    std::string query = target.substr(q + 1);
    target.resize(q);
    std::size_t start = 0;
    while (start <= query.size()) {
      const auto amp = std::min(query.find('&', start), query.size());
      const std::string kv = query.substr(start, amp - start);
      if (!kv.empty()) {
        const auto eq = kv.find('=');
        req.query[UrlDecode(kv.substr(0, eq))] =
            eq == std::string::npos ? "" : UrlDecode(kv.substr(eq + 1));
      }
      start = amp + 1;
    }
  }
  req.path = target;
  while (true) {
    const std::size_t next = buf.find("\r\n", pos + 2);
    if (next == std::string::npos || next == pos + 2) break;
    const std::string header = buf.substr(pos + 2, next - pos - 2);
    const auto colon = header.find(':');
    if (colon != std::string::npos) {
      req.headers[Lower(Trim(header.substr(0, colon)))] = Trim(header.substr(colon + 1));
    }
    pos = next;
  }
  return req;
}

void SendHttp(int fd, int status, std::string_view reason,
              const std::string& body) {
  std::string out = "HTTP/1.1 " + std::to_string(status) + " " +
                    std::string(reason) +
                    "\r\nContent-Type: application/json\r\n"
                    "Access-Control-Allow-Origin: *\r\n"
                    "Connection: close\r\nContent-Length: " +
                    std::to_string(body.size()) + "\r\n\r\n" + body;
  SendAll(fd, out.data(), out.size());
}

std::string AcceptKey(const std::string& key) {
  const std::string text = key + kWebSocketGuid;
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha1(), nullptr);
  unsigned char encoded[64];
  const int n = EVP_EncodeBlock(encoded, digest, static_cast<int>(len));
  return std::string(reinterpret_cast<char*>(encoded), static_cast<std::size_t>(n));
}

std::string EncodeFrame(std::uint8_t opcode, std::string_view payload) {
  std::string out;
  out += static_cast<char>(0x80 | opcode);
  const std::uint64_t n = payload.size();
  if (n < 126) {
    out += static_cast<char>(n);
  } else if (n <= 0xFFFF) {
    out += static_cast<char>(126);
    out += static_cast<char>((n >> 8) & 0xFF);
    out += static_cast<char>(n & 0xFF);
  } else {
    out += static_cast<char>(127);
    for (int i = 7; i >= 0; --i) out += static_cast<char>((n >> (8 * i)) & 0xFF);
  }
  out.append(payload);
  return out;
}

struct WsFrame {
  bool fin = true;
  std::uint8_t opcode = 0;
  std::string payload;
};

std::optional<WsFrame> ReadFrame(int fd) {
  unsigned char head[2];
  if (!RecvAll(fd, reinterpret_cast<char*>(head), 2)) return std::nullopt;
  WsFrame f;
  f.fin = (head[0] & 0x80) != 0;
  f.opcode = head[0] & 0x0F;
  const bool masked = (head[1] & 0x80) != 0;
  std::uint64_t len = head[1] & 0x7F;
  if (len == 126 || len == 127) {
    unsigned char ext[8];
    const int bytes = len == 126 ? 2 : 8;
    if (!RecvAll(fd, reinterpret_cast<char*>(ext), static_cast<std::size_t>(bytes))) {
      return std::nullopt;
    }
    len = 0;
    for (int i = 0; i < bytes; ++i) len = (len << 8) | ext[i];
  }
  if (len > kMaxMessageBytes) return std::nullopt;
  unsigned char mask[4] = {0, 0, 0, 0};
  if (masked && !RecvAll(fd, reinterpret_cast<char*>(mask), 4)) return std::nullopt;
  f.payload.resize(static_cast<std::size_t>(len));
  if (len > 0 && !RecvAll(fd, f.payload.data(), f.payload.size())) return std::nullopt;
  if (masked) {
    for (std::size_t i = 0; i < f.payload.size(); ++i) f.payload[i] ^= static_cast<char>(mask[i % 4]);
  }
  return f;
}

}  // namespace

struct SteeringServer::Connection {
  int fd = -1;
  std::uint64_t id = 0;
  std::mutex write_mutex;
  std::atomic<bool> websocket{false};
  std::atomic<bool> open{true};
  std::atomic<bool> done{false};
  std::thread thread;

  bool Send(std::uint8_t opcode, std::string_view payload) {
    if (!open) return false;
    const std::string frame = EncodeFrame(opcode, payload);
    std::lock_guard<std::mutex> lock(write_mutex);
    if (!SendAll(fd, frame.data(), frame.size())) {
      Close();
      return false;
    }
    return true;
  }

  void Close() {
    if (open.exchange(false)) ::shutdown(fd, SHUT_RDWR);
  }
};

SteeringServer::SteeringServer(SteeringSession& session, ServerOptions options)
    : session_(&session), options_(std::move(options)) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) {
    throw Error(ErrorCode::kInvalidArgument, std::string("socket: ") + std::strerror(errno));
  }
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(options_.port));
  if (::inet_pton(AF_INET, options_.bind_address.c_str(), &addr.sin_addr) != 1) {
    ::close(listen_fd_);
    throw Error(ErrorCode::kInvalidArgument, "bad bind address '" + options_.bind_address + "'");
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    const int err = errno;
    ::close(listen_fd_);
    if (err == EADDRINUSE || err == EACCES) {
      throw Error(ErrorCode::kPortInUse, "port " + std::to_string(options_.port) +
                                             ": " + std::strerror(err));
    }
    throw Error(ErrorCode::kInvalidArgument, std::string("bind: ") + std::strerror(err));
  }
  if (::listen(listen_fd_, 16) != 0) {
    const int err = errno;
    ::close(listen_fd_);
    throw Error(ErrorCode::kPortInUse, std::string("listen: ") + std::strerror(err));
  }
  socklen_t len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

SteeringServer::~SteeringServer() {
  Stop();
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

void SteeringServer::Start() {
  if (running_.exchange(true)) return;
  accept_thread_ = std::thread([this] { AcceptLoop(); });
  sim_thread_ = std::thread([this] { SimulationLoop(); });
}

void SteeringServer::Stop() {
  if (!running_.exchange(false)) return;
  if (accept_thread_.joinable()) accept_thread_.join();
  if (sim_thread_.joinable()) sim_thread_.join();
  std::vector<std::shared_ptr<Connection>> conns;
  {
    std::lock_guard<std::mutex> lock(conns_mutex_);
    conns.swap(conns_);
  }
  for (auto& c : conns) c->Close();
  for (auto& c : conns) {
    if (c->thread.joinable()) c->thread.join();
    ::close(c->fd);
  }
}

std::size_t SteeringServer::clients() const {
  std::lock_guard<std::mutex> lock(conns_mutex_);
  return static_cast<std::size_t>(std::count_if(
      conns_.begin(), conns_.end(),
      [](const auto& c) { return c->websocket && c->open; }));
}

void SteeringServer::AcceptLoop() {
  while (running_) {
    pollfd p{listen_fd_, POLLIN, 0};
    if (::poll(&p, 1, kPollMs) <= 0) continue;
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    auto conn = std::make_shared<Connection>();
    conn->fd = fd;
    conn->id = next_client_++;

    std::lock_guard<std::mutex> lock(conns_mutex_);
    // Reap finished connections.
    for (auto it = conns_.begin(); it != conns_.end();) {
      if ((*it)->done) {
        (*it)->thread.join();
        ::close((*it)->fd);
        it = conns_.erase(it);
      } else {
        ++it;
      }
    }
    conns_.push_back(conn);
    conn->thread = std::thread([this, conn] { Serve(conn); });
  }
}

void SteeringServer::Serve(std::shared_ptr<Connection> conn) {
  const std::optional<HttpRequest> req = ReadRequest(conn->fd);
  if (!req) {
    conn->Close();
    conn->done = true;
    return;
  }
  const auto upgrade = req->headers.find("upgrade");
  const auto key = req->headers.find("sec-websocket-key");
  if (upgrade != req->headers.end() && Lower(upgrade->second) == "websocket") {
    if (key == req->headers.end()) {
      SendHttp(conn->fd, 400, "Bad Request", R"({"error":"missing Sec-WebSocket-Key"})");
      conn->Close();
      conn->done = true;
      return;
    }
    const std::string response =
        "HTTP/1.1 101 Switching Protocols\r\nUpgrade: websocket\r\n"
        "Connection: Upgrade\r\nSec-WebSocket-Accept: " +
        AcceptKey(key->second) + "\r\n\r\n";
    {
      std::lock_guard<std::mutex> lock(conn->write_mutex);
      SendAll(conn->fd, response.data(), response.size());
    }
    conn->Send(0x1, session_->Hello());
    conn->websocket = true;

    std::string message;
    while (conn->open) {
      std::optional<WsFrame> f = ReadFrame(conn->fd);
      if (!f) break;
      if (f->opcode == 0x8) {
        conn->Send(0x8, f->payload.substr(0, 2));
        break;
      }
      if (f->opcode == 0x9) {
        conn->Send(0xA, f->payload);
        continue;
      }
      if (f->opcode == 0xA) continue;
      message += f->payload;
      if (message.size() > kMaxMessageBytes) break;
      if (!f->fin) continue;
      if (f->opcode == 0x2) {
        conn->Send(0x1, ErrorReply(Error(ErrorCode::kBadPayload, "binary messages are not accepted"),
                                   std::nullopt));
      } else if (auto reply = session_->Submit(conn->id, message)) {
        conn->Send(0x1, *reply);
      }
      message.clear();
    }
    conn->Close();
    conn->done = true;
    return;
  }

  if (req->method == "GET" && req->path == "/quality_grid") {
    try {
      const auto m = req->query.find("m");
      const auto n = req->query.find("n");
      if (m == req->query.end() || n == req->query.end()) {
        throw Error(ErrorCode::kBadPayload, "query parameters m and n are required");
      }
      const json body{{"type", "quality_grid"}, {"m", m->second}, {"n", n->second}};
      const Command cmd = ParseCommand(body.dump(), session_->tensor().vocabulary());
      const auto& q = std::get<QualityGridRequest>(cmd.body);
      SendHttp(conn->fd, 200, "OK", QualityGridJson(session_->tensor(), q.m, q.n).dump());
    } catch (const Error& e) {
      SendHttp(conn->fd, 400, "Bad Request", ErrorReply(e, std::nullopt));
    }
  } else if (req->method == "GET" && req->path == "/hello") {
    SendHttp(conn->fd, 200, "OK", session_->Hello());
  } else {
    SendHttp(conn->fd, 404, "Not Found", R"({"error":"not found"})");
  }
  conn->Close();
  conn->done = true;
}

void SteeringServer::Broadcast(const std::vector<Outgoing>& out) {
  std::vector<std::shared_ptr<Connection>> targets;
  {
    std::lock_guard<std::mutex> lock(conns_mutex_);
    for (const auto& c : conns_) {
      if (c->websocket && c->open) targets.push_back(c);
    }
  }
  for (const Outgoing& o : out) {
    for (const auto& c : targets) {
      if (o.client == 0 || o.client == c->id) c->Send(0x1, o.text);
    }
  }
}

void SteeringServer::SimulationLoop() {
  using Clock = std::chrono::steady_clock;
  const auto period = std::chrono::duration_cast<Clock::duration>(
      std::chrono::duration<double>(session_->frame_period()));
  auto next = Clock::now();
  std::vector<Outgoing> out;
  while (running_) {
    out.clear();
    session_->Frame(out);
    Broadcast(out);
    next += period;
    const auto now = Clock::now();
    // After a long stall restart the schedule instead of bursting frames.
    if (now - next > std::chrono::seconds(1)) next = now;
    std::this_thread::sleep_until(next);
  }
}

}  // namespace gaitswitch
