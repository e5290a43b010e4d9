#ifndef FUZZYSAIL_WIRE_HPP_
#define FUZZYSAIL_WIRE_HPP_

// Lockstep TCP bridge between the simulator and an external controller.
//
// Newline-terminated ASCII lines, one exchange per control step:
//   server -> client  OBS t=<s> heading=<deg> desired=<deg> wind_dir=<deg> wind_speed=<m/s> x=<m> y=<m>
//   client -> server  CMD rudder=<percent> mode=<delta|absolute>
// When the episode ends the server sends
//   END completed=<0|1> time=<s> rmse=<deg> steps=<n>
// and closes. A malformed command gets "ERR <reason>" and the connection is
// closed. Numbers are written in shortest round-trip decimal form.

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fuzzysail/controllers.hpp"
#include "fuzzysail/csv.hpp"
#include "fuzzysail/sim.hpp"

namespace fuzzysail::wire {

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SocketError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kMaxLine = 4096;

struct Command {
  double rudder = 0.0;
  RudderMode mode = RudderMode::kDelta;
};

struct EndSummary {
  bool completed = false;
  double time = 0.0;
  double rmse = 0.0;
  std::size_t steps = 0;
};

// ---------------------------------------------------------------------------
// Message codec

namespace detail {

// Splits "TAG k1=v1 k2=v2" and checks the tag and the keys, in order.
inline std::vector<std::string> fields(std::string_view line, std::string_view tag,
                                       std::initializer_list<std::string_view> keys) {
  std::vector<std::string_view> toks;
  std::size_t pos = 0;
  while (pos < line.size()) {
    const auto next = line.find(' ', pos);
    const auto tok = line.substr(pos, next == std::string_view::npos ? next : next - pos);
    if (tok.empty()) throw ProtocolError("empty field");
    toks.push_back(tok);
    if (next == std::string_view::npos) break;
    pos = next + 1;
    if (pos == line.size()) throw ProtocolError("trailing space");
  }
  if (toks.empty() || toks[0] != tag) {
    throw ProtocolError("expected " + std::string(tag) + " message, got '" +
                        std::string(line.substr(0, 64)) + "'");
  }
  if (toks.size() != keys.size() + 1) {
    throw ProtocolError(std::string(tag) + " needs " + std::to_string(keys.size()) + " fields");
  }
  std::vector<std::string> values;
  std::size_t k = 1;
  for (auto key : keys) {
    const auto tok = toks[k++];
    const auto eq = tok.find('=');
    if (eq == std::string_view::npos || tok.substr(0, eq) != key) {
      throw ProtocolError("expected field '" + std::string(key) + "'");
    }
    values.emplace_back(tok.substr(eq + 1));
  }
  return values;
}

inline double finite_number(const std::string& s) {
  double v = 0.0;
  try {
    v = csv::parse_double(s);
  } catch (const csv::ParseError&) {
    throw ProtocolError("bad number '" + s + "'");
  }
  if (!std::isfinite(v)) throw ProtocolError("non-finite number '" + s + "'");
  return v;
}

}  // namespace detail

inline std::string format_obs(const Observation& o) {
  using csv::format_double;
  return "OBS t=" + format_double(o.t) + " heading=" + format_double(o.heading) +
         " desired=" + format_double(o.desired) + " wind_dir=" + format_double(o.wind_dir) +
         " wind_speed=" + format_double(o.wind_speed) + " x=" + format_double(o.x) +
         " y=" + format_double(o.y);
}

inline Observation parse_obs(std::string_view line) {
  const auto v = detail::fields(line, "OBS",
                                {"t", "heading", "desired", "wind_dir", "wind_speed", "x", "y"});
  return {detail::finite_number(v[0]), detail::finite_number(v[1]),
          detail::finite_number(v[2]), detail::finite_number(v[3]),
          detail::finite_number(v[4]), detail::finite_number(v[5]),
          detail::finite_number(v[6])};
}

inline std::string format_cmd(const Command& c) {
  return "CMD rudder=" + csv::format_double(c.rudder) + " mode=" + std::string(to_string(c.mode));
}

inline Command parse_cmd(std::string_view line) {
  const auto v = detail::fields(line, "CMD", {"rudder", "mode"});
  Command c;
  c.rudder = detail::finite_number(v[0]);
  if (v[1] == "delta") c.mode = RudderMode::kDelta;
  else if (v[1] == "absolute") c.mode = RudderMode::kAbsolute;
  else throw ProtocolError("mode must be delta or absolute");
  return c;
}

inline std::string format_end(const RunRecord& r) {
  return "END completed=" + std::string(r.completed ? "1" : "0") +
         " time=" + csv::format_double(r.time_taken) + " rmse=" + csv::format_double(r.rmse) +
         " steps=" + std::to_string(r.trace.size());
}

inline EndSummary parse_end(std::string_view line) {
  const auto v = detail::fields(line, "END", {"completed", "time", "rmse", "steps"});
  if (v[0] != "0" && v[0] != "1") throw ProtocolError("completed must be 0 or 1");
  EndSummary e;
  e.completed = v[0] == "1";
  e.time = detail::finite_number(v[1]);
  e.rmse = detail::finite_number(v[2]);
  e.steps = static_cast<std::size_t>(detail::finite_number(v[3]));
  return e;
}

// ---------------------------------------------------------------------------
// Sockets

/// Owning file descriptor with buffered line reads.
class Connection {
 public:
  Connection() = default;
  explicit Connection(int fd) : fd_(fd) {}
  Connection(Connection&& o) noexcept : fd_(std::exchange(o.fd_, -1)), buf_(std::move(o.buf_)) {}
  Connection& operator=(Connection&& o) noexcept {
    if (this != &o) {
      close();
      fd_ = std::exchange(o.fd_, -1);
      buf_ = std::move(o.buf_);
    }
    return *this;
  }
  Connection(const Connection&) = delete;
  Connection& operator=(const Connection&) = delete;
  ~Connection() { close(); }

  bool valid() const { return fd_ >= 0; }

  void close() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

  void send_line(std::string_view line) {
    std::string data(line);
    data.push_back('\n');
    std::size_t off = 0;
    while (off < data.size()) {
      const ssize_t n = ::send(fd_, data.data() + off, data.size() - off, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw SocketError(std::string("send: ") + std::strerror(errno));
      }
      off += static_cast<std::size_t>(n);
    }
  }

  /// Next line without its terminator; nullopt on orderly EOF.
  std::optional<std::string> read_line() {
    while (true) {
      if (auto nl = buf_.find('\n'); nl != std::string::npos) {
        std::string line = buf_.substr(0, nl);
        buf_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      if (buf_.size() > kMaxLine) throw ProtocolError("line too long");
      char chunk[1024];
      const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
      if (n == 0) return std::nullopt;
      if (n < 0) {
        if (errno == EINTR) continue;
        throw SocketError(std::string("recv: ") + std::strerror(errno));
      }
      buf_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 private:
  int fd_ = -1;
  std::string buf_;
};

inline sockaddr_in make_address(const std::string& host, std::uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    throw SocketError("bad IPv4 address '" + host + "'");
  }
  return addr;
}

inline void set_nodelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

inline Connection connect_to(const std::string& host, std::uint16_t port) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw SocketError(std::string("socket: ") + std::strerror(errno));
  Connection c(fd);
  const auto addr = make_address(host, port);
  if (::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0) {
    throw SocketError(std::string("connect: ") + std::strerror(errno));
  }
  set_nodelay(fd);
  return c;
}

// ---------------------------------------------------------------------------
// Server

struct ServeResult {
  enum class Status { kOk, kProtocolError, kDisconnected };
  Status status = Status::kOk;
  RunRecord record;
  std::string message;
};

/// Listening socket that serves one episode per accepted client.
class Server {
 public:
  /// port 0 binds an ephemeral port; see port().
  explicit Server(std::uint16_t port, const std::string& host = "127.0.0.1") {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw SocketError(std::string("socket: ") + std::strerror(errno));
    listener_ = Connection(fd);
    int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    const auto addr = make_address(host, port);
    if (::bind(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0) {
      throw SocketError("bind " + host + ":" + std::to_string(port) + ": " +
                        std::strerror(errno));
    }
    if (::listen(fd, 1) != 0) throw SocketError(std::string("listen: ") + std::strerror(errno));
    sockaddr_in bound{};
    socklen_t len = sizeof bound;
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&bound), &len);
    port_ = ntohs(bound.sin_port);
    fd_ = fd;
  }

  std::uint16_t port() const { return port_; }

  /// Accepts one client and runs one episode in lockstep with it.
  ServeResult serve_episode(const EpisodeConfig& cfg, NoiseLevel noise, std::uint64_t seed) {
    const int cfd = ::accept(fd_, nullptr, nullptr);
    if (cfd < 0) throw SocketError(std::string("accept: ") + std::strerror(errno));
    set_nodelay(cfd);
    Connection client(cfd);

    Episode ep(cfg, noise, seed);
    ServeResult res;
    try {
      while (!ep.finished()) {
        client.send_line(format_obs(ep.observe()));
        const auto line = client.read_line();
        if (!line) {
          ep.abort();
          res.status = ServeResult::Status::kDisconnected;
          res.message = "client disconnected";
          break;
        }
        Command cmd;
        try {
          cmd = parse_cmd(*line);
        } catch (const ProtocolError& e) {
          ep.abort();
          res.status = ServeResult::Status::kProtocolError;
          res.message = e.what();
          try {
            client.send_line(std::string("ERR ") + e.what());
          } catch (const SocketError&) {
          }
          break;
        }
        ep.apply(cmd.rudder, cmd.mode);
      }
      res.record = ep.record();
      if (res.status == ServeResult::Status::kOk) client.send_line(format_end(res.record));
    } catch (const SocketError& e) {
      ep.abort();
      res.status = ServeResult::Status::kDisconnected;
      res.message = e.what();
      res.record = ep.record();
    } catch (const ProtocolError& e) {  // over-long line
      ep.abort();
      res.status = ServeResult::Status::kProtocolError;
      res.message = e.what();
      res.record = ep.record();
    }
    if (res.status != ServeResult::Status::kOk) res.record.completed = false;
    return res;
  }

 private:
  Connection listener_;
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

inline ServeResult serve(const EpisodeConfig& cfg, NoiseLevel noise, std::uint64_t seed,
                         std::uint16_t port, const std::string& host = "127.0.0.1") {
  Server server(port, host);
  return server.serve_episode(cfg, noise, seed);
}

// ---------------------------------------------------------------------------
// Client

/// Drives a served episode with an in-process controller until END.
inline EndSummary run_client(const std::string& host, std::uint16_t port,
                             Controller& controller, double dt = 1.0) {
  Connection conn = connect_to(host, port);
  while (true) {
    const auto line = conn.read_line();
    if (!line) throw ProtocolError("server closed the connection without END");
    if (line->rfind("END", 0) == 0) return parse_end(*line);
    if (line->rfind("ERR", 0) == 0) throw ProtocolError("server error: " + *line);
    const Observation obs = parse_obs(*line);
    const double u = controller.step({obs.heading, obs.desired, dt});
    conn.send_line(format_cmd({u, controller.mode()}));
  }
}

}  // namespace fuzzysail::wire

#endif  // FUZZYSAIL_WIRE_HPP_
