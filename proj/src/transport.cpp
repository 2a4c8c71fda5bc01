#include "active_vision/transport.hpp"

#include "active_vision/errors.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

namespace active_vision {

namespace {

using Clock = std::chrono::steady_clock;

int remaining_ms(Clock::time_point deadline) {
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
  return left > 0 ? static_cast<int>(left) : 0;
}

void wait_ready(int fd, short events, Clock::time_point deadline) {
  pollfd p{fd, events, 0};
  for (;;) {
    const int rc = ::poll(&p, 1, remaining_ms(deadline));
    if (rc > 0) return;
    if (rc == 0) throw TransportError(TransportFailure::timeout, "no response before the deadline");
    if (errno != EINTR) throw TransportError(TransportFailure::io, std::strerror(errno));
  }
}

void send_all(int fd, std::string_view bytes, Clock::time_point deadline) {
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    wait_ready(fd, POLLOUT, deadline);
    const ssize_t n = ::send(fd, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      if (errno == EPIPE || errno == ECONNRESET) {
        throw TransportError(TransportFailure::connection_closed, "peer closed the connection");
      }
      throw TransportError(TransportFailure::io, std::strerror(errno));
    }
    sent += static_cast<std::size_t>(n);
  }
}

/// Reads exactly `count` bytes. Returns false on a clean EOF before any byte
/// when `eof_ok` is set.
bool recv_exact(int fd, char* out, std::size_t count, Clock::time_point deadline, bool eof_ok) {
  std::size_t got = 0;
  while (got < count) {
    wait_ready(fd, POLLIN, deadline);
    const ssize_t n = ::recv(fd, out + got, count - got, 0);
    if (n == 0) {
      if (got == 0 && eof_ok) return false;
      throw TransportError(TransportFailure::connection_closed, "connection closed mid-frame");
    }
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      if (errno == ECONNRESET) throw TransportError(TransportFailure::connection_closed, "connection reset");
      throw TransportError(TransportFailure::io, std::strerror(errno));
    }
    got += static_cast<std::size_t>(n);
  }
  return true;
}

/// Reads one frame payload; nullopt on clean EOF between frames.
std::optional<std::string> read_frame(int fd, Clock::time_point deadline) {
  unsigned char header[4];
  if (!recv_exact(fd, reinterpret_cast<char*>(header), 4, deadline, true)) return std::nullopt;
  const std::uint32_t n = (std::uint32_t{header[0]} << 24) | (std::uint32_t{header[1]} << 16) |
                          (std::uint32_t{header[2]} << 8) | std::uint32_t{header[3]};
  if (n > kMaxFrameBytes) {
    throw TransportError(TransportFailure::malformed_frame, "frame length " + std::to_string(n) + " too large");
  }
  std::string payload(n, '\0');
  recv_exact(fd, payload.data(), n, deadline, false);
  return payload;
}

void set_nonblocking(int fd, bool on) {
  const int flags = ::fcntl(fd, F_GETFL, 0);
  ::fcntl(fd, F_SETFL, on ? (flags | O_NONBLOCK) : (flags & ~O_NONBLOCK));
}

}  // namespace

Endpoint Endpoint::parse(const std::string& text) {
  Endpoint ep;
  std::string port_text = text;
  if (auto colon = text.rfind(':'); colon != std::string::npos) {
    ep.host = text.substr(0, colon);
    port_text = text.substr(colon + 1);
  }
  try {
    std::size_t used = 0;
    const int port = std::stoi(port_text, &used);
    if (used != port_text.size() || port < 0 || port > 65535) throw std::out_of_range("port");
    ep.port = static_cast<std::uint16_t>(port);
  } catch (const std::exception&) {
    throw InvalidInput("invalid endpoint '" + text + "'");
  }
  if (ep.host.empty()) throw InvalidInput("invalid endpoint '" + text + "'");
  return ep;
}

// ---------------------------------------------------------------------------
// Client

SegmentationClient::SegmentationClient(Endpoint endpoint, std::chrono::milliseconds timeout)
    : endpoint_(std::move(endpoint)), timeout_(timeout) {}

SegmentationClient::~SegmentationClient() { disconnect(); }

void SegmentationClient::disconnect() {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
}

void SegmentationClient::connect() {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* result = nullptr;
  const std::string port = std::to_string(endpoint_.port);
  if (::getaddrinfo(endpoint_.host.c_str(), port.c_str(), &hints, &result) != 0 || !result) {
    throw TransportError(TransportFailure::io, "cannot resolve " + endpoint_.host);
  }
  const int fd = ::socket(result->ai_family, result->ai_socktype, result->ai_protocol);
  if (fd < 0) {
    ::freeaddrinfo(result);
    throw TransportError(TransportFailure::io, std::strerror(errno));
  }
  set_nonblocking(fd, true);
  const int rc = ::connect(fd, result->ai_addr, result->ai_addrlen);
  ::freeaddrinfo(result);
  const auto deadline = Clock::now() + timeout_;
  try {
    if (rc < 0) {
      if (errno == ECONNREFUSED) {
        throw TransportError(TransportFailure::connection_refused, endpoint_.to_string());
      }
      if (errno != EINPROGRESS) throw TransportError(TransportFailure::io, std::strerror(errno));
      wait_ready(fd, POLLOUT, deadline);
      int err = 0;
      socklen_t len = sizeof(err);
      ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
      if (err == ECONNREFUSED) {
        throw TransportError(TransportFailure::connection_refused, endpoint_.to_string());
      }
      if (err != 0) throw TransportError(TransportFailure::io, std::strerror(err));
    }
  } catch (...) {
    ::close(fd);
    throw;
  }
  const int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  fd_ = fd;
}

std::string SegmentationClient::round_trip(std::string_view payload) {
  if (fd_ < 0) connect();
  try {
    const auto deadline = Clock::now() + timeout_;
    send_all(fd_, frame(payload), deadline);
    auto reply = read_frame(fd_, deadline);
    if (!reply) throw TransportError(TransportFailure::connection_closed, "server closed the connection");
    return *reply;
  } catch (const TransportError&) {
    disconnect();
    throw;
  }
}

SegmentationResponse SegmentationClient::segment(const SegmentationRequest& req) {
  const std::string reply = round_trip(encode_request(req));
  SegmentationResponse resp = decode_response(reply);
  if (resp.image_id != req.image_id) {
    throw ProtocolError("response image_id " + std::to_string(resp.image_id) + " does not match request " +
                        std::to_string(req.image_id));
  }
  return resp;
}

SegmentationResponse request_segmentation(const Endpoint& endpoint, const SegmentationRequest& req,
                                          std::chrono::milliseconds timeout) {
  SegmentationClient client(endpoint, timeout);
  return client.segment(req);
}

// ---------------------------------------------------------------------------
// Server

FrameServer::FrameServer(std::uint16_t port, Handler handler, bool bind_any) : handler_(std::move(handler)) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw TransportError(TransportFailure::io, std::strerror(errno));
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  addr.sin_addr.s_addr = htonl(bind_any ? INADDR_ANY : INADDR_LOOPBACK);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0 || ::listen(listen_fd_, 16) < 0) {
    const std::string err = std::strerror(errno);
    ::close(listen_fd_);
    throw TransportError(TransportFailure::io, "cannot listen on port " + std::to_string(port) + ": " + err);
  }
  socklen_t len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  acceptor_ = std::thread([this] { accept_loop(); });
}

FrameServer::~FrameServer() { stop(); }

void FrameServer::accept_loop() {
  while (running_) {
    pollfd p{listen_fd_, POLLIN, 0};
    const int rc = ::poll(&p, 1, 100);
    if (rc <= 0) continue;
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    std::lock_guard lock(mutex_);
    if (!running_) {
      ::close(fd);
      break;
    }
    client_fds_.push_back(fd);
    workers_.emplace_back([this, fd] { serve(fd); });
  }
}

void FrameServer::serve(int fd) {
  const int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  try {
    while (running_) {
      // Idle connections are kept open indefinitely; stop() shuts them down.
      auto request = read_frame(fd, Clock::now() + std::chrono::hours(24 * 365));
      if (!request) break;
      send_all(fd, frame(handler_(*request)), Clock::now() + kDefaultTimeout);
    }
  } catch (const TransportError&) {
    // Drop the connection; other connections are unaffected.
  }
  ::shutdown(fd, SHUT_RDWR);
}

void FrameServer::stop() {
  if (!running_.exchange(false)) return;
  if (acceptor_.joinable()) acceptor_.join();
  std::vector<std::thread> workers;
  {
    std::lock_guard lock(mutex_);
    for (int fd : client_fds_) ::shutdown(fd, SHUT_RDWR);
    workers.swap(workers_);
  }
  for (auto& t : workers) t.join();
  for (int fd : client_fds_) ::close(fd);
  client_fds_.clear();
  ::close(listen_fd_);
  listen_fd_ = -1;
}

void FrameServer::wait() {
  while (running_) std::this_thread::sleep_for(std::chrono::milliseconds(100));
}

FrameServer::Handler oracle_handler(OracleNoiseConfig noise, PromptAliases aliases) {
  noise.validate();
  return [noise, aliases = std::move(aliases)](std::string_view payload) -> std::string {
    const auto start = Clock::now();
    try {
      const SegmentationRequest req = decode_request(payload);
      SegmentationResponse resp = oracle_segment(req, noise, aliases);
      resp.server_time_ms =
          std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start).count();
      return encode_response(resp);
    } catch (const ProtocolError& e) {
      return encode_error(e.what());
    }
  };
}

}  // namespace active_vision
