#pragma once

#include "active_vision/oracle.hpp"
#include "active_vision/protocol.hpp"

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace active_vision {

inline constexpr std::uint16_t kDefaultOraclePort = 7711;
inline constexpr std::chrono::milliseconds kDefaultTimeout{10'000};

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = kDefaultOraclePort;

  /// "host:port" or "port". Throws InvalidInput.
  static Endpoint parse(const std::string& text);
  std::string to_string() const { return host + ":" + std::to_string(port); }
};

/// Anything that answers segmentation requests.
class SegmentationBackend {
 public:
  virtual ~SegmentationBackend() = default;
  virtual SegmentationResponse segment(const SegmentationRequest& req) = 0;
};

class InProcessOracle : public SegmentationBackend {
 public:
  explicit InProcessOracle(OracleNoiseConfig noise, PromptAliases aliases = default_prompt_aliases())
      : noise_(noise), aliases_(std::move(aliases)) {}
  SegmentationResponse segment(const SegmentationRequest& req) override {
    return oracle_segment(req, noise_, aliases_);
  }

 private:
  OracleNoiseConfig noise_;
  PromptAliases aliases_;
};

/// Blocking client over one TCP connection, opened lazily and reopened after
/// a transport failure. Errors: TransportError (timeout, connection refused,
/// connection closed, malformed frame) and ProtocolError (bad message or
/// image_id mismatch).
class SegmentationClient : public SegmentationBackend {
 public:
  explicit SegmentationClient(Endpoint endpoint, std::chrono::milliseconds timeout = kDefaultTimeout);
  ~SegmentationClient() override;
  SegmentationClient(const SegmentationClient&) = delete;
  SegmentationClient& operator=(const SegmentationClient&) = delete;

  SegmentationResponse segment(const SegmentationRequest& req) override;
  /// Sends one raw frame payload and returns the raw reply payload.
  std::string round_trip(std::string_view payload);

 private:
  void connect();
  void disconnect();

  Endpoint endpoint_;
  std::chrono::milliseconds timeout_;
  int fd_ = -1;
};

SegmentationResponse request_segmentation(const Endpoint& endpoint, const SegmentationRequest& req,
                                          std::chrono::milliseconds timeout = kDefaultTimeout);

/// TCP server speaking the framed protocol. Each connection is served on its
/// own thread; frames on one connection are handled in order.
class FrameServer {
 public:
  /// Maps a request payload to a reply payload.
  using Handler = std::function<std::string(std::string_view)>;

  /// Binds 127.0.0.1 (or `bind_any` for 0.0.0.0) at `port`; port 0 picks a
  /// free port. Throws TransportError(io) if binding fails.
  FrameServer(std::uint16_t port, Handler handler, bool bind_any = false);
  ~FrameServer();
  FrameServer(const FrameServer&) = delete;
  FrameServer& operator=(const FrameServer&) = delete;

  std::uint16_t port() const { return port_; }
  void stop();
  /// Blocks until stop() is called from another thread.
  void wait();

 private:
  void accept_loop();
  void serve(int fd);

  Handler handler_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> running_{true};
  std::mutex mutex_;
  std::vector<int> client_fds_;
  std::vector<std::thread> workers_;
  std::thread acceptor_;
};

/// Request handler backed by the ground-truth oracle: decodes the frame,
/// segments, stamps server_time_ms; malformed requests get an error reply.
FrameServer::Handler oracle_handler(OracleNoiseConfig noise, PromptAliases aliases = default_prompt_aliases());

}  // namespace active_vision
