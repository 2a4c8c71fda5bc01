#include "active_vision/errors.hpp"
#include "active_vision/transport.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <thread>

using namespace av_test;
using namespace std::chrono_literals;

namespace {

// Single-shot loopback server that reads whatever the client sends and then
// writes `reply` verbatim before closing.
class RawServer {
 public:
  explicit RawServer(std::string reply) : reply_(std::move(reply)) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    ::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr));
    ::listen(fd_, 1);
    socklen_t len = sizeof(addr);
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    thread_ = std::thread([this] {
      const int client = ::accept(fd_, nullptr, nullptr);
      if (client < 0) return;
      char buf[4096];
      (void)::recv(client, buf, sizeof(buf), 0);
      if (!reply_.empty()) (void)::send(client, reply_.data(), reply_.size(), MSG_NOSIGNAL);
      ::close(client);
    });
  }
  ~RawServer() {
    thread_.join();
    ::close(fd_);
  }
  std::uint16_t port() const { return port_; }

 private:
  std::string reply_;
  int fd_ = -1;
  std::uint16_t port_ = 0;
  std::thread thread_;
};

SegmentationRequest sample_request(std::uint64_t id) {
  LabelImage img(16, 12);
  for (int v = 3; v < 8; ++v) {
    for (int u = 2; u < 6; ++u) img.at(u, v) = SemanticClass::fruit;
  }
  img.at(12, 10) = SemanticClass::fruit;
  img.at(0, 0) = SemanticClass::leaf;
  return make_label_request(id, img, "fruit");
}

Endpoint loopback(std::uint16_t port) { return Endpoint{"127.0.0.1", port}; }

TransportFailure failure_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const TransportError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no TransportError thrown";
  return TransportFailure::io;
}

}  // namespace

TEST(Endpoint, ParsesHostPortAndBarePort) {
  const Endpoint a = Endpoint::parse("localhost:9000");
  EXPECT_EQ(a.host, "localhost");
  EXPECT_EQ(a.port, 9000);
  const Endpoint b = Endpoint::parse("7711");
  EXPECT_EQ(b.host, "127.0.0.1");
  EXPECT_EQ(b.port, kDefaultOraclePort);
  EXPECT_EQ(b.to_string(), "127.0.0.1:7711");
  EXPECT_THROW(Endpoint::parse("host:"), InvalidInput);
  EXPECT_THROW(Endpoint::parse("host:70000"), InvalidInput);
  EXPECT_THROW(Endpoint::parse("host:abc"), InvalidInput);
}

TEST(Transport, TcpResponsesMatchInProcessOracle) {
  const OracleNoiseConfig noise{0.4, 0.95, 0.2, 0, 11};
  FrameServer server(0, oracle_handler(noise));
  SegmentationClient client(loopback(server.port()), 5000ms);
  InProcessOracle local(noise);
  for (std::uint64_t id = 1; id <= 20; ++id) {
    const SegmentationRequest req = sample_request(id);
    EXPECT_EQ(canonical_response(client.segment(req)), canonical_response(local.segment(req))) << id;
  }
  server.stop();
}

TEST(Transport, GoldenFixturesOverTcp) {
  for (const ProtocolFixture& f : load_protocol_fixtures()) {
    FrameServer server(0, oracle_handler(f.noise));
    SegmentationClient client(loopback(server.port()), 5000ms);
    const std::string reply = client.round_trip(unframe(f.request_frame));
    EXPECT_EQ(frame(canonical_response(decode_response(reply))), f.response_frame) << f.name;
    server.stop();
  }
}

TEST(Transport, OneShotHelperWorks) {
  FrameServer server(0, oracle_handler(OracleNoiseConfig::exact()));
  const auto resp = request_segmentation(loopback(server.port()), sample_request(5), 5000ms);
  EXPECT_EQ(resp.image_id, 5u);
  EXPECT_EQ(resp.masks.size(), 2u);
  server.stop();
}

TEST(Transport, SlowServerTimesOut) {
  FrameServer server(0, [](std::string_view payload) {
    std::this_thread::sleep_for(600ms);
    return oracle_handler(OracleNoiseConfig::exact())(payload);
  });
  SegmentationClient client(loopback(server.port()), 150ms);
  EXPECT_EQ(failure_of([&] { client.segment(sample_request(1)); }), TransportFailure::timeout);
  server.stop();
}

TEST(Transport, ClosedPortIsConnectionRefused) {
  std::uint16_t port = 0;
  {
    FrameServer server(0, oracle_handler(OracleNoiseConfig::exact()));
    port = server.port();
    server.stop();
  }
  SegmentationClient client(loopback(port), 1000ms);
  EXPECT_EQ(failure_of([&] { client.segment(sample_request(1)); }), TransportFailure::connection_refused);
}

TEST(Transport, PeerClosingWithoutReplyIsConnectionClosed) {
  RawServer server("");
  SegmentationClient client(loopback(server.port()), 2000ms);
  EXPECT_EQ(failure_of([&] { client.segment(sample_request(1)); }), TransportFailure::connection_closed);
}

TEST(Transport, OversizedLengthPrefixIsMalformed) {
  RawServer server(std::string("\xff\xff\xff\xff{}", 6));
  SegmentationClient client(loopback(server.port()), 2000ms);
  EXPECT_EQ(failure_of([&] { client.segment(sample_request(1)); }), TransportFailure::malformed_frame);
}

TEST(Transport, MismatchedImageIdIsProtocolError) {
  FrameServer server(0, [](std::string_view payload) {
    SegmentationResponse resp = oracle_segment(decode_request(payload), OracleNoiseConfig::exact());
    resp.image_id += 1;
    return encode_response(resp);
  });
  SegmentationClient client(loopback(server.port()), 2000ms);
  EXPECT_THROW(client.segment(sample_request(3)), ProtocolError);
  server.stop();
}

TEST(Transport, ErrorReplyIsProtocolError) {
  FrameServer server(0, oracle_handler(OracleNoiseConfig::exact()));
  SegmentationClient client(loopback(server.port()), 2000ms);
  EXPECT_THROW(decode_response(client.round_trip("{\"garbage\":true}")), ProtocolError);
  // The connection stays usable after an error reply.
  EXPECT_EQ(client.segment(sample_request(4)).image_id, 4u);
  server.stop();
}

TEST(Transport, ClientReconnectsAfterFailure) {
  FrameServer server(0, oracle_handler(OracleNoiseConfig::exact()));
  SegmentationClient client(loopback(server.port()), 2000ms);
  EXPECT_EQ(client.segment(sample_request(1)).image_id, 1u);
  EXPECT_THROW(client.segment([] {
    SegmentationRequest bad = sample_request(2);
    bad.prompt.clear();
    return bad;
  }()),
               ProtocolError);
  EXPECT_EQ(client.segment(sample_request(3)).image_id, 3u);
  server.stop();
}
