#pragma once

#include "active_vision/rle.hpp"
#include "active_vision/sensor.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace active_vision {

// Wire format: every message is a frame of a 4-byte big-endian payload
// length followed by a UTF-8 JSON object. Objects carry `proto_version` and
// `type` ("segmentation_request", "segmentation_response" or "error").
// Binary payloads are base64. Keys are emitted sorted, so encoding is canonical.

inline constexpr int kProtoVersion = 1;
inline constexpr std::uint32_t kMaxFrameBytes = 64u << 20;

enum class PayloadKind { labels, rgb };

struct SegmentationRequest {
  std::uint64_t image_id = 0;
  int width = 0;
  int height = 0;
  PayloadKind payload_kind = PayloadKind::labels;
  /// labels: one class byte per pixel; rgb: three bytes per pixel.
  std::vector<std::uint8_t> payload;
  std::string prompt = "fruit";
  double box_threshold = 0.0;
  double text_threshold = 0.0;

  /// Throws ProtocolError on an empty prompt, thresholds outside [0,1] or a
  /// payload whose size does not match the image.
  void validate() const;
  bool operator==(const SegmentationRequest&) const = default;
};

struct InstanceMask {
  std::string class_name;
  double confidence = 0.0;
  std::int64_t instance_id = 0;
  std::vector<std::uint32_t> rle;

  bool operator==(const InstanceMask&) const = default;
};

struct SegmentationResponse {
  std::uint64_t image_id = 0;
  std::vector<InstanceMask> masks;
  std::int64_t server_time_ms = 0;
  std::string warning;  // e.g. unknown prompt; empty when none
  std::string backend;  // e.g. "oracle", "stub"

  bool operator==(const SegmentationResponse&) const = default;
};

SegmentationRequest make_label_request(std::uint64_t image_id, const LabelImage& labels, std::string prompt,
                                       double box_threshold = 0.0, double text_threshold = 0.0);

/// Throws ProtocolError if the request does not carry a decodable label image.
LabelImage decode_label_payload(const SegmentationRequest& req);

std::string encode_request(const SegmentationRequest& req);
std::string encode_response(const SegmentationResponse& resp);
std::string encode_error(std::string_view message);

SegmentationRequest decode_request(std::string_view json);
/// Throws ProtocolError for malformed objects and for "error" messages.
SegmentationResponse decode_response(std::string_view json);

/// Response encoding with the timing field zeroed, for equality checks
/// across transports.
std::string canonical_response(SegmentationResponse resp);

std::string frame(std::string_view payload);
/// Parses one complete frame; throws TransportError(malformed_frame) on a
/// bad length prefix.
std::string unframe(std::string_view bytes);

std::string base64_encode(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

}  // namespace active_vision
