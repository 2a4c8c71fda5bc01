#include "active_vision/protocol.hpp"

#include "active_vision/errors.hpp"

#include <openssl/evp.h>

#include <json.hpp>

namespace active_vision {

using nlohmann::json;

namespace {

const json& require(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ProtocolError(std::string("missing field '") + key + "'");
  return *it;
}

template <class T>
T field(const json& obj, const char* key) {
  const json& v = require(obj, key);
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw ProtocolError(std::string("field '") + key + "' has the wrong type");
  }
}

json parse_object(std::string_view text, std::string_view expected_type) {
  json obj;
  try {
    obj = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ProtocolError(std::string("invalid JSON: ") + e.what());
  }
  if (!obj.is_object()) throw ProtocolError("message is not an object");
  const auto version = field<int>(obj, "proto_version");
  if (version != kProtoVersion) {
    throw ProtocolError("unsupported proto_version " + std::to_string(version));
  }
  const auto type = field<std::string>(obj, "type");
  if (type == "error" && expected_type != "error") {
    throw ProtocolError("server error: " + obj.value("message", std::string("(no message)")));
  }
  if (type != expected_type) throw ProtocolError("unexpected message type '" + type + "'");
  return obj;
}

}  // namespace

void SegmentationRequest::validate() const {
  if (prompt.empty()) throw ProtocolError("prompt must not be empty");
  if (!(box_threshold >= 0.0 && box_threshold <= 1.0)) throw ProtocolError("box_threshold outside [0,1]");
  if (!(text_threshold >= 0.0 && text_threshold <= 1.0)) throw ProtocolError("text_threshold outside [0,1]");
  if (width < 0 || height < 0) throw ProtocolError("negative image size");
  const std::size_t pixels = static_cast<std::size_t>(width) * height;
  const std::size_t expected = payload_kind == PayloadKind::labels ? pixels : 3 * pixels;
  if (payload.size() != expected) {
    throw ProtocolError("payload has " + std::to_string(payload.size()) + " bytes, expected " +
                        std::to_string(expected));
  }
}

SegmentationRequest make_label_request(std::uint64_t image_id, const LabelImage& labels, std::string prompt,
                                       double box_threshold, double text_threshold) {
  SegmentationRequest req;
  req.image_id = image_id;
  req.width = labels.width;
  req.height = labels.height;
  req.payload_kind = PayloadKind::labels;
  req.payload.reserve(labels.data.size());
  for (SemanticClass c : labels.data) req.payload.push_back(static_cast<std::uint8_t>(c));
  req.prompt = std::move(prompt);
  req.box_threshold = box_threshold;
  req.text_threshold = text_threshold;
  return req;
}

LabelImage decode_label_payload(const SegmentationRequest& req) {
  if (req.payload_kind != PayloadKind::labels) throw ProtocolError("request carries no label payload");
  req.validate();
  LabelImage labels(req.width, req.height);
  for (std::size_t n = 0; n < req.payload.size(); ++n) {
    if (req.payload[n] >= kAllClasses.size()) {
      throw ProtocolError("label payload byte " + std::to_string(n) + " is not a class id");
    }
    labels.data[n] = static_cast<SemanticClass>(req.payload[n]);
  }
  return labels;
}

std::string encode_request(const SegmentationRequest& req) {
  json obj = {{"proto_version", kProtoVersion},
              {"type", "segmentation_request"},
              {"image_id", req.image_id},
              {"width", req.width},
              {"height", req.height},
              {"payload_kind", req.payload_kind == PayloadKind::labels ? "labels" : "rgb"},
              {"payload", base64_encode(req.payload)},
              {"prompt", req.prompt},
              {"box_threshold", req.box_threshold},
              {"text_threshold", req.text_threshold}};
  return obj.dump();
}

std::string encode_response(const SegmentationResponse& resp) {
  json masks = json::array();
  for (const auto& m : resp.masks) {
    masks.push_back({{"class", m.class_name},
                     {"confidence", m.confidence},
                     {"instance_id", m.instance_id},
                     {"rle", m.rle}});
  }
  json obj = {{"proto_version", kProtoVersion},
              {"type", "segmentation_response"},
              {"image_id", resp.image_id},
              {"masks", std::move(masks)},
              {"server_time_ms", resp.server_time_ms}};
  if (!resp.warning.empty()) obj["warning"] = resp.warning;
  if (!resp.backend.empty()) obj["backend"] = resp.backend;
  return obj.dump();
}

std::string encode_error(std::string_view message) {
  json obj = {{"proto_version", kProtoVersion}, {"type", "error"}, {"message", std::string(message)}};
  return obj.dump();
}

SegmentationRequest decode_request(std::string_view text) {
  const json obj = parse_object(text, "segmentation_request");
  SegmentationRequest req;
  req.image_id = field<std::uint64_t>(obj, "image_id");
  req.width = field<int>(obj, "width");
  req.height = field<int>(obj, "height");
  const auto kind = field<std::string>(obj, "payload_kind");
  if (kind == "labels") {
    req.payload_kind = PayloadKind::labels;
  } else if (kind == "rgb") {
    req.payload_kind = PayloadKind::rgb;
  } else {
    throw ProtocolError("unknown payload_kind '" + kind + "'");
  }
  req.payload = base64_decode(field<std::string>(obj, "payload"));
  req.prompt = field<std::string>(obj, "prompt");
  req.box_threshold = field<double>(obj, "box_threshold");
  req.text_threshold = field<double>(obj, "text_threshold");
  req.validate();
  return req;
}

SegmentationResponse decode_response(std::string_view text) {
  const json obj = parse_object(text, "segmentation_response");
  SegmentationResponse resp;
  resp.image_id = field<std::uint64_t>(obj, "image_id");
  resp.server_time_ms = field<std::int64_t>(obj, "server_time_ms");
  resp.warning = obj.value("warning", std::string());
  resp.backend = obj.value("backend", std::string());
  const json& masks = require(obj, "masks");
  if (!masks.is_array()) throw ProtocolError("field 'masks' is not an array");
  for (const json& m : masks) {
    if (!m.is_object()) throw ProtocolError("mask entry is not an object");
    InstanceMask mask;
    mask.class_name = field<std::string>(m, "class");
    mask.confidence = field<double>(m, "confidence");
    mask.instance_id = field<std::int64_t>(m, "instance_id");
    mask.rle = field<std::vector<std::uint32_t>>(m, "rle");
    if (!(mask.confidence >= 0.0 && mask.confidence <= 1.0)) {
      throw ProtocolError("mask confidence outside [0,1]");
    }
    resp.masks.push_back(std::move(mask));
  }
  return resp;
}

std::string canonical_response(SegmentationResponse resp) {
  resp.server_time_ms = 0;
  return encode_response(resp);
}

std::string frame(std::string_view payload) {
  if (payload.size() > kMaxFrameBytes) throw ProtocolError("frame payload too large");
  const auto n = static_cast<std::uint32_t>(payload.size());
  std::string out;
  out.reserve(4 + payload.size());
  out.push_back(static_cast<char>((n >> 24) & 0xff));
  out.push_back(static_cast<char>((n >> 16) & 0xff));
  out.push_back(static_cast<char>((n >> 8) & 0xff));
  out.push_back(static_cast<char>(n & 0xff));
  out.append(payload);
  return out;
}

std::string unframe(std::string_view bytes) {
  if (bytes.size() < 4) throw TransportError(TransportFailure::malformed_frame, "frame shorter than its header");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint32_t n = (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) |
                          (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]};
  if (n > kMaxFrameBytes || bytes.size() != 4 + static_cast<std::size_t>(n)) {
    throw TransportError(TransportFailure::malformed_frame,
                         "length prefix " + std::to_string(n) + " does not match frame size");
  }
  return std::string(bytes.substr(4));
}

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  if (bytes.empty()) return out;
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) throw ProtocolError("base64 length is not a multiple of 4");
  std::vector<std::uint8_t> out(3 * (text.size() / 4));
  if (text.empty()) return out;
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                static_cast<int>(text.size()));
  if (n < 0) throw ProtocolError("invalid base64 payload");
  std::size_t padding = 0;
  if (text.back() == '=') ++padding;
  if (text.size() >= 2 && text[text.size() - 2] == '=') ++padding;
  out.resize(static_cast<std::size_t>(n) - padding);
  return out;
}

}  // namespace active_vision
