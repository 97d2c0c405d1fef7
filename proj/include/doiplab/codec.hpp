// Copyright 2026 The doiplab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// DoIP wire codec: the 8-octet generic header followed by one of the typed
// payloads. All multi-octet fields are big-endian.

#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

#include "doiplab/bytes.hpp"

namespace doiplab::codec {

inline constexpr std::size_t kHeaderSize = 8;

/// Protocol version octet values and the standard edition each denotes.
enum class ProtocolVersion : std::uint8_t {
  kIso13400_2010Dis = 0x01,
  kIso13400_2012 = 0x02,
  kIso13400_2019 = 0x03,
};

inline constexpr std::uint8_t kDefaultVersion = 0x03;

inline bool is_known_version(std::uint8_t v) { return v >= 0x01 && v <= 0x03; }

inline std::string_view edition_name(std::uint8_t version) {
  switch (version) {
    case 0x01: return "ISO/DIS 13400-2:2010";
    case 0x02: return "ISO 13400-2:2012";
    case 0x03: return "ISO 13400-2:2019";
    default: return "unknown";
  }
}

namespace payload_type {
inline constexpr std::uint16_t kGenericHeaderNack = 0x0000;
inline constexpr std::uint16_t kVehicleIdentificationRequest = 0x0001;
inline constexpr std::uint16_t kVehicleAnnouncement = 0x0004;
inline constexpr std::uint16_t kRoutingActivationRequest = 0x0005;
inline constexpr std::uint16_t kRoutingActivationResponse = 0x0006;
inline constexpr std::uint16_t kAliveCheckRequest = 0x0007;
inline constexpr std::uint16_t kAliveCheckResponse = 0x0008;
inline constexpr std::uint16_t kEntityStatusRequest = 0x4001;
inline constexpr std::uint16_t kEntityStatusResponse = 0x4002;
inline constexpr std::uint16_t kPowerModeRequest = 0x4003;
inline constexpr std::uint16_t kPowerModeResponse = 0x4004;
inline constexpr std::uint16_t kDiagnosticMessage = 0x8001;
inline constexpr std::uint16_t kDiagnosticAck = 0x8002;
inline constexpr std::uint16_t kDiagnosticNack = 0x8003;
}  // namespace payload_type

/// Generic header NACK codes, also used as the decode rejection vocabulary.
enum class HeaderNackCode : std::uint8_t {
  kIncorrectPattern = 0x00,
  kUnknownPayloadType = 0x01,
  kMessageTooLarge = 0x02,
  kOutOfMemory = 0x03,
  kInvalidPayloadLength = 0x04,
};

enum class SyncStatus : std::uint8_t { kSynchronized = 0x00, kIncomplete = 0x10 };
enum class PowerMode : std::uint8_t { kNotReady = 0x00, kReady = 0x01, kNotSupported = 0x02 };
enum class NodeType : std::uint8_t { kGateway = 0x00, kNode = 0x01 };

enum class ActivationCode : std::uint8_t {
  kUnknownSourceAddress = 0x00,
  kNoSocket = 0x01,
  kSourceAddressInUse = 0x02,
  kAuthentication = 0x04,
  kConsentRejected = 0x05,
  kSecureRequired = 0x06,
  kSuccess = 0x10,
  kConsentPending = 0x11,
};

namespace diag_code {
inline constexpr std::uint8_t kAck = 0x00;
inline constexpr std::uint8_t kInvalidSourceAddress = 0x02;
inline constexpr std::uint8_t kUnknownTargetAddress = 0x03;
inline constexpr std::uint8_t kMessageTooLarge = 0x04;
}  // namespace diag_code

using Vin = std::array<std::uint8_t, 17>;
using EntityId = std::array<std::uint8_t, 6>;

inline Vin make_vin(std::string_view s) {
  Vin v{};
  v.fill('0');
  for (std::size_t i = 0; i < v.size() && i < s.size(); ++i) v[i] = static_cast<std::uint8_t>(s[i]);
  return v;
}

inline std::string vin_string(const Vin& v) { return std::string(v.begin(), v.end()); }

struct GenericHeaderNack {
  HeaderNackCode code{};
  bool operator==(const GenericHeaderNack&) const = default;
};
struct VehicleIdentificationRequest {
  bool operator==(const VehicleIdentificationRequest&) const = default;
};
/// Shared by unsolicited announcements and identification responses.
struct VehicleAnnouncement {
  Vin vin{};
  std::uint16_t logical_address = 0;
  EntityId eid{};
  EntityId gid{};
  std::uint8_t further_action = 0;
  std::optional<SyncStatus> sync_status;
  bool operator==(const VehicleAnnouncement&) const = default;
};
/// `reserved` carries the OEM-specific authentication token when used.
struct RoutingActivationRequest {
  std::uint16_t source_address = 0;
  std::uint8_t activation_type = 0;
  std::uint32_t reserved = 0;
  bool operator==(const RoutingActivationRequest&) const = default;
};
struct RoutingActivationResponse {
  std::uint16_t tester_address = 0;
  std::uint16_t entity_address = 0;
  ActivationCode code{};
  std::uint32_t reserved = 0;
  bool operator==(const RoutingActivationResponse&) const = default;
};
struct AliveCheckRequest {
  bool operator==(const AliveCheckRequest&) const = default;
};
struct AliveCheckResponse {
  std::uint16_t source_address = 0;
  bool operator==(const AliveCheckResponse&) const = default;
};
struct PowerModeRequest {
  bool operator==(const PowerModeRequest&) const = default;
};
struct PowerModeResponse {
  PowerMode status{};
  bool operator==(const PowerModeResponse&) const = default;
};
struct EntityStatusRequest {
  bool operator==(const EntityStatusRequest&) const = default;
};
struct EntityStatusResponse {
  NodeType node_type{};
  std::uint8_t max_open_sockets = 0;
  std::uint8_t open_sockets = 0;
  std::uint32_t max_data_size = 0;
  bool operator==(const EntityStatusResponse&) const = default;
};
struct DiagnosticMessage {
  std::uint16_t source_address = 0;
  std::uint16_t target_address = 0;
  Bytes user_data;
  bool operator==(const DiagnosticMessage&) const = default;
};
struct DiagnosticAck {
  std::uint16_t source_address = 0;
  std::uint16_t target_address = 0;
  std::uint8_t ack_code = diag_code::kAck;
  bool operator==(const DiagnosticAck&) const = default;
};
struct DiagnosticNack {
  std::uint16_t source_address = 0;
  std::uint16_t target_address = 0;
  std::uint8_t nack_code = 0;
  bool operator==(const DiagnosticNack&) const = default;
};

using Payload =
    std::variant<GenericHeaderNack, VehicleIdentificationRequest, VehicleAnnouncement,
                 RoutingActivationRequest, RoutingActivationResponse, AliveCheckRequest,
                 AliveCheckResponse, PowerModeRequest, PowerModeResponse, EntityStatusRequest,
                 EntityStatusResponse, DiagnosticMessage, DiagnosticAck, DiagnosticNack>;

struct Message {
  std::uint8_t version = kDefaultVersion;
  Payload payload;
  bool operator==(const Message&) const = default;
};

/// The 8 header octets as fields. Holds arbitrary values so that corrupted
/// headers can be represented and re-serialized exactly.
struct Header {
  std::uint8_t protocol_version = kDefaultVersion;
  std::uint8_t inverse_version = static_cast<std::uint8_t>(~kDefaultVersion);
  std::uint16_t payload_type = 0;
  std::uint32_t payload_length = 0;

  std::array<std::uint8_t, kHeaderSize> octets() const {
    Bytes b;
    put_u8(b, protocol_version);
    put_u8(b, inverse_version);
    put_u16(b, payload_type);
    put_u32(b, payload_length);
    return get_array<kHeaderSize>(b, 0);
  }
  static Header from_octets(ByteView b) {
    return Header{b[0], b[1], get_u16(b, 2), get_u32(b, 4)};
  }
  bool operator==(const Header&) const = default;
};

inline std::uint16_t payload_type_of(const Payload& p) {
  struct {
    std::uint16_t operator()(const GenericHeaderNack&) const { return payload_type::kGenericHeaderNack; }
    std::uint16_t operator()(const VehicleIdentificationRequest&) const {
      return payload_type::kVehicleIdentificationRequest;
    }
    std::uint16_t operator()(const VehicleAnnouncement&) const { return payload_type::kVehicleAnnouncement; }
    std::uint16_t operator()(const RoutingActivationRequest&) const {
      return payload_type::kRoutingActivationRequest;
    }
    std::uint16_t operator()(const RoutingActivationResponse&) const {
      return payload_type::kRoutingActivationResponse;
    }
    std::uint16_t operator()(const AliveCheckRequest&) const { return payload_type::kAliveCheckRequest; }
    std::uint16_t operator()(const AliveCheckResponse&) const { return payload_type::kAliveCheckResponse; }
    std::uint16_t operator()(const PowerModeRequest&) const { return payload_type::kPowerModeRequest; }
    std::uint16_t operator()(const PowerModeResponse&) const { return payload_type::kPowerModeResponse; }
    std::uint16_t operator()(const EntityStatusRequest&) const { return payload_type::kEntityStatusRequest; }
    std::uint16_t operator()(const EntityStatusResponse&) const { return payload_type::kEntityStatusResponse; }
    std::uint16_t operator()(const DiagnosticMessage&) const { return payload_type::kDiagnosticMessage; }
    std::uint16_t operator()(const DiagnosticAck&) const { return payload_type::kDiagnosticAck; }
    std::uint16_t operator()(const DiagnosticNack&) const { return payload_type::kDiagnosticNack; }
  } visitor;
  return std::visit(visitor, p);
}

inline std::string_view payload_name(std::uint16_t type) {
  switch (type) {
    case payload_type::kGenericHeaderNack: return "GenericHeaderNack";
    case payload_type::kVehicleIdentificationRequest: return "VehicleIdentificationRequest";
    case payload_type::kVehicleAnnouncement: return "VehicleAnnouncement";
    case payload_type::kRoutingActivationRequest: return "RoutingActivationRequest";
    case payload_type::kRoutingActivationResponse: return "RoutingActivationResponse";
    case payload_type::kAliveCheckRequest: return "AliveCheckRequest";
    case payload_type::kAliveCheckResponse: return "AliveCheckResponse";
    case payload_type::kEntityStatusRequest: return "EntityStatusRequest";
    case payload_type::kEntityStatusResponse: return "EntityStatusResponse";
    case payload_type::kPowerModeRequest: return "PowerModeRequest";
    case payload_type::kPowerModeResponse: return "PowerModeResponse";
    case payload_type::kDiagnosticMessage: return "DiagnosticMessage";
    case payload_type::kDiagnosticAck: return "DiagnosticAck";
    case payload_type::kDiagnosticNack: return "DiagnosticNack";
    default: return "Unknown";
  }
}

enum class CodecErrc { kOversizedPayload, kUnknownKey };

class CodecError : public std::runtime_error {
 public:
  CodecError(CodecErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  CodecErrc code() const { return code_; }

 private:
  CodecErrc code_;
};

inline Bytes encode_payload(const Payload& p) {
  Bytes out;
  std::visit(
      [&out](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, GenericHeaderNack>) {
          put_u8(out, static_cast<std::uint8_t>(v.code));
        } else if constexpr (std::is_same_v<T, VehicleAnnouncement>) {
          put_array(out, v.vin);
          put_u16(out, v.logical_address);
          put_array(out, v.eid);
          put_array(out, v.gid);
          put_u8(out, v.further_action);
          if (v.sync_status) put_u8(out, static_cast<std::uint8_t>(*v.sync_status));
        } else if constexpr (std::is_same_v<T, RoutingActivationRequest>) {
          put_u16(out, v.source_address);
          put_u8(out, v.activation_type);
          put_u32(out, v.reserved);
        } else if constexpr (std::is_same_v<T, RoutingActivationResponse>) {
          put_u16(out, v.tester_address);
          put_u16(out, v.entity_address);
          put_u8(out, static_cast<std::uint8_t>(v.code));
          put_u32(out, v.reserved);
        } else if constexpr (std::is_same_v<T, AliveCheckResponse>) {
          put_u16(out, v.source_address);
        } else if constexpr (std::is_same_v<T, PowerModeResponse>) {
          put_u8(out, static_cast<std::uint8_t>(v.status));
        } else if constexpr (std::is_same_v<T, EntityStatusResponse>) {
          put_u8(out, static_cast<std::uint8_t>(v.node_type));
          put_u8(out, v.max_open_sockets);
          put_u8(out, v.open_sockets);
          put_u32(out, v.max_data_size);
        } else if constexpr (std::is_same_v<T, DiagnosticMessage>) {
          put_u16(out, v.source_address);
          put_u16(out, v.target_address);
          out.insert(out.end(), v.user_data.begin(), v.user_data.end());
        } else if constexpr (std::is_same_v<T, DiagnosticAck>) {
          put_u16(out, v.source_address);
          put_u16(out, v.target_address);
          put_u8(out, v.ack_code);
        } else if constexpr (std::is_same_v<T, DiagnosticNack>) {
          put_u16(out, v.source_address);
          put_u16(out, v.target_address);
          put_u8(out, v.nack_code);
        }
        // The remaining variants have empty bodies.
      },
      p);
  return out;
}

inline Header header_for(const Message& m, std::size_t payload_size) {
  if (payload_size > std::numeric_limits<std::uint32_t>::max()) {
    throw CodecError(CodecErrc::kOversizedPayload, "payload exceeds 2^32-1 octets");
  }
  return Header{m.version, static_cast<std::uint8_t>(~m.version), payload_type_of(m.payload),
                static_cast<std::uint32_t>(payload_size)};
}

inline Bytes encode(const Message& m) {
  const Bytes body = encode_payload(m.payload);
  const Header h = header_for(m, body.size());
  Bytes out;
  out.reserve(kHeaderSize + body.size());
  put_array(out, h.octets());
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

struct DecodeLimits {
  std::optional<std::uint32_t> max_payload_length;
};

struct DecodeError {
  HeaderNackCode code{};
  std::string detail;
};

using DecodeResult = Expected<Message, DecodeError>;

/// The header handler's version-integrity rule: inverse octet must be the
/// complement of a known version. Covers octets 0 and 1 only.
inline bool header_pattern_ok(ByteView wire) {
  if (wire.size() < 2) return false;
  return is_known_version(wire[0]) && wire[1] == static_cast<std::uint8_t>(~wire[0]);
}

/// Fixed body size per payload type, or nullopt for variable/unknown.
inline std::optional<std::size_t> fixed_body_size(std::uint16_t type) {
  switch (type) {
    case payload_type::kGenericHeaderNack: return 1;
    case payload_type::kVehicleIdentificationRequest:
    case payload_type::kAliveCheckRequest:
    case payload_type::kPowerModeRequest:
    case payload_type::kEntityStatusRequest: return 0;
    case payload_type::kRoutingActivationRequest: return 7;
    case payload_type::kRoutingActivationResponse: return 9;
    case payload_type::kAliveCheckResponse: return 2;
    case payload_type::kPowerModeResponse: return 1;
    case payload_type::kEntityStatusResponse: return 7;
    case payload_type::kDiagnosticAck:
    case payload_type::kDiagnosticNack: return 5;
    default: return std::nullopt;
  }
}

inline bool is_known_payload_type(std::uint16_t type) {
  return payload_name(type) != "Unknown";
}

inline Expected<Payload, DecodeError> decode_payload(std::uint8_t version, std::uint16_t type,
                                                     ByteView body) {
  auto bad_length = [&] {
    return DecodeError{HeaderNackCode::kInvalidPayloadLength,
                       std::string(payload_name(type)) + ": body length " + std::to_string(body.size())};
  };
  if (auto fixed = fixed_body_size(type); fixed && *fixed != body.size()) return bad_length();

  switch (type) {
    case payload_type::kGenericHeaderNack:
      return Payload{GenericHeaderNack{static_cast<HeaderNackCode>(body[0])}};
    case payload_type::kVehicleIdentificationRequest: return Payload{VehicleIdentificationRequest{}};
    case payload_type::kVehicleAnnouncement: {
      // Version 3 always carries the sync status octet.
      const bool with_sync = body.size() == 33;
      if (!(with_sync || (body.size() == 32 && version < 0x03))) return bad_length();
      VehicleAnnouncement a;
      a.vin = get_array<17>(body, 0);
      a.logical_address = get_u16(body, 17);
      a.eid = get_array<6>(body, 19);
      a.gid = get_array<6>(body, 25);
      a.further_action = body[31];
      if (with_sync) a.sync_status = static_cast<SyncStatus>(body[32]);
      return Payload{a};
    }
    case payload_type::kRoutingActivationRequest:
      return Payload{RoutingActivationRequest{get_u16(body, 0), body[2], get_u32(body, 3)}};
    case payload_type::kRoutingActivationResponse:
      return Payload{RoutingActivationResponse{get_u16(body, 0), get_u16(body, 2),
                                               static_cast<ActivationCode>(body[4]), get_u32(body, 5)}};
    case payload_type::kAliveCheckRequest: return Payload{AliveCheckRequest{}};
    case payload_type::kAliveCheckResponse: return Payload{AliveCheckResponse{get_u16(body, 0)}};
    case payload_type::kPowerModeRequest: return Payload{PowerModeRequest{}};
    case payload_type::kPowerModeResponse: return Payload{PowerModeResponse{static_cast<PowerMode>(body[0])}};
    case payload_type::kEntityStatusRequest: return Payload{EntityStatusRequest{}};
    case payload_type::kEntityStatusResponse:
      return Payload{EntityStatusResponse{static_cast<NodeType>(body[0]), body[1], body[2], get_u32(body, 3)}};
    case payload_type::kDiagnosticMessage: {
      if (body.size() < 4) return bad_length();
      return Payload{DiagnosticMessage{get_u16(body, 0), get_u16(body, 2), Bytes(body.begin() + 4, body.end())}};
    }
    case payload_type::kDiagnosticAck:
      return Payload{DiagnosticAck{get_u16(body, 0), get_u16(body, 2), body[4]}};
    case payload_type::kDiagnosticNack:
      return Payload{DiagnosticNack{get_u16(body, 0), get_u16(body, 2), body[4]}};
    default:
      return DecodeError{HeaderNackCode::kUnknownPayloadType, "payload type " + hex16(type)};
  }
}

/// Validates and decodes one complete message. The order of checks follows
/// the generic header handler: pattern, payload type, size limit, length.
inline DecodeResult decode(ByteView wire, const DecodeLimits& limits = {}) {
  if (wire.size() < kHeaderSize) {
    return DecodeError{HeaderNackCode::kInvalidPayloadLength, "truncated header"};
  }
  if (!header_pattern_ok(wire)) {
    return DecodeError{HeaderNackCode::kIncorrectPattern, "version/inverse mismatch"};
  }
  const Header h = Header::from_octets(wire);
  if (!is_known_payload_type(h.payload_type)) {
    return DecodeError{HeaderNackCode::kUnknownPayloadType, "payload type " + hex16(h.payload_type)};
  }
  if (limits.max_payload_length && h.payload_length > *limits.max_payload_length) {
    return DecodeError{HeaderNackCode::kMessageTooLarge,
                       "declared length " + std::to_string(h.payload_length)};
  }
  if (h.payload_length != wire.size() - kHeaderSize) {
    return DecodeError{HeaderNackCode::kInvalidPayloadLength, "declared length differs from remaining octets"};
  }
  auto payload = decode_payload(h.protocol_version, h.payload_type, wire.subspan(kHeaderSize));
  if (!payload) return payload.error();
  return Message{h.protocol_version, *payload};
}

inline Message make(Payload p, std::uint8_t version = kDefaultVersion) { return Message{version, std::move(p)}; }

}  // namespace doiplab::codec
