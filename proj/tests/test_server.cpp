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


#include <gtest/gtest.h>

#include "doiplab/server.hpp"

namespace doiplab {
namespace {

using namespace codec;

class ServerHarness {
 public:
  explicit ServerHarness(ServerConfig c = {}) : server(std::move(c)) {}

  Context ctx() { return Context{now, rng}; }

  ConnectionId open(std::uint32_t n, bool secure = false, std::optional<std::string> identity = {}) {
    Connection c{ConnectionId{n}, Endpoint::unicast("tester"), server.endpoint(), secure, std::move(identity)};
    auto cx = ctx();
    server.on_connection_opened(cx, c);
    return c.id;
  }

  Effects send(ConnectionId id, const Payload& p) { return send_wire(id, encode(make(p))); }

  Effects send_wire(ConnectionId id, Bytes wire) {
    Frame f;
    f.id = ++next_frame;
    f.channel = Channel::kStream;
    f.claimed_source = Endpoint::unicast("tester");
    f.destination = server.endpoint();
    f.connection = id;
    f.wire = std::move(wire);
    f.true_origin = f.claimed_source;
    auto cx = ctx();
    return server.on_stream(cx, f);
  }

  Effects tick() {
    auto cx = ctx();
    return server.tick(cx);
  }

  Server server;
  Rng rng{7};
  SimTime now{0};
  FrameId next_frame = 0;
};

template <class T>
T only(const Effects& fx) {
  EXPECT_EQ(fx.frames.size(), 1u);
  if (fx.frames.empty()) return T{};
  auto m = decode(fx.frames.front().wire);
  EXPECT_TRUE(m);
  const T* p = m ? std::get_if<T>(&m->payload) : nullptr;
  EXPECT_NE(p, nullptr) << "unexpected payload";
  return p != nullptr ? *p : T{};
}

bool has_event(const Effects& fx, EventKind k) {
  return std::any_of(fx.events.begin(), fx.events.end(), [k](const TraceEvent& e) { return e.kind == k; });
}

RoutingActivationRequest activation(std::uint16_t sa = 0x0E80, std::uint32_t credential = 0) {
  return RoutingActivationRequest{sa, 0x00, credential};
}

Frame identification_request(Endpoint from) {
  Frame f;
  f.id = 1;
  f.channel = from.group ? Channel::kDatagramBroadcast : Channel::kDatagramUnicast;
  f.claimed_source = from;
  f.destination = Endpoint::broadcast();
  f.wire = encode(make(VehicleIdentificationRequest{}));
  f.true_origin = Endpoint::unicast("tester");
  return f;
}

TEST(ServerDatagram, MulticastSourceGetsNoAnswer) {
  ServerHarness h;
  auto cx = h.ctx();
  const Effects fx = h.server.on_datagram(cx, identification_request(Endpoint::broadcast()));
  EXPECT_TRUE(fx.frames.empty());
  EXPECT_TRUE(fx.events.empty());
}

TEST(ServerDatagram, ZeroJitterAnswersSameTick) {
  ServerConfig c;
  c.timers.response_jitter_max = 0ms;
  ServerHarness h(c);
  auto cx = h.ctx();
  const Effects fx = h.server.on_datagram(cx, identification_request(Endpoint::unicast("tester")));
  ASSERT_EQ(fx.frames.size(), 1u);
  EXPECT_EQ(fx.frames[0].delay, 0ms);
  EXPECT_EQ(fx.frames[0].destination, Endpoint::unicast("tester"));
  EXPECT_EQ(fx.frames[0].channel, Channel::kDatagramUnicast);
  const auto a = only<VehicleAnnouncement>(fx);
  EXPECT_EQ(a.vin, c.vin);
  EXPECT_EQ(a.eid, c.eid);
  EXPECT_EQ(a.gid, c.gid);
  EXPECT_EQ(a.logical_address, c.logical_address);
}

TEST(ServerDatagram, JitterBounded) {
  ServerHarness h;
  for (int i = 0; i < 200; ++i) {
    auto cx = h.ctx();
    const Effects fx = h.server.on_datagram(cx, identification_request(Endpoint::unicast("tester")));
    ASSERT_EQ(fx.frames.size(), 1u);
    EXPECT_LE(fx.frames[0].delay, 500ms);
    EXPECT_GE(fx.frames[0].delay, 0ms);
  }
}

TEST(ServerDatagram, SignedAnnouncementsCarryTrailer) {
  ServerConfig c;
  c.sign_datagrams = true;
  ServerHarness h(c);
  const auto key = SigningKey::derive("vehicle", 3);
  TrustStore trust;
  trust.add(key);
  h.server.set_signing(key, trust);
  auto cx = h.ctx();
  const Effects fx = h.server.announce(cx);
  ASSERT_FALSE(fx.frames.empty());
  auto split = split_signed(fx.frames[0].wire);
  ASSERT_TRUE(split && split->signature);
  EXPECT_FALSE(verify_header(*split->signature, trust).has_value());
}

TEST(ServerAnnounce, ThreeByDefault) {
  ServerHarness h;
  auto cx = h.ctx();
  const Effects fx = h.server.on_start(cx);
  ASSERT_EQ(fx.frames.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(fx.frames[i].channel, Channel::kDatagramBroadcast);
    EXPECT_EQ(fx.frames[i].delay, 500ms * static_cast<int>(i));
  }
}

TEST(ServerAnnounce, ZeroCountIsFlagged) {
  ServerConfig c;
  c.announce_count = 0;
  ServerHarness h(c);
  auto cx = h.ctx();
  EXPECT_TRUE(h.server.announce(cx).frames.empty());
  EXPECT_FALSE(conformance_issues(c).empty());
}

TEST(ServerStream, DiagnosticBeforeActivationIgnored) {
  ServerHarness h;
  const auto id = h.open(1);
  const Effects fx = h.send(id, DiagnosticMessage{0x0E80, 0x1010, Bytes{0x3E, 0x00}});
  EXPECT_TRUE(fx.frames.empty());
  EXPECT_TRUE(fx.events.empty());
  EXPECT_TRUE(fx.close.empty());
}

TEST(ServerStream, ActivationSucceedsAndArmsGeneralTimer) {
  ServerHarness h;
  const auto id = h.open(1);
  h.now = 100ms;
  const Effects fx = h.send(id, activation());
  const auto res = only<RoutingActivationResponse>(fx);
  EXPECT_EQ(res.code, ActivationCode::kSuccess);
  EXPECT_EQ(res.tester_address, 0x0E80);
  EXPECT_EQ(res.entity_address, 0x1001);
  const SocketSlot& slot = h.server.slots().at(id);
  EXPECT_TRUE(slot.routing_active);
  EXPECT_FALSE(slot.initial_inactivity_deadline);
  ASSERT_TRUE(slot.general_inactivity_deadline);
  EXPECT_EQ(*slot.general_inactivity_deadline, 100ms + 300s);
  EXPECT_TRUE(has_event(fx, EventKind::kAuthentic));
}

TEST(ServerStream, OversizedDeclaredLength) {
  ServerConfig c;
  c.max_data_size = 64;
  ServerHarness h(c);
  const auto id = h.open(1);
  h.send(id, activation());

  // 4 address octets + 60 data octets is exactly at the limit.
  const Effects at_limit = h.send(id, DiagnosticMessage{0x0E80, 0x1010, Bytes(60, 0x36)});
  EXPECT_EQ(only<DiagnosticAck>(at_limit).ack_code, diag_code::kAck);

  const Effects over = h.send(id, DiagnosticMessage{0x0E80, 0x1010, Bytes(61, 0x36)});
  EXPECT_EQ(only<GenericHeaderNack>(over).code, HeaderNackCode::kMessageTooLarge);
  ASSERT_EQ(over.close.size(), 1u);
  EXPECT_EQ(over.close[0], id);
  EXPECT_FALSE(h.server.slots().count(id));
}

TEST(ServerStream, UnknownPayloadTypeKeepsSocket) {
  ServerHarness h;
  const auto id = h.open(1);
  const Effects fx = h.send_wire(id, Bytes{0x03, 0xFC, 0x12, 0x34, 0, 0, 0, 0});
  EXPECT_EQ(only<GenericHeaderNack>(fx).code, HeaderNackCode::kUnknownPayloadType);
  EXPECT_TRUE(fx.close.empty());
}

TEST(ServerActivation, UnknownSourceAddressLeaksInSaFirst) {
  ServerConfig c;
  c.requires_authentication = true;
  c.allowed_credentials = {0x5A17C0DE};
  ServerHarness h(c);
  const Effects unknown = h.send(h.open(1), activation(0x0E99));
  EXPECT_EQ(only<RoutingActivationResponse>(unknown).code, ActivationCode::kUnknownSourceAddress);
  EXPECT_EQ(unknown.close.size(), 1u);
  const Effects known = h.send(h.open(2), activation(0x0E80));
  EXPECT_EQ(only<RoutingActivationResponse>(known).code, ActivationCode::kAuthentication);
}

TEST(ServerActivation, AuthFirstAnswersAlike) {
  ServerConfig c;
  c.requires_authentication = true;
  c.allowed_credentials = {0x5A17C0DE};
  c.handler_order = HandlerOrder::kAuthenticationFirst;
  ServerHarness h(c);
  const Effects unknown = h.send(h.open(1), activation(0x0E99));
  const Effects known = h.send(h.open(2), activation(0x0E80));
  EXPECT_EQ(only<RoutingActivationResponse>(unknown).code, ActivationCode::kAuthentication);
  EXPECT_EQ(only<RoutingActivationResponse>(known).code, ActivationCode::kAuthentication);
  // Identical apart from the echoed source address.
  EXPECT_EQ(Bytes(unknown.frames[0].wire.begin() + 10, unknown.frames[0].wire.end()),
            Bytes(known.frames[0].wire.begin() + 10, known.frames[0].wire.end()));
}

TEST(ServerActivation, TokenAccepted) {
  ServerConfig c;
  c.requires_authentication = true;
  c.allowed_credentials = {0x5A17C0DE};
  ServerHarness h(c);
  const Effects fx = h.send(h.open(1), activation(0x0E80, 0x5A17C0DE));
  EXPECT_EQ(only<RoutingActivationResponse>(fx).code, ActivationCode::kSuccess);
}

TEST(ServerActivation, ChannelIdentity) {
  ServerConfig c;
  c.requires_authentication = true;
  c.auth_source = AuthSource::kChannelIdentity;
  c.allowed_identities = {"tester"};
  ServerHarness good(c);
  EXPECT_EQ(only<RoutingActivationResponse>(good.send(good.open(1, true, "tester"), activation())).code,
            ActivationCode::kSuccess);
  ServerHarness bad(c);
  EXPECT_EQ(only<RoutingActivationResponse>(bad.send(bad.open(1, true, "mallory"), activation())).code,
            ActivationCode::kAuthentication);
  ServerHarness anonymous(c);
  EXPECT_EQ(only<RoutingActivationResponse>(anonymous.send(anonymous.open(1, true), activation())).code,
            ActivationCode::kAuthentication);
}

TEST(ServerActivation, SecureRequired) {
  ServerConfig c;
  c.requires_secure = true;
  ServerHarness h(c);
  const Effects fx = h.send(h.open(1), activation());
  EXPECT_EQ(only<RoutingActivationResponse>(fx).code, ActivationCode::kSecureRequired);
  EXPECT_EQ(fx.close.size(), 1u);
  EXPECT_EQ(only<RoutingActivationResponse>(h.send(h.open(2, true), activation())).code, ActivationCode::kSuccess);
}

TEST(ServerActivation, SecureCheckPositionChangesAnswer) {
  // A plain request for a secure-only activation type from an unknown SA.
  RoutingActivationRequest req{0x0E99, 0xE0, 0};
  ServerConfig after;
  ServerHarness a(after);
  EXPECT_EQ(only<RoutingActivationResponse>(a.send(a.open(1), req)).code, ActivationCode::kUnknownSourceAddress);
  ServerConfig before;
  before.secure_check = SecureCheckPosition::kBeforeSourceAddress;
  ServerHarness b(before);
  EXPECT_EQ(only<RoutingActivationResponse>(b.send(b.open(1), req)).code, ActivationCode::kSecureRequired);
}

TEST(ServerActivation, SourceAddressInUse) {
  ServerHarness h;
  h.send(h.open(1), activation());
  const auto second = h.open(2);
  const Effects fx = h.send(second, activation());
  EXPECT_EQ(only<RoutingActivationResponse>(fx).code, ActivationCode::kSourceAddressInUse);
  EXPECT_FALSE(h.server.slots().count(second));
}

TEST(ServerActivation, ClientCertificateRequired) {
  ServerConfig c;
  c.requires_client_certificate = true;
  Server s(c);
  EXPECT_FALSE(s.accepts(Connection{ConnectionId{1}, Endpoint::unicast("x"), s.endpoint(), true, std::nullopt}));
  EXPECT_TRUE(s.accepts(Connection{ConnectionId{1}, Endpoint::unicast("x"), s.endpoint(), true, "tester"}));
}

TEST(ServerDiagnostic, KnownAndUnknownTarget) {
  ServerHarness h;
  const auto id = h.open(1);
  h.send(id, activation());
  const Effects ack = h.send(id, DiagnosticMessage{0x0E80, 0x1010, Bytes{0x22, 0xF1, 0x90}});
  EXPECT_EQ(only<DiagnosticAck>(ack).ack_code, diag_code::kAck);
  EXPECT_TRUE(has_event(ack, EventKind::kSecret));
  EXPECT_TRUE(has_event(ack, EventKind::kDelivered));

  const Effects nack = h.send(id, DiagnosticMessage{0x0E80, 0x1234, Bytes{0x3E, 0x00}});
  EXPECT_EQ(only<DiagnosticNack>(nack).nack_code, diag_code::kUnknownTargetAddress);
  EXPECT_FALSE(has_event(nack, EventKind::kSecret));
  EXPECT_TRUE(nack.close.empty());
}

TEST(ServerDiagnostic, SourceAddressMismatchClosesSocket) {
  ServerHarness h;
  const auto id = h.open(1);
  h.send(id, activation());
  const Effects fx = h.send(id, DiagnosticMessage{0x0E81, 0x1010, Bytes{0x3E, 0x00}});
  EXPECT_EQ(only<DiagnosticNack>(fx).nack_code, diag_code::kInvalidSourceAddress);
  ASSERT_EQ(fx.close.size(), 1u);
  EXPECT_FALSE(h.server.slots().count(id));
  EXPECT_TRUE(has_event(fx, EventKind::kSlotClosed));
}

class AliveCheck : public ::testing::Test {
 protected:
  AliveCheck() : h(single_socket()) {
    first = h.open(1);
    h.send(first, activation(0x0E80));
    second = h.open(2);
    h.now = 1s;
    probe = h.send(second, activation(0x0E81));
  }
  static ServerConfig single_socket() {
    ServerConfig c;
    c.max_open_sockets = 1;
    c.known_source_addresses = {0x0E80, 0x0E81};
    return c;
  }
  ServerHarness h;
  ConnectionId first{}, second{};
  Effects probe;
};

TEST_F(AliveCheck, FullSocketTableProbesActiveSlot) {
  ASSERT_EQ(probe.frames.size(), 1u);
  EXPECT_EQ(probe.frames[0].connection, first);
  EXPECT_TRUE(std::holds_alternative<AliveCheckRequest>(decode(probe.frames[0].wire)->payload));
  EXPECT_EQ(h.server.next_deadline(), 1s + 500ms);
}

TEST_F(AliveCheck, AnswerKeepsSlotAndRefusesNewcomer) {
  h.now = 1200ms;
  h.send(first, AliveCheckResponse{0x0E80});
  EXPECT_FALSE(h.server.slots().at(first).alive_check_deadline);
  h.now = 1500ms;
  const Effects fx = h.tick();
  EXPECT_TRUE(h.server.slots().count(first));
  EXPECT_EQ(only<RoutingActivationResponse>(fx).code, ActivationCode::kNoSocket);
  EXPECT_FALSE(h.server.slots().count(second));
}

TEST_F(AliveCheck, SilenceFreesSlotForNewcomer) {
  h.now = 1500ms;
  const Effects fx = h.tick();
  EXPECT_FALSE(h.server.slots().count(first));
  ASSERT_TRUE(h.server.slots().count(second));
  EXPECT_TRUE(h.server.slots().at(second).routing_active);
  ASSERT_EQ(fx.events.front().kind, EventKind::kSlotClosed);
  EXPECT_EQ(fx.events.front().value, "alive_check_timeout");
}

TEST_F(AliveCheck, ResponseWithWrongAddressIgnored) {
  h.now = 1200ms;
  h.send(first, AliveCheckResponse{0x0E81});
  EXPECT_TRUE(h.server.slots().at(first).alive_check_deadline);
}

TEST(ServerInfo, PowerMode) {
  for (auto mode : {PowerMode::kReady, PowerMode::kNotReady, PowerMode::kNotSupported}) {
    ServerConfig c;
    c.power_mode = mode;
    ServerHarness h(c);
    const auto id = h.open(1);
    h.send(id, activation());
    EXPECT_EQ(only<PowerModeResponse>(h.send(id, PowerModeRequest{})).status, mode);
  }
}

TEST(ServerInfo, EntityStatusCountsOpenSockets) {
  ServerConfig c;
  c.max_open_sockets = 3;
  c.max_data_size = 1234;
  ServerHarness h(c);
  const auto id = h.open(1);
  h.open(2);
  h.send(id, activation());
  const auto st = only<EntityStatusResponse>(h.send(id, EntityStatusRequest{}));
  EXPECT_EQ(st.node_type, NodeType::kGateway);
  EXPECT_EQ(st.max_open_sockets, 3);
  EXPECT_EQ(st.open_sockets, 2);
  EXPECT_EQ(st.max_data_size, 1234u);
}

TEST(ServerTimers, InitialInactivityClosesIdleSocket) {
  ServerHarness h;
  const auto id = h.open(1);
  EXPECT_EQ(h.server.next_deadline(), 2s);
  h.now = 1999ms;
  EXPECT_TRUE(h.tick().close.empty());
  h.now = 2s;
  const Effects fx = h.tick();
  ASSERT_EQ(fx.close.size(), 1u);
  EXPECT_EQ(fx.events.front().value, "initial_inactivity");
  EXPECT_FALSE(h.server.slots().count(id));
}

TEST(ServerTimers, ActivationStopsInitialTimer) {
  ServerHarness h;
  const auto id = h.open(1);
  h.now = 1s;
  h.send(id, activation());
  h.now = 2s;
  EXPECT_TRUE(h.tick().close.empty());
  EXPECT_EQ(h.server.next_deadline(), 1s + 300s);
  std::vector<std::string> issues;
  h.server.check_invariants(issues);
  EXPECT_TRUE(issues.empty());
}

TEST(ServerTimers, TrafficRearmsGeneralTimer) {
  ServerHarness h;
  const auto id = h.open(1);
  h.send(id, activation());
  h.now = 10s;
  h.send(id, AliveCheckResponse{0x0E80});
  EXPECT_EQ(h.server.slots().at(id).general_inactivity_deadline, 10s + 300s);
}

}  // namespace
}  // namespace doiplab
