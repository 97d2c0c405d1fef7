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

// Vehicle-side DoIP entity: announcements, identification responses, socket
// handling with both inactivity timers, the routing activation handler and
// the diagnostic-phase handlers.

#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "doiplab/codec.hpp"
#include "doiplab/config.hpp"
#include "doiplab/node.hpp"
#include "doiplab/signature.hpp"

namespace doiplab {

enum class ConsentDecision { kGranted, kDenied, kPending };

struct SocketSlot {
  int number = 0;
  ConnectionId connection{};
  Endpoint peer;
  bool channel_secure = false;
  std::optional<std::string> peer_identity;
  std::optional<std::uint16_t> registered_source_address;
  bool routing_active = false;
  bool authenticated = false;
  std::optional<SimTime> initial_inactivity_deadline;
  std::optional<SimTime> general_inactivity_deadline;
  std::optional<SimTime> alive_check_deadline;
};

class Server : public Node {
 public:
  explicit Server(ServerConfig config) : config_(std::move(config)), endpoint_(Endpoint::unicast(config_.name)) {}

  /// Enables signed datagrams. `trust` must bind the key's id.
  void set_signing(codec::SigningKey key, codec::TrustStore trust) {
    signing_key_ = std::move(key);
    trust_ = std::move(trust);
  }
  void set_consent_oracle(std::function<ConsentDecision(std::uint16_t)> oracle) { consent_ = std::move(oracle); }
  void set_sync_status(codec::SyncStatus s) { config_.sync_status = s; }
  void set_power_mode(codec::PowerMode m) { config_.power_mode = m; }

  const ServerConfig& config() const { return config_; }
  const std::map<ConnectionId, SocketSlot>& slots() const { return slots_; }
  const Endpoint& endpoint() const override { return endpoint_; }

  std::size_t active_registrations() const {
    return static_cast<std::size_t>(
        std::count_if(slots_.begin(), slots_.end(), [](const auto& kv) { return kv.second.routing_active; }));
  }

  Effects on_start(Context& ctx) override { return announce(ctx); }

  /// Schedules `announce_count` broadcast announcements, `announce_interval` apart.
  Effects announce(Context&) {
    Effects fx;
    for (int i = 0; i < config_.announce_count; ++i) {
      fx.frames.push_back(Outgoing{Channel::kDatagramBroadcast, Endpoint::broadcast(), std::nullopt,
                                   datagram_wire(announcement()), config_.timers.announce_interval * i});
    }
    return fx;
  }

  codec::VehicleAnnouncement announcement() const {
    return codec::VehicleAnnouncement{config_.vin, config_.logical_address, config_.eid, config_.gid,
                                      config_.further_action, config_.sync_status};
  }

  Effects on_datagram(Context& ctx, const Frame& frame) override {
    Effects fx;
    if (frame.claimed_source.group) return fx;
    auto split = codec::split_signed(frame.wire);
    if (!split) return fx;
    auto decoded = codec::decode(split->message);
    if (!decoded) return fx;
    if (!std::holds_alternative<codec::VehicleIdentificationRequest>(decoded->payload)) return fx;
    fx.events.push_back(authentic_event(ctx, frame, endpoint_.name, codec::payload_type::kVehicleIdentificationRequest));
    fx.frames.push_back(Outgoing{Channel::kDatagramUnicast, frame.claimed_source, std::nullopt,
                                 datagram_wire(announcement()), ctx.rng.duration_upto(config_.timers.response_jitter_max)});
    return fx;
  }

  bool accepts(const Connection& c) const override {
    if (config_.requires_client_certificate && c.secure && !c.client_identity) return false;
    return open_slot_count() < static_cast<std::size_t>(config_.max_open_sockets) + 1;
  }

  Effects on_connection_opened(Context& ctx, const Connection& c) override {
    SocketSlot slot;
    slot.number = next_slot_number_++;
    slot.connection = c.id;
    slot.peer = c.client;
    slot.channel_secure = c.secure;
    slot.peer_identity = c.client_identity;
    slot.initial_inactivity_deadline = ctx.now + config_.timers.initial_inactivity;
    slots_.emplace(c.id, slot);
    return {};
  }

  Effects on_connection_closed(Context& ctx, ConnectionId id) override {
    Effects fx;
    if (auto it = slots_.find(id); it != slots_.end()) {
      fx.events.push_back(slot_closed_event(ctx, it->second, "peer_closed"));
      slots_.erase(it);
    }
    return fx;
  }

  Effects on_stream(Context& ctx, const Frame& frame) override {
    Effects fx;
    auto it = slots_.find(*frame.connection);
    if (it == slots_.end()) return fx;
    SocketSlot& slot = it->second;

    auto decoded = codec::decode(frame.wire, codec::DecodeLimits{config_.max_data_size});
    if (!decoded) {
      const auto code = decoded.error().code;
      reply(fx, slot, codec::GenericHeaderNack{code});
      if (code != codec::HeaderNackCode::kUnknownPayloadType) close_slot(ctx, fx, slot, "header_nack");
      return fx;
    }
    return on_stream_message(ctx, slot, frame, *decoded);
  }

  /// Dispatch of a decoded stream message on an open slot.
  Effects on_stream_message(Context& ctx, SocketSlot& slot, const Frame& frame, const codec::Message& msg) {
    Effects fx;
    if (std::holds_alternative<codec::GenericHeaderNack>(msg.payload)) return fx;
    if (const auto* req = std::get_if<codec::RoutingActivationRequest>(&msg.payload)) {
      return handle_routing_activation(ctx, slot, frame, *req);
    }
    // Before activation everything except the activation request is ignored.
    if (!slot.routing_active) return fx;
    slot.general_inactivity_deadline = ctx.now + config_.timers.general_inactivity;

    if (const auto* diag = std::get_if<codec::DiagnosticMessage>(&msg.payload)) {
      return handle_diagnostic(ctx, slot, frame, *diag);
    }
    if (const auto* alive = std::get_if<codec::AliveCheckResponse>(&msg.payload)) {
      if (alive->source_address == slot.registered_source_address) {
        slot.alive_check_deadline.reset();
        fx.events.push_back(authentic_event(ctx, frame, endpoint_.name, codec::payload_type::kAliveCheckResponse));
      }
      return fx;
    }
    if (std::holds_alternative<codec::PowerModeRequest>(msg.payload)) {
      fx.events.push_back(authentic_event(ctx, frame, endpoint_.name, codec::payload_type::kPowerModeRequest));
      reply(fx, slot, handle_power_mode());
      return fx;
    }
    if (std::holds_alternative<codec::EntityStatusRequest>(msg.payload)) {
      fx.events.push_back(authentic_event(ctx, frame, endpoint_.name, codec::payload_type::kEntityStatusRequest));
      reply(fx, slot, handle_entity_status());
      return fx;
    }
    return fx;
  }

  Effects handle_routing_activation(Context& ctx, SocketSlot& slot, const Frame& frame,
                                    const codec::RoutingActivationRequest& req) {
    Effects fx;
    const bool auth_first = config_.handler_order == HandlerOrder::kAuthenticationFirst;
    if (auth_first && !authentication_ok(slot, req)) {
      respond_activation(ctx, fx, slot, req, codec::ActivationCode::kAuthentication, false);
      return fx;
    }
    if (config_.secure_check == SecureCheckPosition::kBeforeSourceAddress && secure_missing(slot, req)) {
      respond_activation(ctx, fx, slot, req, codec::ActivationCode::kSecureRequired, true);
      return fx;
    }
    if (!config_.known_source_addresses.count(req.source_address)) {
      respond_activation(ctx, fx, slot, req, codec::ActivationCode::kUnknownSourceAddress, true);
      return fx;
    }
    for (const auto& [id, other] : slots_) {
      if (id != slot.connection && other.registered_source_address == req.source_address) {
        respond_activation(ctx, fx, slot, req, codec::ActivationCode::kSourceAddressInUse, true);
        return fx;
      }
    }
    if (!slot.routing_active && active_registrations() >= config_.max_open_sockets) {
      // Probe every active socket and decide once the alive check deadline passed.
      for (auto& [id, other] : slots_) {
        if (other.routing_active && !other.alive_check_deadline) probe(ctx, fx, other);
      }
      pending_.push_back(PendingActivation{slot.connection, frame, req, ctx.now + config_.timers.alive_check_deadline});
      return fx;
    }
    fx.append(finish_activation(ctx, slot, frame, req));
    return fx;
  }

  Effects handle_diagnostic(Context& ctx, SocketSlot& slot, const Frame& frame, const codec::DiagnosticMessage& m) {
    Effects fx;
    if (m.source_address != slot.registered_source_address) {
      reply(fx, slot, codec::DiagnosticNack{m.target_address, m.source_address, codec::diag_code::kInvalidSourceAddress});
      close_slot(ctx, fx, slot, "invalid_source_address");
      return fx;
    }
    if (!config_.known_target_addresses.count(m.target_address)) {
      reply(fx, slot, codec::DiagnosticNack{m.target_address, m.source_address, codec::diag_code::kUnknownTargetAddress});
      return fx;
    }
    fx.events.push_back(authentic_event(ctx, frame, endpoint_.name, codec::payload_type::kDiagnosticMessage));
    fx.events.push_back(TraceEvent{ctx.now, EventKind::kSecret, endpoint_.name, frame.id, digest(m.user_data),
                                   "user_data", phase_of(frame.channel), Provenance::kHonest});
    fx.events.push_back(TraceEvent{ctx.now, EventKind::kDelivered, endpoint_.name, frame.id, digest(m.user_data),
                                   "forwarded to " + hex16(m.target_address), phase_of(frame.channel),
                                   Provenance::kHonest});
    reply(fx, slot, codec::DiagnosticAck{m.target_address, m.source_address, codec::diag_code::kAck});
    return fx;
  }

  codec::PowerModeResponse handle_power_mode() const { return codec::PowerModeResponse{config_.power_mode}; }

  codec::EntityStatusResponse handle_entity_status() const {
    return codec::EntityStatusResponse{config_.node_type, config_.max_open_sockets,
                                       static_cast<std::uint8_t>(open_slot_count()), config_.max_data_size};
  }

  /// Sends an alive check request on an active slot.
  Effects probe_alive(Context& ctx, ConnectionId id) {
    Effects fx;
    if (auto it = slots_.find(id); it != slots_.end() && it->second.routing_active) probe(ctx, fx, it->second);
    return fx;
  }

  Effects tick(Context& ctx) override {
    Effects fx;
    std::vector<std::pair<ConnectionId, std::string>> expired;
    for (auto& [id, slot] : slots_) {
      if (slot.initial_inactivity_deadline && *slot.initial_inactivity_deadline <= ctx.now) {
        expired.emplace_back(id, "initial_inactivity");
      } else if (slot.general_inactivity_deadline && *slot.general_inactivity_deadline <= ctx.now) {
        expired.emplace_back(id, "general_inactivity");
      } else if (slot.alive_check_deadline && *slot.alive_check_deadline <= ctx.now) {
        expired.emplace_back(id, "alive_check_timeout");
      }
    }
    for (const auto& [id, reason] : expired) close_slot(ctx, fx, slots_.at(id), reason);

    std::vector<PendingActivation> due;
    auto split = std::stable_partition(pending_.begin(), pending_.end(),
                                       [&](const PendingActivation& p) { return p.deadline > ctx.now; });
    due.assign(split, pending_.end());
    pending_.erase(split, pending_.end());
    for (auto& p : due) {
      auto it = slots_.find(p.connection);
      if (it == slots_.end()) continue;
      if (active_registrations() >= config_.max_open_sockets) {
        respond_activation(ctx, fx, it->second, p.request, codec::ActivationCode::kNoSocket, true);
      } else {
        fx.append(finish_activation(ctx, it->second, p.frame, p.request));
      }
    }
    return fx;
  }

  std::optional<SimTime> next_deadline() const override {
    std::optional<SimTime> next;
    auto consider = [&next](const std::optional<SimTime>& t) {
      if (t && (!next || *t < *next)) next = t;
    };
    for (const auto& [id, slot] : slots_) {
      consider(slot.initial_inactivity_deadline);
      consider(slot.general_inactivity_deadline);
      consider(slot.alive_check_deadline);
    }
    for (const auto& p : pending_) consider(p.deadline);
    return next;
  }

  void check_invariants(std::vector<std::string>& out) const override {
    std::map<std::uint16_t, int> registrations;
    for (const auto& [id, slot] : slots_) {
      const std::string where = endpoint_.name + " slot " + std::to_string(slot.number);
      if (slot.registered_source_address) ++registrations[*slot.registered_source_address];
      if (slot.routing_active && !slot.registered_source_address) out.push_back(where + ": active without SA");
      if (slot.initial_inactivity_deadline.has_value() == slot.general_inactivity_deadline.has_value()) {
        out.push_back(where + ": inactivity timers not exclusive");
      }
    }
    for (const auto& [sa, n] : registrations) {
      if (n > 1) out.push_back(endpoint_.name + ": SA " + hex16(sa) + " registered on " + std::to_string(n) + " slots");
    }
  }

 private:
  struct PendingActivation {
    ConnectionId connection;
    Frame frame;
    codec::RoutingActivationRequest request;
    SimTime deadline;
  };

  std::size_t open_slot_count() const { return slots_.size(); }

  Bytes datagram_wire(codec::Payload p) const {
    const codec::Message m{config_.protocol_version, std::move(p)};
    if (config_.sign_datagrams && signing_key_) return codec::encode_signed(m, *signing_key_, trust_);
    return codec::encode(m);
  }

  void reply(Effects& fx, const SocketSlot& slot, codec::Payload p) const {
    fx.frames.push_back(Outgoing{slot.channel_secure ? Channel::kSecureStream : Channel::kStream, slot.peer,
                                 slot.connection, codec::encode({config_.protocol_version, std::move(p)})});
  }

  void probe(Context& ctx, Effects& fx, SocketSlot& slot) const {
    slot.alive_check_deadline = ctx.now + config_.timers.alive_check_deadline;
    reply(fx, slot, codec::AliveCheckRequest{});
  }

  bool secure_missing(const SocketSlot& slot, const codec::RoutingActivationRequest& req) const {
    const bool needed = config_.requires_secure || config_.secure_activation_types.count(req.activation_type);
    return needed && !slot.channel_secure;
  }

  bool authentication_ok(const SocketSlot& slot, const codec::RoutingActivationRequest& req) const {
    if (!config_.requires_authentication) return true;
    if (config_.auth_source == AuthSource::kChannelIdentity) {
      return slot.peer_identity && config_.allowed_identities.count(*slot.peer_identity);
    }
    return config_.allowed_credentials.count(req.reserved) != 0;
  }

  Effects finish_activation(Context& ctx, SocketSlot& slot, const Frame& frame,
                            const codec::RoutingActivationRequest& req) {
    Effects fx;
    const bool auth_first = config_.handler_order == HandlerOrder::kAuthenticationFirst;
    if (!auth_first && !authentication_ok(slot, req)) {
      respond_activation(ctx, fx, slot, req, codec::ActivationCode::kAuthentication, false);
      return fx;
    }
    slot.authenticated = true;
    if (config_.requires_user_consent) {
      const auto decision = consent_ ? consent_(req.source_address) : ConsentDecision::kGranted;
      if (decision == ConsentDecision::kDenied) {
        respond_activation(ctx, fx, slot, req, codec::ActivationCode::kConsentRejected, true);
        return fx;
      }
      if (decision == ConsentDecision::kPending) {
        respond_activation(ctx, fx, slot, req, codec::ActivationCode::kConsentPending, false);
        return fx;
      }
    }
    if (config_.secure_check == SecureCheckPosition::kAfterConsent && secure_missing(slot, req)) {
      respond_activation(ctx, fx, slot, req, codec::ActivationCode::kSecureRequired, true);
      return fx;
    }
    slot.registered_source_address = req.source_address;
    slot.routing_active = true;
    slot.initial_inactivity_deadline.reset();
    slot.general_inactivity_deadline = ctx.now + config_.timers.general_inactivity;
    fx.events.push_back(authentic_event(ctx, frame, endpoint_.name, codec::payload_type::kRoutingActivationRequest));
    respond_activation(ctx, fx, slot, req, codec::ActivationCode::kSuccess, false);
    return fx;
  }

  void respond_activation(Context& ctx, Effects& fx, SocketSlot& slot, const codec::RoutingActivationRequest& req,
                          codec::ActivationCode code, bool close) {
    reply(fx, slot, codec::RoutingActivationResponse{req.source_address, config_.logical_address, code, 0});
    if (close) close_slot(ctx, fx, slot, "activation_rejected");
  }

  TraceEvent slot_closed_event(const Context& ctx, const SocketSlot& slot, const std::string& reason) const {
    std::string summary = "slot " + std::to_string(slot.number);
    if (slot.registered_source_address) summary += " sa=" + hex16(*slot.registered_source_address);
    return TraceEvent{ctx.now, EventKind::kSlotClosed, endpoint_.name, std::nullopt, reason, summary,
                      Phase::kStream, Provenance::kHonest};
  }

  void close_slot(Context& ctx, Effects& fx, SocketSlot& slot, const std::string& reason) {
    fx.events.push_back(slot_closed_event(ctx, slot, reason));
    fx.close.push_back(slot.connection);
    const ConnectionId id = slot.connection;
    std::erase_if(pending_, [id](const PendingActivation& p) { return p.connection == id; });
    slots_.erase(id);
  }

  ServerConfig config_;
  Endpoint endpoint_;
  std::optional<codec::SigningKey> signing_key_;
  codec::TrustStore trust_;
  std::function<ConsentDecision(std::uint16_t)> consent_;
  std::map<ConnectionId, SocketSlot> slots_;
  std::vector<PendingActivation> pending_;
  int next_slot_number_ = 0;
};

}  // namespace doiplab
