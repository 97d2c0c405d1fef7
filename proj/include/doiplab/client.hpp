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

// Tester-side DoIP entity. Runs one diagnostic session through the phases
// discover -> connect -> activate -> (power mode / entity status) -> job
// and reports a single SessionOutcome.

#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "doiplab/codec.hpp"
#include "doiplab/config.hpp"
#include "doiplab/node.hpp"
#include "doiplab/signature.hpp"

namespace doiplab {

enum class ClientPhase {
  kIdle,
  kCollecting,
  kWaitingSync,
  kConnecting,
  kActivating,
  kConsentWait,
  kPowerCheck,
  kStatusQuery,
  kJobWait,
  kJobPending,
  kDone,
  kFailed,
};

struct DiscoveredVehicle {
  Endpoint from;
  codec::VehicleAnnouncement announcement;
};

class Client : public Node {
 public:
  explicit Client(ClientConfig config) : config_(std::move(config)), endpoint_(Endpoint::unicast(config_.name)) {}

  void set_trust(codec::TrustStore trust) { trust_ = std::move(trust); }

  const ClientConfig& config() const { return config_; }
  const Endpoint& endpoint() const override { return endpoint_; }
  ClientPhase phase() const { return phase_; }
  const std::vector<DiscoveredVehicle>& discovered() const { return discovered_; }
  std::optional<ConnectionId> connection() const { return connection_; }
  int discovery_retries() const { return retries_; }

  Effects on_start(Context& ctx) override {
    if (config_.start_delay.count() > 0) {
      deadline_ = ctx.now + config_.start_delay;
      return {};
    }
    return client_discover(ctx);
  }

  /// Broadcasts a vehicle identification request and opens a collection window.
  Effects client_discover(Context& ctx) {
    Effects fx;
    round_.clear();
    send_datagram(fx, Channel::kDatagramBroadcast, Endpoint::broadcast());
    phase_ = ClientPhase::kCollecting;
    deadline_ = ctx.now + config_.collection_window;
    return fx;
  }

  Effects on_datagram(Context& ctx, const Frame& frame) override {
    Effects fx;
    if (phase_ != ClientPhase::kCollecting && phase_ != ClientPhase::kWaitingSync) return fx;
    auto split = codec::split_signed(frame.wire);
    if (!split) return fx;
    if (config_.require_signed_announcements) {
      if (!split->signature || codec::verify_header(*split->signature, trust_)) return fx;
    }
    auto decoded = codec::decode(split->message);
    if (!decoded) return fx;  // clients never answer with a header NACK
    const auto* ann = std::get_if<codec::VehicleAnnouncement>(&decoded->payload);
    if (ann == nullptr) return fx;
    if (config_.target_vin && ann->vin != *config_.target_vin) return fx;
    fx.events.push_back(authentic_event(ctx, frame, endpoint_.name, codec::payload_type::kVehicleAnnouncement));
    discovered_.push_back({frame.claimed_source, *ann});
    if (phase_ == ClientPhase::kCollecting) round_.push_back({frame.claimed_source, *ann});
    return fx;
  }

  Effects on_connection_opened(Context& ctx, const Connection& c) override {
    Effects fx;
    if (phase_ != ClientPhase::kConnecting) return fx;
    connection_ = c.id;
    secure_ = c.secure;
    send_activation(ctx, fx);
    return fx;
  }

  Effects on_connection_refused(Context& ctx, const Endpoint&, const std::string& reason) override {
    Effects fx;
    if (phase_ == ClientPhase::kConnecting) fail(ctx, fx, reason);
    return fx;
  }

  Effects on_connection_closed(Context& ctx, ConnectionId id) override {
    Effects fx;
    if (connection_ != id) return fx;
    connection_.reset();
    if (phase_ == ClientPhase::kConnecting) return fx;  // expected while upgrading to a secure channel
    if (phase_ != ClientPhase::kDone && phase_ != ClientPhase::kFailed) fail(ctx, fx, "connection_closed");
    return fx;
  }

  Effects on_stream(Context& ctx, const Frame& frame) override {
    Effects fx;
    if (frame.connection != connection_) return fx;
    auto decoded = codec::decode(frame.wire);
    if (!decoded) return fx;
    const auto& payload = decoded->payload;
    auto accept = [&](std::uint16_t type) {
      fx.events.push_back(authentic_event(ctx, frame, endpoint_.name, type));
    };

    if (std::holds_alternative<codec::AliveCheckRequest>(payload)) {
      accept(codec::payload_type::kAliveCheckRequest);
      client_alive_response(fx);
      return fx;
    }
    if (const auto* nack = std::get_if<codec::GenericHeaderNack>(&payload)) {
      accept(codec::payload_type::kGenericHeaderNack);
      fail(ctx, fx, "header_nack_" + std::to_string(static_cast<int>(nack->code)));
      return fx;
    }
    if (const auto* res = std::get_if<codec::RoutingActivationResponse>(&payload)) {
      if (phase_ != ClientPhase::kActivating || res->tester_address != config_.source_address) return fx;
      accept(codec::payload_type::kRoutingActivationResponse);
      on_activation_response(ctx, fx, *res);
      return fx;
    }
    if (const auto* pm = std::get_if<codec::PowerModeResponse>(&payload)) {
      if (phase_ != ClientPhase::kPowerCheck) return fx;
      accept(codec::payload_type::kPowerModeResponse);
      if (pm->status == codec::PowerMode::kNotReady) {
        fail(ctx, fx, "power_mode_not_ready");
      } else {
        after_power_check(ctx, fx);
      }
      return fx;
    }
    if (const auto* st = std::get_if<codec::EntityStatusResponse>(&payload)) {
      if (phase_ != ClientPhase::kStatusQuery) return fx;
      accept(codec::payload_type::kEntityStatusResponse);
      max_data_size_ = st->max_data_size;
      start_job(ctx, fx);
      return fx;
    }
    if (const auto* ack = std::get_if<codec::DiagnosticAck>(&payload)) {
      if (!matches_pending(ack->source_address, ack->target_address)) return fx;
      accept(codec::payload_type::kDiagnosticAck);
      chunks_.pop_front();
      if (chunks_.empty()) {
        finish(ctx, fx);
      } else {
        phase_ = ClientPhase::kJobWait;
        deadline_ = ctx.now + config_.request_interval;
      }
      return fx;
    }
    if (const auto* nack = std::get_if<codec::DiagnosticNack>(&payload)) {
      if (!matches_pending(nack->source_address, nack->target_address)) return fx;
      accept(codec::payload_type::kDiagnosticNack);
      fail(ctx, fx, "diagnostic_nack_" + hex8(nack->nack_code));
      return fx;
    }
    return fx;
  }

  Effects tick(Context& ctx) override {
    Effects fx;
    if (!deadline_ || *deadline_ > ctx.now) return fx;
    deadline_.reset();
    switch (phase_) {
      case ClientPhase::kIdle: return client_discover(ctx);
      case ClientPhase::kCollecting: end_collection(ctx, fx); break;
      case ClientPhase::kWaitingSync: retry_identification(ctx, fx); break;
      case ClientPhase::kConsentWait: send_activation(ctx, fx); break;
      case ClientPhase::kJobWait: send_next_chunk(ctx, fx); break;
      case ClientPhase::kActivating:
      case ClientPhase::kPowerCheck:
      case ClientPhase::kStatusQuery:
      case ClientPhase::kJobPending: fail(ctx, fx, "response_timeout"); break;
      default: break;
    }
    return fx;
  }

  std::optional<SimTime> next_deadline() const override { return deadline_; }

  /// Answers a server alive check with the registered source address.
  void client_alive_response(Effects& fx) const {
    if (!connection_) return;
    fx.frames.push_back(stream_frame(codec::AliveCheckResponse{config_.source_address}));
  }

  /// Leaves without a teardown being delivered (used by scenarios after a hijack).
  Effects depart(Context&) {
    Effects fx;
    if (connection_) fx.close.push_back(*connection_);
    connection_.reset();
    return fx;
  }

 private:
  bool matches_pending(std::uint16_t source, std::uint16_t target) const {
    return phase_ == ClientPhase::kJobPending && !chunks_.empty() && source == chunks_.front().target_address &&
           target == config_.source_address;
  }

  void send_datagram(Effects& fx, Channel channel, Endpoint dest) const {
    fx.frames.push_back(Outgoing{channel, std::move(dest), std::nullopt,
                                 codec::encode({config_.protocol_version, codec::VehicleIdentificationRequest{}})});
  }

  Outgoing stream_frame(codec::Payload p) const {
    return Outgoing{secure_ ? Channel::kSecureStream : Channel::kStream, vehicle_, connection_,
                    codec::encode({config_.protocol_version, std::move(p)})};
  }

  void end_collection(Context& ctx, Effects& fx) {
    if (round_.empty()) {
      if (++retries_ > config_.max_discovery_retries) {
        fail(ctx, fx, "no_vehicle_found");
        return;
      }
      fx.append(client_discover(ctx));
      return;
    }
    const DiscoveredVehicle& chosen = round_.front();
    incomplete_.reset();
    for (const auto& d : round_) {
      if (d.announcement.vin == chosen.announcement.vin && d.announcement.sync_status == codec::SyncStatus::kIncomplete) {
        incomplete_ = d.from;
        break;
      }
    }
    if (incomplete_) {
      phase_ = ClientPhase::kWaitingSync;
      deadline_ = ctx.now + config_.vehicle_discovery_timer;
      return;
    }
    vehicle_ = chosen.from;
    connect(fx, config_.security != ChannelSecurity::kPlain);
  }

  void retry_identification(Context& ctx, Effects& fx) {
    if (++retries_ > config_.max_discovery_retries) {
      fail(ctx, fx, "discovery_incomplete");
      return;
    }
    round_.clear();
    const bool single = config_.unified_retry || config_.sync_retry == SyncRetryVariant::kRetrySingle;
    if (single) {
      send_datagram(fx, Channel::kDatagramUnicast, *incomplete_);
    } else {
      send_datagram(fx, Channel::kDatagramBroadcast, Endpoint::broadcast());
    }
    phase_ = ClientPhase::kCollecting;
    deadline_ = ctx.now + config_.collection_window;
  }

  void connect(Effects& fx, bool secure) {
    phase_ = ClientPhase::kConnecting;
    const bool mutual = secure && config_.security == ChannelSecurity::kTlsMutual;
    fx.connects.push_back(ConnectRequest{vehicle_, secure, mutual, mutual ? config_.identity : std::nullopt});
  }

  void send_activation(Context& ctx, Effects& fx) {
    phase_ = ClientPhase::kActivating;
    deadline_ = ctx.now + config_.response_timeout;
    fx.frames.push_back(stream_frame(
        codec::RoutingActivationRequest{config_.source_address, config_.activation_type, config_.credential}));
  }

  void on_activation_response(Context& ctx, Effects& fx, const codec::RoutingActivationResponse& res) {
    deadline_.reset();
    switch (res.code) {
      case codec::ActivationCode::kSuccess:
        if (config_.check_power_mode) {
          phase_ = ClientPhase::kPowerCheck;
          deadline_ = ctx.now + config_.response_timeout;
          fx.frames.push_back(stream_frame(codec::PowerModeRequest{}));
        } else {
          after_power_check(ctx, fx);
        }
        return;
      case codec::ActivationCode::kSecureRequired:
        if (!secure_ && config_.secure_capable) {
          if (config_.security == ChannelSecurity::kPlain) config_.security = ChannelSecurity::kTls;
          if (connection_) fx.close.push_back(*connection_);
          connection_.reset();
          connect(fx, true);
          return;
        }
        break;
      case codec::ActivationCode::kConsentPending:
        if (++consent_retries_ <= config_.max_consent_retries) {
          phase_ = ClientPhase::kConsentWait;
          deadline_ = ctx.now + config_.consent_retry_interval;
          return;
        }
        break;
      default: break;
    }
    fail(ctx, fx, "activation_" + hex8(static_cast<std::uint8_t>(res.code)));
  }

  void after_power_check(Context& ctx, Effects& fx) {
    if (config_.query_entity_status) {
      phase_ = ClientPhase::kStatusQuery;
      deadline_ = ctx.now + config_.response_timeout;
      fx.frames.push_back(stream_frame(codec::EntityStatusRequest{}));
      return;
    }
    start_job(ctx, fx);
  }

  void start_job(Context& ctx, Effects& fx) {
    chunks_.clear();
    const std::size_t max_user = max_data_size_ && *max_data_size_ > 4 ? *max_data_size_ - 4 : SIZE_MAX;
    for (const auto& req : config_.job) {
      std::size_t at = 0;
      do {
        const std::size_t n = std::min(max_user, req.user_data.size() - at);
        chunks_.push_back(DiagnosticRequest{req.target_address,
                                            Bytes(req.user_data.begin() + static_cast<std::ptrdiff_t>(at),
                                                  req.user_data.begin() + static_cast<std::ptrdiff_t>(at + n))});
        at += n;
      } while (at < req.user_data.size());
    }
    if (chunks_.empty()) {
      finish(ctx, fx);
      return;
    }
    send_next_chunk(ctx, fx);
  }

  void send_next_chunk(Context& ctx, Effects& fx) {
    const auto& c = chunks_.front();
    phase_ = ClientPhase::kJobPending;
    deadline_ = ctx.now + config_.response_timeout;
    fx.frames.push_back(stream_frame(codec::DiagnosticMessage{config_.source_address, c.target_address, c.user_data}));
  }

  void finish(Context& ctx, Effects& fx) {
    phase_ = ClientPhase::kDone;
    deadline_.reset();
    fx.events.push_back(outcome_event(ctx, endpoint_.name, true, "job_complete"));
    if (config_.depart_after_job && connection_) {
      fx.close.push_back(*connection_);
      connection_.reset();
    }
  }

  void fail(Context& ctx, Effects& fx, const std::string& code) {
    if (phase_ == ClientPhase::kDone || phase_ == ClientPhase::kFailed) return;
    phase_ = ClientPhase::kFailed;
    deadline_.reset();
    fx.events.push_back(outcome_event(ctx, endpoint_.name, false, code));
    if (connection_) {
      fx.close.push_back(*connection_);
      connection_.reset();
    }
  }

  ClientConfig config_;
  Endpoint endpoint_;
  codec::TrustStore trust_;
  ClientPhase phase_ = ClientPhase::kIdle;
  std::optional<SimTime> deadline_;
  std::vector<DiscoveredVehicle> discovered_;
  std::vector<DiscoveredVehicle> round_;
  std::optional<Endpoint> incomplete_;
  Endpoint vehicle_;
  std::optional<ConnectionId> connection_;
  bool secure_ = false;
  int retries_ = 0;
  int consent_retries_ = 0;
  std::optional<std::uint32_t> max_data_size_;
  std::deque<DiagnosticRequest> chunks_;
};

}  // namespace doiplab
