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

// Protocol invariants checked over a finished simulation, on top of the
// per-step state checks the simulator already collected.

#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "doiplab/codec.hpp"
#include "doiplab/network.hpp"
#include "doiplab/signature.hpp"

namespace doiplab::invariants {

inline std::optional<std::uint16_t> sent_type(const net::FrameRecord& rec) {
  auto split = codec::split_signed(rec.original_wire);
  if (!split) return std::nullopt;
  auto m = codec::decode(split->message);
  if (!m) return std::nullopt;
  return codec::payload_type_of(m->payload);
}

/// 0 discovery, 1 activation, 2 diagnostic; nullopt for messages allowed anywhere.
inline std::optional<int> client_stage(std::uint16_t type) {
  namespace pt = codec::payload_type;
  switch (type) {
    case pt::kVehicleIdentificationRequest: return 0;
    case pt::kRoutingActivationRequest: return 1;
    case pt::kPowerModeRequest:
    case pt::kEntityStatusRequest:
    case pt::kDiagnosticMessage: return 2;
    default: return std::nullopt;
  }
}

struct Roles {
  std::vector<std::string> clients;
  std::vector<std::string> servers;
  int announce_count = 3;
};

inline std::vector<std::string> check(const net::Simulator& sim, const Roles& roles) {
  namespace pt = codec::payload_type;
  std::vector<std::string> out = sim.invariant_violations();
  const std::set<std::string> clients(roles.clients.begin(), roles.clients.end());
  const std::set<std::string> servers(roles.servers.begin(), roles.servers.end());
  std::map<std::string, int> stage;
  std::map<std::string, int> announcements;
  std::set<std::pair<std::string, ConnectionId>> activated;
  std::set<std::pair<std::string, ConnectionId>> granted;

  for (const auto& e : sim.trace()) {
    if (!e.frame_id) continue;
    const auto& rec = sim.frames()[*e.frame_id - 1];
    const auto type = sent_type(rec);
    if (!type) continue;

    if (e.kind == EventKind::kSend && clients.count(e.actor)) {
      if (*type == pt::kGenericHeaderNack || *type == pt::kDiagnosticNack) {
        out.push_back(e.actor + " sent a NACK");
      }
      if (auto s = client_stage(*type)) {
        auto& current = stage[e.actor];
        // A new discovery round is legal only before activation.
        if (*s < current && !(*s == 1 && current == 1)) {
          out.push_back(e.actor + " sent " + std::string(codec::payload_name(*type)) + " after a later phase");
        }
        current = std::max(current, *s);
      }
    }
    if (e.kind == EventKind::kSend && servers.count(e.actor) && *type == pt::kVehicleAnnouncement &&
        rec.frame.channel == Channel::kDatagramBroadcast) {
      ++announcements[e.actor];
    }
    if (e.kind == EventKind::kSend && servers.count(e.actor) && rec.frame.connection) {
      const auto key = std::make_pair(e.actor, *rec.frame.connection);
      auto m = codec::decode(rec.original_wire);
      if (m) {
        if (const auto* res = std::get_if<codec::RoutingActivationResponse>(&m->payload);
            res && res->code == codec::ActivationCode::kSuccess) {
          granted.insert(key);
        } else if (std::holds_alternative<codec::DiagnosticAck>(m->payload) && !granted.count(key)) {
          out.push_back(e.actor + " acknowledged a diagnostic message before a successful activation");
        }
      }
    }
    if (e.kind == EventKind::kAuthentic && rec.frame.connection) {
      const std::string acceptor = e.summary.substr(0, e.summary.find(' '));
      if (!servers.count(acceptor)) continue;
      const auto key = std::make_pair(acceptor, *rec.frame.connection);
      if (*type == pt::kRoutingActivationRequest) {
        activated.insert(key);
      } else if (client_stage(*type) == 2 && !activated.count(key)) {
        out.push_back(acceptor + " accepted " + std::string(codec::payload_name(*type)) + " before activation");
      }
    }
  }
  for (const auto& s : roles.servers) {
    if (announcements[s] != roles.announce_count) {
      out.push_back(s + " sent " + std::to_string(announcements[s]) + " announcements, expected " +
                    std::to_string(roles.announce_count));
    }
  }
  return out;
}

}  // namespace doiplab::invariants
