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

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "doiplab/codec.hpp"
#include "doiplab/digest.hpp"
#include "doiplab/sim_types.hpp"

namespace doiplab {

/// An honest protocol participant driven by the simulator's event loop.
class Node {
 public:
  virtual ~Node() = default;

  virtual const Endpoint& endpoint() const = 0;

  virtual Effects on_start(Context&) { return {}; }
  virtual Effects on_datagram(Context& ctx, const Frame& frame) = 0;
  virtual Effects on_stream(Context& ctx, const Frame& frame) = 0;

  /// Secure handshakes may be refused; plain connections are always accepted.
  virtual bool accepts(const Connection&) const { return true; }
  virtual Effects on_connection_opened(Context&, const Connection&) { return {}; }
  virtual Effects on_connection_refused(Context&, const Endpoint& /*server*/, const std::string& /*reason*/) {
    return {};
  }
  virtual Effects on_connection_closed(Context&, ConnectionId) { return {}; }

  virtual Effects tick(Context& ctx) = 0;
  virtual std::optional<SimTime> next_deadline() const = 0;

  /// Appends a description of every violated state invariant.
  virtual void check_invariants(std::vector<std::string>&) const {}
};

inline TraceEvent authentic_event(const Context& ctx, const Frame& frame, const std::string& acceptor,
                                  std::uint16_t type) {
  return TraceEvent{ctx.now,
                    EventKind::kAuthentic,
                    frame.claimed_source.name,
                    frame.id,
                    digest(frame.wire),
                    acceptor + " accepted " + std::string(codec::payload_name(type)),
                    phase_of(frame.channel),
                    Provenance::kHonest};
}

inline TraceEvent outcome_event(const Context& ctx, const std::string& actor, bool success, const std::string& code) {
  return TraceEvent{ctx.now, EventKind::kSessionOutcome, actor, std::nullopt, success ? "success" : "failure",
                    code, Phase::kNone, Provenance::kHonest};
}

}  // namespace doiplab
