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

#include <chrono>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "doiplab/bytes.hpp"

namespace doiplab {

using SimDuration = std::chrono::microseconds;
/// Simulated time, measured from the start of a run.
using SimTime = std::chrono::microseconds;

using namespace std::chrono_literals;

inline std::int64_t to_micros(SimTime t) { return t.count(); }

/// Abstract network identity. `group` marks multicast/broadcast addresses.
struct Endpoint {
  std::string name;
  bool group = false;

  static Endpoint broadcast() { return Endpoint{"*", true}; }
  static Endpoint unicast(std::string n) { return Endpoint{std::move(n), false}; }
  bool operator==(const Endpoint&) const = default;
  auto operator<=>(const Endpoint&) const = default;
};

enum class Channel { kDatagramBroadcast, kDatagramUnicast, kStream, kSecureStream };

inline std::string_view to_string(Channel c) {
  switch (c) {
    case Channel::kDatagramBroadcast: return "DATAGRAM_BROADCAST";
    case Channel::kDatagramUnicast: return "DATAGRAM_UNICAST";
    case Channel::kStream: return "STREAM";
    case Channel::kSecureStream: return "SECURE_STREAM";
  }
  return "?";
}

inline bool is_datagram(Channel c) { return c == Channel::kDatagramBroadcast || c == Channel::kDatagramUnicast; }

enum class ConnectionId : std::uint32_t {};
using FrameId = std::uint64_t;

struct Frame {
  FrameId id = 0;
  SimTime send_time{};
  SimTime deliver_time{};
  Channel channel = Channel::kDatagramUnicast;
  Endpoint claimed_source;
  Endpoint destination;
  std::optional<ConnectionId> connection;
  Bytes wire;
  /// Ground truth; never shown to entities.
  Endpoint true_origin;
};

struct Connection {
  ConnectionId id{};
  Endpoint client;
  Endpoint server;
  bool secure = false;
  /// Authenticated peer identity when the secure channel used client authentication.
  std::optional<std::string> client_identity;
  bool open = true;
  bool hijacked = false;
};

enum class EventKind {
  kSend,
  kAuthentic,
  kSecret,
  kAdversaryKnows,
  kSessionOutcome,
  kSlotClosed,
  kFingerprintObservation,
  kDelivered,
  kSecureChannelViolation,
};

inline std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::kSend: return "Send";
    case EventKind::kAuthentic: return "Authentic";
    case EventKind::kSecret: return "Secret";
    case EventKind::kAdversaryKnows: return "AdversaryKnows";
    case EventKind::kSessionOutcome: return "SessionOutcome";
    case EventKind::kSlotClosed: return "SlotClosed";
    case EventKind::kFingerprintObservation: return "FingerprintObservation";
    case EventKind::kDelivered: return "Delivered";
    case EventKind::kSecureChannelViolation: return "SecureChannelViolation";
  }
  return "?";
}

/// Protocol phase an event belongs to; used to split verdicts per phase.
enum class Phase { kNone, kDatagram, kStream };

inline std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::kNone: return "none";
    case Phase::kDatagram: return "datagram";
    case Phase::kStream: return "stream";
  }
  return "?";
}

inline Phase phase_of(Channel c) { return is_datagram(c) ? Phase::kDatagram : Phase::kStream; }

enum class Provenance { kHonest, kAdversary, kSimulator };

inline std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::kHonest: return "honest";
    case Provenance::kAdversary: return "adversary";
    case Provenance::kSimulator: return "simulator";
  }
  return "?";
}

/// One entry of the event log. `value` holds the digest for Send/Authentic/
/// Secret/AdversaryKnows, the result for SessionOutcome, the reason for
/// SlotClosed and the observable for FingerprintObservation.
struct TraceEvent {
  SimTime time{};
  EventKind kind = EventKind::kSend;
  std::string actor;
  std::optional<FrameId> frame_id;
  std::string value;
  std::string summary;
  Phase phase = Phase::kNone;
  Provenance provenance = Provenance::kHonest;
  bool operator==(const TraceEvent&) const = default;
};

using Trace = std::vector<TraceEvent>;

/// A frame an entity wants sent.
struct Outgoing {
  Channel channel = Channel::kDatagramUnicast;
  Endpoint destination;
  std::optional<ConnectionId> connection;
  Bytes wire;
  SimDuration delay{0};
};

struct ConnectRequest {
  Endpoint server;
  bool secure = false;
  bool mutual_auth = false;
  std::optional<std::string> identity;
};

/// Everything a handler asks the simulator to do.
struct Effects {
  std::vector<Outgoing> frames;
  std::vector<TraceEvent> events;
  std::vector<ConnectionId> close;
  std::vector<ConnectRequest> connects;

  void append(Effects&& other) {
    for (auto& f : other.frames) frames.push_back(std::move(f));
    for (auto& e : other.events) events.push_back(std::move(e));
    close.insert(close.end(), other.close.begin(), other.close.end());
    connects.insert(connects.end(), other.connects.begin(), other.connects.end());
  }
};

/// Seeded generator with platform-independent draws (std distributions are
/// implementation-defined, so they are avoided).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [lo, hi].
  std::uint64_t uniform(std::uint64_t lo, std::uint64_t hi) {
    const std::uint64_t span = hi - lo + 1;
    if (span == 0) return lo + next();
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % span;
    std::uint64_t x = next();
    while (x >= limit) x = next();
    return lo + x % span;
  }

  SimDuration duration_upto(SimDuration max) {
    if (max.count() <= 0) return SimDuration{0};
    return SimDuration{static_cast<std::int64_t>(uniform(0, static_cast<std::uint64_t>(max.count())))};
  }

  Bytes bytes(std::size_t n) {
    Bytes b(n);
    for (auto& c : b) c = static_cast<std::uint8_t>(next());
    return b;
  }

 private:
  std::mt19937_64 engine_;
};

/// Handler context supplied by the simulator.
struct Context {
  SimTime now{};
  Rng& rng;
};

}  // namespace doiplab
