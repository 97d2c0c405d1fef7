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

// Deterministic discrete-event network with plain datagrams, plain streams
// and ideal secure streams, plus an on-segment Dolev-Yao adversary.
//
// The secure stream is the ideal channel: the adversary neither reads nor
// alters its frames and cannot send into it under another identity. No
// handshake traffic is simulated; opening a secure stream is atomic.

#pragma once

#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "doiplab/codec.hpp"
#include "doiplab/digest.hpp"
#include "doiplab/node.hpp"
#include "doiplab/signature.hpp"
#include "doiplab/sim_types.hpp"

namespace doiplab::net {

inline constexpr SimDuration kLinkLatency = 1ms;

class SecureChannelViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A named piece of a message: the whole wire, the header, or one field.
struct Atom {
  std::string label;
  Bytes value;
};

/// Every value a reader of `wire` can extract under the public codec.
inline std::vector<Atom> extract_atoms(ByteView wire) {
  std::vector<Atom> atoms;
  atoms.push_back({"wire", Bytes(wire.begin(), wire.end())});
  auto split = codec::split_signed(wire);
  if (!split) return atoms;
  if (split->signature) atoms.push_back({"signature", Bytes(split->signature->signature.begin(), split->signature->signature.end())});
  auto decoded = codec::decode(split->message);
  if (!decoded) return atoms;
  std::visit(
      [&atoms](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, codec::VehicleAnnouncement>) {
          atoms.push_back({"vin", Bytes(p.vin.begin(), p.vin.end())});
          atoms.push_back({"logical_address", u16_bytes(p.logical_address)});
          atoms.push_back({"eid", Bytes(p.eid.begin(), p.eid.end())});
          atoms.push_back({"gid", Bytes(p.gid.begin(), p.gid.end())});
        } else if constexpr (std::is_same_v<T, codec::RoutingActivationRequest>) {
          atoms.push_back({"source_address", u16_bytes(p.source_address)});
          atoms.push_back({"credential", u32_bytes(p.reserved)});
        } else if constexpr (std::is_same_v<T, codec::DiagnosticMessage>) {
          atoms.push_back({"source_address", u16_bytes(p.source_address)});
          atoms.push_back({"target_address", u16_bytes(p.target_address)});
          atoms.push_back({"user_data", p.user_data});
        } else if constexpr (std::is_same_v<T, codec::AliveCheckResponse>) {
          atoms.push_back({"source_address", u16_bytes(p.source_address)});
        }
      },
      decoded->payload);
  return atoms;
}

/// One adversary-built frame and whether it is derivable from what the
/// adversary had observed plus public constants and its own key material.
struct Derivation {
  FrameId frame = 0;
  std::string action;
  bool derivable = true;
  std::string detail;
};

struct DropRule {
  std::string name;
  std::function<bool(const Frame&, const codec::Message*)> match;
};

struct ModifyRule {
  std::string name;
  std::function<bool(const Frame&, const codec::Message*)> match;
  std::function<void(Bytes& wire)> rewrite;
};

class Simulator;

/// Called for every frame the adversary observes, before drop/modify rules.
using Reaction = std::function<void(Simulator&, const Frame&, const codec::Message*)>;

class Adversary {
 public:
  Adversary() : endpoint_(Endpoint::unicast("adversary")) {}

  const Endpoint& endpoint() const { return endpoint_; }

  bool knows(ByteView value) const { return knowledge_.count(Bytes(value.begin(), value.end())) != 0; }
  std::size_t knowledge_size() const { return knowledge_.size(); }
  const std::vector<Derivation>& derivations() const { return derivations_; }

  void add_drop(DropRule r) { drops_.push_back(std::move(r)); }
  void add_modify(ModifyRule r) { modifies_.push_back(std::move(r)); }
  void add_reaction(Reaction r) { reactions_.push_back(std::move(r)); }
  void set_own_key(codec::SigningKey key) { own_key_ = std::move(key); }
  const std::optional<codec::SigningKey>& own_key() const { return own_key_; }

 private:
  friend class Simulator;

  /// Returns the atoms that were new.
  std::vector<Atom> learn(ByteView wire) {
    std::vector<Atom> fresh;
    for (auto& a : extract_atoms(wire)) {
      if (knowledge_.insert(a.value).second) fresh.push_back(std::move(a));
    }
    return fresh;
  }

  /// Checks the values an adversary cannot invent: signatures and credentials.
  Derivation derive(FrameId id, const std::string& action, ByteView wire) const {
    Derivation d{id, action, true, {}};
    auto split = codec::split_signed(wire);
    if (split && split->signature) {
      const auto& sig = split->signature->signature;
      bool own = false;
      if (own_key_ && split->signature->signer_id == own_key_->id()) {
        codec::TrustStore mine;
        mine.add(*own_key_);
        own = !codec::verify_header(*split->signature, mine);
      }
      if (!own && !knows(Bytes(sig.begin(), sig.end()))) {
        d.derivable = false;
        d.detail = "signature not observed and not producible";
      }
    }
    if (split) {
      if (auto decoded = codec::decode(split->message)) {
        if (const auto* req = std::get_if<codec::RoutingActivationRequest>(&decoded->payload)) {
          if (req->reserved != 0 && !knows(u32_bytes(req->reserved))) {
            d.derivable = false;
            d.detail = "credential " + std::to_string(req->reserved) + " not observed";
          }
        }
      }
    }
    return d;
  }

  Endpoint endpoint_;
  std::set<Bytes> knowledge_;
  std::vector<Derivation> derivations_;
  std::vector<DropRule> drops_;
  std::vector<ModifyRule> modifies_;
  std::vector<Reaction> reactions_;
  std::optional<codec::SigningKey> own_key_;
};

struct FrameRecord {
  Frame frame;
  Bytes original_wire;
  bool dropped = false;
  bool modified = false;
};

class Simulator {
 public:
  explicit Simulator(std::uint64_t seed) : rng_(seed) {}

  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  template <class T>
  T& add(std::unique_ptr<T> node) {
    T& ref = *node;
    index_[node->endpoint().name] = nodes_.size();
    nodes_.push_back(std::move(node));
    scheduled_wakeup_.push_back(std::nullopt);
    return ref;
  }

  Node* find(const std::string& name) {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : nodes_[it->second].get();
  }

  Adversary& adversary() { return adversary_; }
  const Adversary& adversary() const { return adversary_; }
  /// Client identities registered for mutually authenticated handshakes.
  codec::TrustStore& pki() { return pki_; }
  Rng& rng() { return rng_; }

  SimTime now() const { return now_; }
  const Trace& trace() const { return trace_; }
  const std::deque<FrameRecord>& frames() const { return records_; }
  const std::map<ConnectionId, Connection>& connections() const { return connections_; }
  const std::vector<std::string>& invariant_violations() const { return violations_; }

  /// Runs `hook` at simulated time `t`.
  void at(SimTime t, std::function<void(Simulator&)> hook) {
    hooks_.push_back(std::move(hook));
    push(t, HookEvent{hooks_.size() - 1});
  }

  /// Applies effects produced by `node` at the current time.
  void act(Node& node, const std::function<Effects(Context&)>& fn) {
    Context ctx{now_, rng_};
    apply(node_index(node), fn(ctx));
  }

  void start() {
    if (started_) return;
    started_ = true;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      Context ctx{now_, rng_};
      apply(i, nodes_[i]->on_start(ctx));
    }
  }

  bool empty() const { return queue_.empty(); }

  /// Pops and processes the earliest event. Returns false when idle.
  bool step() {
    start();
    if (queue_.empty()) return false;
    Queued q = queue_.top();
    queue_.pop();
    now_ = q.time;
    std::visit([this](auto& e) { handle(e); }, q.event);
    check_invariants();
    return true;
  }

  void run(SimTime horizon) {
    start();
    while (!queue_.empty() && queue_.top().time <= horizon) step();
    if (now_ < horizon) now_ = horizon;
  }

  // --- adversary capabilities -------------------------------------------

  /// Enqueues a frame built by the adversary. Stream injection needs send
  /// rights on the connection, acquired through hijack().
  FrameId adversary_inject(const Endpoint& claimed_source, const Endpoint& destination, Channel channel, Bytes wire,
                           std::optional<ConnectionId> connection = std::nullopt) {
    if (channel == Channel::kSecureStream) {
      record_violation("inject into secure stream refused");
      throw SecureChannelViolation("cannot inject into a secure stream");
    }
    if (channel == Channel::kStream) {
      auto it = connection ? connections_.find(*connection) : connections_.end();
      if (it == connections_.end() || !it->second.hijacked) {
        throw std::logic_error("stream injection requires a hijacked connection");
      }
    }
    const FrameId id = enqueue(claimed_source, destination, channel, connection, std::move(wire), adversary_.endpoint(),
                               SimDuration{0});
    log_derivation(id, "inject");
    return id;
  }

  /// Takes over send rights on a plain stream bound to its client's identity.
  /// A later teardown by the victim client is not delivered.
  bool hijack(ConnectionId id) {
    auto it = connections_.find(id);
    if (it == connections_.end() || !it->second.open) return false;
    if (it->second.secure) {
      record_violation("hijack of secure stream refused");
      return false;
    }
    it->second.hijacked = true;
    return true;
  }

  /// Opens a stream from the adversary's own endpoint.
  Expected<ConnectionId, std::string> adversary_connect(const Endpoint& server, bool secure) {
    return open_connection(adversary_.endpoint(), std::nullopt, server, secure, false, std::nullopt);
  }

  /// Sends on a connection the adversary opened itself.
  FrameId adversary_send(ConnectionId id, Bytes wire) {
    auto it = connections_.find(id);
    if (it == connections_.end() || it->second.client != adversary_.endpoint()) {
      throw std::logic_error("adversary_send needs an adversary-owned connection");
    }
    const Connection& c = it->second;
    const FrameId fid = enqueue(adversary_.endpoint(), c.server, c.secure ? Channel::kSecureStream : Channel::kStream, id,
                                std::move(wire), adversary_.endpoint(), SimDuration{0});
    log_derivation(fid, "send");
    return fid;
  }

  /// Opens a secure stream from client node `client` to `server`.
  Expected<ConnectionId, std::string> open_secure(const std::string& client, const Endpoint& server, bool mutual_auth,
                                                  std::optional<std::string> identity = std::nullopt) {
    auto it = index_.find(client);
    if (it == index_.end()) return std::string("unknown client");
    return open_connection(nodes_[it->second]->endpoint(), it->second, server, true, mutual_auth, std::move(identity));
  }

 private:
  struct DeliverEvent { FrameId frame; };
  struct WakeupEvent { std::size_t node; };
  struct HookEvent { std::size_t hook; };
  struct OpenedEvent { ConnectionId connection; };
  struct RefusedEvent { std::size_t node; Endpoint server; std::string reason; };
  struct ClosedEvent { ConnectionId connection; Endpoint notify; };
  using Event = std::variant<DeliverEvent, WakeupEvent, HookEvent, OpenedEvent, RefusedEvent, ClosedEvent>;

  struct Queued {
    SimTime time;
    std::uint64_t seq;
    Event event;
    bool operator>(const Queued& o) const { return time != o.time ? time > o.time : seq > o.seq; }
  };

  struct ConnectionState {
    std::optional<std::size_t> client_node;
    bool client_departed = false;
    /// Frames up to this id were written before the close and still arrive.
    FrameId last_frame_before_close = 0;
  };

  void push(SimTime t, Event e) { queue_.push(Queued{t, next_seq_++, std::move(e)}); }

  std::size_t node_index(const Node& node) const { return index_.at(node.endpoint().name); }

  void record_violation(const std::string& what) {
    trace_.push_back(TraceEvent{now_, EventKind::kSecureChannelViolation, adversary_.endpoint().name, std::nullopt, what,
                                what, Phase::kStream, Provenance::kAdversary});
  }

  void observe(const std::string& observable, std::optional<FrameId> id, Phase phase) {
    trace_.push_back(TraceEvent{now_, EventKind::kFingerprintObservation, adversary_.endpoint().name, id, observable,
                                "", phase, Provenance::kAdversary});
  }

  static std::string describe(const Frame& f) {
    std::string s = std::string(to_string(f.channel)) + " " + f.claimed_source.name + "->" + f.destination.name;
    auto split = codec::split_signed(f.wire);
    if (split) {
      if (auto m = codec::decode(split->message)) {
        s += " " + std::string(codec::payload_name(codec::payload_type_of(m->payload)));
      } else {
        s += " undecodable";
      }
    }
    return s;
  }

  FrameId enqueue(const Endpoint& claimed, const Endpoint& dest, Channel channel, std::optional<ConnectionId> conn,
                  Bytes wire, const Endpoint& origin, SimDuration delay) {
    Frame f;
    f.id = records_.size() + 1;
    f.send_time = now_;
    f.deliver_time = now_ + delay + kLinkLatency;
    f.channel = channel;
    f.claimed_source = claimed;
    f.destination = dest;
    f.connection = conn;
    f.wire = std::move(wire);
    f.true_origin = origin;
    records_.push_back(FrameRecord{f, f.wire, false, false});
    push(f.deliver_time, DeliverEvent{f.id});
    return f.id;
  }

  void log_derivation(FrameId id, const std::string& action) {
    const Frame& f = records_[id - 1].frame;
    if (f.channel == Channel::kSecureStream) return;  // the adversary's own secure session
    adversary_.derivations_.push_back(adversary_.derive(id, action, f.wire));
  }

  Expected<ConnectionId, std::string> open_connection(const Endpoint& client, std::optional<std::size_t> client_node,
                                                      const Endpoint& server, bool secure, bool mutual,
                                                      std::optional<std::string> identity) {
    auto refuse = [&](const std::string& reason) -> Expected<ConnectionId, std::string> {
      if (client == adversary_.endpoint()) observe("refused " + server.name + " " + reason, std::nullopt, Phase::kStream);
      return reason;
    };
    auto it = index_.find(server.name);
    if (it == index_.end()) {
      // Only the adversary can stand in as a rogue server, and it holds no
      // certificate a client would accept.
      if (server == adversary_.endpoint() && !secure) {
        return register_connection(client, client_node, server, false, std::nullopt);
      }
      return refuse(secure ? "handshake_refused" : "unreachable");
    }
    std::optional<std::string> verified;
    if (secure && mutual && identity && pki_.contains(*identity)) verified = identity;
    Connection probe{ConnectionId{next_connection_}, client, server, secure, verified};
    if (!nodes_[it->second]->accepts(probe)) return refuse(secure ? "handshake_refused" : "connection_refused");
    return register_connection(client, client_node, server, secure, verified);
  }

  ConnectionId register_connection(const Endpoint& client, std::optional<std::size_t> client_node,
                                   const Endpoint& server, bool secure, std::optional<std::string> identity) {
    const ConnectionId id{next_connection_++};
    connections_.emplace(id, Connection{id, client, server, secure, std::move(identity)});
    conn_state_[id] = ConnectionState{client_node};
    push(now_ + kLinkLatency, OpenedEvent{id});
    return id;
  }

  void close_connection(ConnectionId id, const Endpoint& by) {
    auto it = connections_.find(id);
    if (it == connections_.end() || !it->second.open) return;
    Connection& c = it->second;
    ConnectionState& st = conn_state_[id];
    if (by == c.client && c.hijacked) {
      // The adversary keeps the stream alive after the victim leaves.
      st.client_departed = true;
      return;
    }
    c.open = false;
    st.last_frame_before_close = records_.size();
    const Endpoint& other = by == c.client ? c.server : c.client;
    push(now_ + kLinkLatency, ClosedEvent{id, other});
  }

  void apply(std::size_t node, Effects fx) {
    Node& n = *nodes_[node];
    for (auto& o : fx.frames) {
      if (o.connection) {
        auto it = connections_.find(*o.connection);
        if (it == connections_.end() || !it->second.open) continue;
      }
      const FrameId id = enqueue(n.endpoint(), o.destination, o.channel, o.connection, std::move(o.wire), n.endpoint(),
                                 o.delay);
      const Frame& f = records_[id - 1].frame;
      trace_.push_back(TraceEvent{now_, EventKind::kSend, n.endpoint().name, id, digest(f.wire), describe(f),
                                  phase_of(f.channel), Provenance::kHonest});
    }
    for (auto& e : fx.events) trace_.push_back(std::move(e));
    for (auto id : fx.close) close_connection(id, n.endpoint());
    for (auto& req : fx.connects) {
      auto result = open_connection(n.endpoint(), node, req.server, req.secure, req.mutual_auth, req.identity);
      if (!result) push(now_ + kLinkLatency, RefusedEvent{node, req.server, result.error()});
    }
    reschedule(node);
  }

  void reschedule(std::size_t node) {
    auto next = nodes_[node]->next_deadline();
    if (!next) return;
    if (*next < now_) next = now_;
    if (scheduled_wakeup_[node] && *scheduled_wakeup_[node] <= *next && *scheduled_wakeup_[node] >= now_) return;
    scheduled_wakeup_[node] = *next;
    push(*next, WakeupEvent{node});
  }

  void handle(DeliverEvent& e) {
    FrameRecord& rec = records_[e.frame - 1];
    Frame& f = rec.frame;
    const bool from_adversary = f.true_origin == adversary_.endpoint();
    std::optional<codec::Message> plain;
    if (auto split = codec::split_signed(f.wire)) {
      if (auto m = codec::decode(split->message)) plain = *m;
    }
    const codec::Message* msg = plain ? &*plain : nullptr;

    if (f.channel != Channel::kSecureStream) {
      if (!from_adversary) {
        for (auto& atom : adversary_.learn(f.wire)) {
          trace_.push_back(TraceEvent{now_, EventKind::kAdversaryKnows, adversary_.endpoint().name, f.id,
                                      digest(atom.value), atom.label, phase_of(f.channel), Provenance::kAdversary});
        }
        observe(describe(f) + " " + digest(f.wire), f.id, phase_of(f.channel));
        for (auto& r : adversary_.reactions_) r(*this, f, msg);
      }
      for (const auto& d : adversary_.drops_) {
        if (!from_adversary && d.match(f, msg)) {
          rec.dropped = true;
          return;
        }
      }
      for (const auto& m : adversary_.modifies_) {
        if (!from_adversary && m.match(f, msg)) {
          m.rewrite(f.wire);
          if (f.wire != rec.original_wire) {
            rec.modified = true;
            f.true_origin = adversary_.endpoint();
            log_derivation(f.id, "modify:" + m.name);
          }
          break;
        }
      }
    } else {
      bool attempted = false;
      for (const auto& d : adversary_.drops_) attempted = attempted || d.match(f, msg);
      for (const auto& m : adversary_.modifies_) attempted = attempted || m.match(f, msg);
      if (attempted) record_violation("rule matched secure frame " + std::to_string(f.id) + ", no effect");
      if (f.destination == adversary_.endpoint()) observe(describe(f) + " " + digest(f.wire), f.id, Phase::kStream);
    }

    if (is_datagram(f.channel)) {
      for (std::size_t i = 0; i < nodes_.size(); ++i) {
        Node& n = *nodes_[i];
        if (n.endpoint() == f.true_origin) continue;
        if (f.channel == Channel::kDatagramUnicast && n.endpoint() != f.destination) continue;
        Context ctx{now_, rng_};
        apply(i, n.on_datagram(ctx, f));
      }
      return;
    }

    auto cit = connections_.find(*f.connection);
    if (cit == connections_.end()) return;
    if (!cit->second.open && f.id > conn_state_[cit->first].last_frame_before_close) return;
    const Connection& c = cit->second;
    std::optional<std::size_t> target;
    if (f.destination == c.server) {
      if (auto it = index_.find(c.server.name); it != index_.end()) target = it->second;
    } else if (!conn_state_[c.id].client_departed) {
      target = conn_state_[c.id].client_node;
    }
    if (!target) return;
    Context ctx{now_, rng_};
    apply(*target, nodes_[*target]->on_stream(ctx, f));
  }

  void handle(WakeupEvent& e) {
    if (scheduled_wakeup_[e.node] == now_) scheduled_wakeup_[e.node].reset();
    auto next = nodes_[e.node]->next_deadline();
    if (next && *next <= now_) {
      Context ctx{now_, rng_};
      apply(e.node, nodes_[e.node]->tick(ctx));
    } else {
      reschedule(e.node);
    }
  }

  void handle(HookEvent& e) { hooks_[e.hook](*this); }

  void handle(OpenedEvent& e) {
    const Connection c = connections_.at(e.connection);
    if (!c.open) return;
    if (auto it = index_.find(c.server.name); it != index_.end()) {
      Context ctx{now_, rng_};
      apply(it->second, nodes_[it->second]->on_connection_opened(ctx, c));
    }
    if (auto node = conn_state_[c.id].client_node) {
      Context ctx{now_, rng_};
      apply(*node, nodes_[*node]->on_connection_opened(ctx, c));
    }
  }

  void handle(RefusedEvent& e) {
    Context ctx{now_, rng_};
    apply(e.node, nodes_[e.node]->on_connection_refused(ctx, e.server, e.reason));
  }

  void handle(ClosedEvent& e) {
    const Connection& c = connections_.at(e.connection);
    if (e.notify == adversary_.endpoint()) {
      observe("closed by " + (c.client == e.notify ? c.server.name : c.client.name), std::nullopt, Phase::kStream);
      return;
    }
    if (e.notify == c.client) {
      if (conn_state_[c.id].client_departed) return;
      if (auto node = conn_state_[c.id].client_node) {
        Context ctx{now_, rng_};
        apply(*node, nodes_[*node]->on_connection_closed(ctx, c.id));
      }
      return;
    }
    if (auto it = index_.find(e.notify.name); it != index_.end()) {
      Context ctx{now_, rng_};
      apply(it->second, nodes_[it->second]->on_connection_closed(ctx, c.id));
    }
  }

  void check_invariants() {
    std::vector<std::string> found;
    for (const auto& n : nodes_) n->check_invariants(found);
    for (auto& v : found) violations_.push_back("t=" + std::to_string(to_micros(now_)) + " " + v);
  }

  Rng rng_;
  SimTime now_{0};
  bool started_ = false;
  std::uint64_t next_seq_ = 0;
  std::uint32_t next_connection_ = 1;
  std::priority_queue<Queued, std::vector<Queued>, std::greater<>> queue_;
  std::vector<std::unique_ptr<Node>> nodes_;
  std::map<std::string, std::size_t> index_;
  std::vector<std::optional<SimTime>> scheduled_wakeup_;
  std::vector<std::function<void(Simulator&)>> hooks_;
  std::deque<FrameRecord> records_;
  std::map<ConnectionId, Connection> connections_;
  std::map<ConnectionId, ConnectionState> conn_state_;
  Adversary adversary_;
  codec::TrustStore pki_;
  Trace trace_;
  std::vector<std::string> violations_;
};

}  // namespace doiplab::net
