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

// Attack scenarios S01-S11 plus a no-adversary baseline, the four security
// modes they run under, and the expected outcome of every (scenario, mode)
// cell.
//
// A scenario builds one or more labs (simulator + vehicle + testers +
// adversary program), runs them to a fixed horizon and reduces the traces to
// verdicts. The designated verdicts decide the outcome:
//
//   ATTACK_SUCCEEDS  a designated lemma fails
//   PARTIAL          authenticity fails on datagrams but holds on streams
//   MITIGATED        every designated lemma holds

#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "doiplab/client.hpp"
#include "doiplab/codec.hpp"
#include "doiplab/config.hpp"
#include "doiplab/invariants.hpp"
#include "doiplab/lemmas.hpp"
#include "doiplab/network.hpp"
#include "doiplab/server.hpp"
#include "doiplab/signature.hpp"

namespace doiplab::scenarios {

enum class SecurityMode { kPlain, kTls, kTlsClientAuth, kHardened };

inline constexpr std::array<SecurityMode, 4> kAllModes{SecurityMode::kPlain, SecurityMode::kTls,
                                                      SecurityMode::kTlsClientAuth, SecurityMode::kHardened};

inline std::string_view mode_name(SecurityMode m) {
  switch (m) {
    case SecurityMode::kPlain: return "plain";
    case SecurityMode::kTls: return "tls";
    case SecurityMode::kTlsClientAuth: return "tls_client_auth";
    case SecurityMode::kHardened: return "hardened";
  }
  return "?";
}

inline std::optional<SecurityMode> parse_mode(std::string_view text) {
  std::string s(text);
  for (auto& ch : s) ch = ch == '-' ? '_' : static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  for (auto m : kAllModes) {
    if (mode_name(m) == s) return m;
  }
  return std::nullopt;
}

inline bool at_least(SecurityMode m, SecurityMode floor) { return static_cast<int>(m) >= static_cast<int>(floor); }

enum class Outcome { kAttackSucceeds, kMitigated, kPartial };

inline std::string_view outcome_name(Outcome o) {
  switch (o) {
    case Outcome::kAttackSucceeds: return "ATTACK_SUCCEEDS";
    case Outcome::kMitigated: return "MITIGATED";
    case Outcome::kPartial: return "PARTIAL";
  }
  return "?";
}

/// The "mitigated?" reading of an outcome: no, yes or partly.
inline std::string_view mitigation_cell(Outcome o) {
  switch (o) {
    case Outcome::kAttackSucceeds: return "no";
    case Outcome::kMitigated: return "yes";
    case Outcome::kPartial: return "partly";
  }
  return "?";
}

class ScenarioConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr std::uint32_t kTesterCredential = 0x5A17C0DE;
/// Key material does not vary with the run seed.
inline constexpr std::uint64_t kKeySeed = 0x13400;
inline constexpr SimTime kHorizon{30s};

inline const std::vector<DiagnosticRequest>& default_job() {
  // Two ReadDataByIdentifier requests, one second apart.
  static const std::vector<DiagnosticRequest> job{{0x1010, {0x22, 0xF1, 0x90}}, {0x1010, {0x22, 0xF1, 0x8C}}};
  return job;
}

inline ServerConfig vehicle_config(SecurityMode mode) {
  ServerConfig c;
  c.requires_authentication = true;
  c.allowed_credentials = {kTesterCredential};
  if (at_least(mode, SecurityMode::kTls)) c.requires_secure = true;
  if (at_least(mode, SecurityMode::kTlsClientAuth)) {
    c.requires_client_certificate = true;
    c.auth_source = AuthSource::kChannelIdentity;
    c.allowed_identities = {"tester", "tester2"};
    c.handler_order = HandlerOrder::kAuthenticationFirst;
  }
  if (mode == SecurityMode::kHardened) c.sign_datagrams = true;
  return c;
}

inline ClientConfig tester_config(SecurityMode mode, std::string name = "tester", std::uint16_t sa = 0x0E80) {
  ClientConfig c;
  c.name = std::move(name);
  c.source_address = sa;
  c.target_vin = ServerConfig{}.vin;
  c.job = default_job();
  switch (mode) {
    case SecurityMode::kPlain: c.credential = kTesterCredential; break;
    case SecurityMode::kTls:
      c.credential = kTesterCredential;
      c.security = ChannelSecurity::kTls;
      break;
    case SecurityMode::kTlsClientAuth:
    case SecurityMode::kHardened:
      c.security = ChannelSecurity::kTlsMutual;
      c.identity = c.name;
      break;
  }
  if (mode == SecurityMode::kHardened) {
    c.require_signed_announcements = true;
    c.unified_retry = true;
  }
  return c;
}

/// One simulator execution kept after the simulator is gone.
struct RunRecord {
  std::string label;
  Trace trace;
  std::vector<std::string> invariant_violations;
  std::vector<net::Derivation> derivations;
};

/// A simulator with one vehicle, its testers and the adversary, wired for a mode.
class Lab {
 public:
  Lab(SecurityMode mode, std::uint64_t seed, ServerConfig vehicle, std::vector<ClientConfig> testers)
      : mode_(mode), sim_(std::make_unique<net::Simulator>(seed)) {
    if (!vehicle.requires_secure && at_least(mode, SecurityMode::kTls)) {
      throw ScenarioConfigError("mode " + std::string(mode_name(mode)) + " needs a vehicle requiring a secure channel");
    }
    const auto vehicle_key = codec::SigningKey::derive(vehicle.name, kKeySeed);
    codec::TrustStore trust;
    trust.add(vehicle_key);
    roles_.servers.push_back(vehicle.name);
    vehicle_ = &sim_->add(std::make_unique<Server>(std::move(vehicle)));
    vehicle_->set_signing(vehicle_key, trust);
    for (auto& t : testers) {
      if (t.identity) sim_->pki().add(codec::SigningKey::derive(*t.identity, kKeySeed));
      roles_.clients.push_back(t.name);
      auto& client = sim_->add(std::make_unique<Client>(std::move(t)));
      client.set_trust(trust);
      testers_.push_back(&client);
    }
    sim_->adversary().set_own_key(codec::SigningKey::derive("adversary", kKeySeed));
  }

  Lab(const Lab&) = delete;
  Lab& operator=(const Lab&) = delete;

  SecurityMode mode() const { return mode_; }
  net::Simulator& sim() { return *sim_; }
  net::Adversary& adversary() { return sim_->adversary(); }
  Server& vehicle() { return *vehicle_; }
  Client& tester(std::size_t i = 0) { return *testers_.at(i); }

  RunRecord finish(std::string label, SimTime horizon = kHorizon) {
    sim_->run(horizon);
    return RunRecord{std::move(label), sim_->trace(), invariants::check(*sim_, roles_),
                     sim_->adversary().derivations()};
  }

 private:
  SecurityMode mode_;
  std::unique_ptr<net::Simulator> sim_;
  Server* vehicle_ = nullptr;
  std::vector<Client*> testers_;
  invariants::Roles roles_;
};

struct NamedVerdict {
  std::string lemma;
  /// Run label or actor the verdict is about.
  std::string subject;
  lemmas::LemmaVerdict verdict;
  bool designated = false;
};

struct ScenarioResult {
  std::string scenario_id;
  SecurityMode mode = SecurityMode::kPlain;
  std::uint64_t seed = 0;
  Outcome outcome = Outcome::kMitigated;
  Outcome expected = Outcome::kMitigated;
  std::vector<NamedVerdict> verdicts;
  std::vector<RunRecord> runs;

  bool matches() const { return outcome == expected; }
};

struct Scenario {
  std::string id;
  std::string name;
  std::string violates;
  std::string target;
  std::string type;
  std::string capability;
  std::string phase;
  std::string description;
  /// Indexed by SecurityMode.
  std::array<Outcome, 4> expected{};
  std::function<void(ScenarioResult&)> body;

  Outcome expected_for(SecurityMode m) const { return expected[static_cast<std::size_t>(m)]; }
};

// --- adversary program building blocks -------------------------------------

namespace program {

template <class T>
const T* payload(const codec::Message* m) {
  return m ? std::get_if<T>(&m->payload) : nullptr;
}

inline bool from(const Frame& f, std::string_view name) { return f.claimed_source.name == name; }

inline void set_version(Bytes& wire, std::uint8_t v) {
  wire[0] = v;
  wire[1] = static_cast<std::uint8_t>(~v);
}

inline const Endpoint& vehicle() {
  static const Endpoint e = Endpoint::unicast("vehicle");
  return e;
}

inline Bytes announcement_wire(const codec::VehicleAnnouncement& a) { return codec::encode(codec::make(a)); }

/// Own connection to the vehicle: secure when the vehicle insists, plain
/// when the secure handshake is refused.
inline std::optional<ConnectionId> connect_to_vehicle(net::Simulator& sim, bool prefer_secure) {
  if (prefer_secure) {
    if (auto c = sim.adversary_connect(vehicle(), true)) return *c;
  }
  if (auto c = sim.adversary_connect(vehicle(), false)) return *c;
  return std::nullopt;
}

/// Takes over the tester's stream and injects `payload` under its identity.
inline bool hijack_and_inject(net::Simulator& sim, const Client& victim, codec::Payload p) {
  auto conn = victim.connection();
  if (!conn || !sim.hijack(*conn)) return false;
  sim.adversary_inject(victim.endpoint(), vehicle(), Channel::kStream, codec::encode(codec::make(std::move(p))), *conn);
  return true;
}

}  // namespace program

// --- verdict helpers -------------------------------------------------------

inline Outcome outcome_of(const ScenarioResult& r) {
  bool any_failed = false;
  for (const auto& v : r.verdicts) any_failed = any_failed || (v.designated && !v.verdict.holds);
  return any_failed ? Outcome::kAttackSucceeds : Outcome::kMitigated;
}

inline void designate(ScenarioResult& r, std::string lemma, std::string subject, lemmas::LemmaVerdict v) {
  r.verdicts.push_back(NamedVerdict{std::move(lemma), std::move(subject), std::move(v), true});
}

/// Secrecy and authenticity on every run, reported but not deciding.
inline void add_background_verdicts(ScenarioResult& r) {
  for (const auto& run : r.runs) {
    r.verdicts.push_back(NamedVerdict{"secrecy", run.label, lemmas::check_secrecy(run.trace), false});
    r.verdicts.push_back(NamedVerdict{"authenticity", run.label, lemmas::check_authenticity(run.trace), false});
  }
}

inline lemmas::LemmaVerdict indistinguishable(const ScenarioResult& r, const RunRecord& a, const RunRecord& b) {
  return lemmas::check_indistinguishability({r.scenario_id, a.trace}, {r.scenario_id, b.trace}, "adversary");
}

// --- the scenarios ---------------------------------------------------------

namespace detail {

using O = Outcome;
inline constexpr O AS = O::kAttackSucceeds;
inline constexpr O MIT = O::kMitigated;
inline constexpr O PART = O::kPartial;

inline void run_s01(ScenarioResult& r) {
  Lab lab(r.mode, r.seed, vehicle_config(r.mode), {tester_config(r.mode)});
  lab.adversary().add_modify(net::ModifyRule{
      "downgrade-version",
      [](const Frame& f, const codec::Message* m) {
        if (m == nullptr || m->version != codec::kDefaultVersion) return false;
        if (is_datagram(f.channel)) return program::from(f, "vehicle") && program::payload<codec::VehicleAnnouncement>(m);
        return program::from(f, "tester") && program::payload<codec::DiagnosticMessage>(m) != nullptr;
      },
      [](Bytes& wire) { program::set_version(wire, 0x02); }});
  r.runs.push_back(lab.finish("main"));
  const Trace& t = r.runs.back().trace;
  auto datagram = lemmas::check_authenticity(lemmas::phase_slice(t, Phase::kDatagram));
  auto stream = lemmas::check_authenticity(lemmas::phase_slice(t, Phase::kStream));
  const bool d_ok = datagram.holds;
  const bool s_ok = stream.holds;
  designate(r, "authenticity[datagram]", "main", std::move(datagram));
  designate(r, "authenticity[stream]", "main", std::move(stream));
  r.outcome = d_ok && s_ok ? MIT : (!d_ok && s_ok ? PART : AS);
}

inline void run_s02(ScenarioResult& r) {
  Lab lab(r.mode, r.seed, vehicle_config(r.mode), {tester_config(r.mode)});
  auto fake = codec::VehicleAnnouncement{ServerConfig{}.vin, 0x1FFF, {0x02, 0xAD, 0xAD, 0xAD, 0xAD, 0x01},
                                         {0x02, 0xAD, 0xAD, 0xAD, 0xAD, 0x00}, 0x00, codec::SyncStatus::kSynchronized};
  lab.adversary().add_reaction([fake](net::Simulator& sim, const Frame& f, const codec::Message* m) {
    if (!program::payload<codec::VehicleIdentificationRequest>(m) || f.claimed_source.group) return;
    // Signed under the adversary's own key; only a verifying client tells the difference.
    const auto& key = *sim.adversary().own_key();
    codec::TrustStore mine;
    mine.add(key);
    sim.adversary_inject(sim.adversary().endpoint(), f.claimed_source, Channel::kDatagramUnicast,
                         codec::encode_signed(codec::make(fake), key, mine));
  });
  r.runs.push_back(lab.finish("main"));
  designate(r, "authenticity", "main", lemmas::check_authenticity(r.runs.back().trace));
  r.outcome = outcome_of(r);
}

inline RunRecord run_s03_variant(SecurityMode mode, std::uint64_t seed, SyncRetryVariant variant, std::string label) {
  auto vc = vehicle_config(mode);
  vc.sync_status = codec::SyncStatus::kIncomplete;
  auto tc = tester_config(mode);
  tc.sync_retry = variant;
  Lab lab(mode, seed, vc, {tc});
  Server* vehicle = &lab.vehicle();
  lab.sim().at(SimTime{3s}, [vehicle](net::Simulator&) { vehicle->set_sync_status(codec::SyncStatus::kSynchronized); });
  return lab.finish(std::move(label));
}

inline void run_s03(ScenarioResult& r) {
  r.runs.push_back(run_s03_variant(r.mode, r.seed, SyncRetryVariant::kRetryAll, "retry_all"));
  r.runs.push_back(run_s03_variant(r.mode, r.seed, SyncRetryVariant::kRetrySingle, "retry_single"));
  designate(r, "indistinguishability", "retry_all~retry_single", indistinguishable(r, r.runs[0], r.runs[1]));
  r.outcome = outcome_of(r);
}

inline void run_s04(ScenarioResult& r) {
  Lab lab(r.mode, r.seed, vehicle_config(r.mode), {tester_config(r.mode)});
  const auto real = lab.vehicle().announcement();
  lab.adversary().add_reaction([real](net::Simulator& sim, const Frame& f, const codec::Message* m) {
    if (!program::payload<codec::VehicleIdentificationRequest>(m) || f.claimed_source.group) return;
    auto spoof = real;
    spoof.sync_status = codec::SyncStatus::kIncomplete;
    sim.adversary_inject(program::vehicle(), f.claimed_source, Channel::kDatagramUnicast,
                         program::announcement_wire(spoof));
  });
  r.runs.push_back(lab.finish("main"));
  designate(r, "availability", "tester", lemmas::check_session_availability(r.runs.back().trace, "tester"));
  r.outcome = outcome_of(r);
}

/// Opens an own connection at `when` and sends one activation request.
inline void schedule_activation_probe(Lab& lab, SimTime when, codec::RoutingActivationRequest req, bool prefer_secure) {
  lab.sim().at(when, [req, prefer_secure](net::Simulator& sim) {
    if (auto c = program::connect_to_vehicle(sim, prefer_secure)) {
      sim.adversary_send(*c, codec::encode(codec::make(req)));
    }
  });
}

inline void run_s05(ScenarioResult& r) {
  constexpr std::uint16_t kProbe = 0x0E81;
  for (bool known : {true, false}) {
    auto vc = vehicle_config(r.mode);
    if (known) vc.known_source_addresses.insert(kProbe);
    Lab lab(r.mode, r.seed, vc, {tester_config(r.mode)});
    schedule_activation_probe(lab, SimTime{3s}, {kProbe, 0x00, 0}, r.mode != SecurityMode::kPlain);
    r.runs.push_back(lab.finish(known ? "sa_known" : "sa_unknown"));
  }
  designate(r, "indistinguishability", "sa_known~sa_unknown", indistinguishable(r, r.runs[0], r.runs[1]));
  r.outcome = outcome_of(r);
}

inline void run_s06(ScenarioResult& r) {
  for (auto position : {SecureCheckPosition::kAfterConsent, SecureCheckPosition::kBeforeSourceAddress}) {
    auto vc = vehicle_config(r.mode);
    vc.secure_check = position;
    Lab lab(r.mode, r.seed, vc, {tester_config(r.mode)});
    // A plain request for the secure-only activation type, after the tester left.
    schedule_activation_probe(lab, SimTime{4s}, {0x0E80, 0xE0, 0}, false);
    r.runs.push_back(
        lab.finish(position == SecureCheckPosition::kAfterConsent ? "check_after_consent" : "check_before_sa"));
  }
  designate(r, "indistinguishability", "check_after_consent~check_before_sa",
            indistinguishable(r, r.runs[0], r.runs[1]));
  r.outcome = outcome_of(r);
}

inline void run_s07(ScenarioResult& r) {
  Lab lab(r.mode, r.seed, vehicle_config(r.mode), {tester_config(r.mode)});
  const Client* victim = &lab.tester();
  // The tester is activated and idle between its two requests at this point.
  lab.sim().at(SimTime{1200ms}, [victim](net::Simulator& sim) {
    program::hijack_and_inject(sim, *victim, codec::DiagnosticMessage{0x0E80, 0x1010, {0x31, 0x01, 0xFF, 0x00}});
  });
  r.runs.push_back(lab.finish("main"));
  designate(r, "authenticity", "main", lemmas::check_authenticity(r.runs.back().trace));
  r.outcome = outcome_of(r);
}

inline void run_s08(ScenarioResult& r) {
  constexpr std::uint16_t kProbe = 0x1011;
  for (bool known : {true, false}) {
    auto vc = vehicle_config(r.mode);
    if (!known) vc.known_target_addresses.erase(kProbe);
    Lab lab(r.mode, r.seed, vc, {tester_config(r.mode)});
    const Client* victim = &lab.tester();
    lab.sim().at(SimTime{1200ms}, [victim](net::Simulator& sim) {
      program::hijack_and_inject(sim, *victim, codec::DiagnosticMessage{0x0E80, kProbe, {0x3E, 0x00}});
    });
    r.runs.push_back(lab.finish(known ? "ta_known" : "ta_unknown"));
  }
  designate(r, "indistinguishability", "ta_known~ta_unknown", indistinguishable(r, r.runs[0], r.runs[1]));
  r.outcome = outcome_of(r);
}

inline ServerConfig single_socket_vehicle(SecurityMode mode) {
  auto vc = vehicle_config(mode);
  vc.max_open_sockets = 1;
  vc.known_source_addresses.insert(0x0E81);
  return vc;
}

inline void run_s09(ScenarioResult& r) {
  {
    // A second tester forces an alive check on the first; the answer is dropped.
    auto first = tester_config(r.mode);
    first.job.push_back({0x1010, {0x22, 0xF1, 0x87}});
    auto second = tester_config(r.mode, "tester2", 0x0E81);
    second.start_delay = 1200ms;
    Lab lab(r.mode, r.seed, single_socket_vehicle(r.mode), {first, second});
    lab.adversary().add_drop(net::DropRule{"drop-alive-response", [](const Frame& f, const codec::Message* m) {
                                             return program::from(f, "tester") &&
                                                    program::payload<codec::AliveCheckResponse>(m) != nullptr;
                                           }});
    r.runs.push_back(lab.finish("intercept"));
    designate(r, "availability", "tester", lemmas::check_session_availability(r.runs.back().trace, "tester"));
  }
  {
    // The first tester's stream is taken over; its socket is kept alive with forged answers.
    auto second = tester_config(r.mode, "tester2", 0x0E81);
    second.start_delay = 2500ms;
    Lab lab(r.mode, r.seed, single_socket_vehicle(r.mode), {tester_config(r.mode), second});
    lab.adversary().add_reaction([](net::Simulator& sim, const Frame& f, const codec::Message* m) {
      if (f.channel != Channel::kStream || !program::from(f, "vehicle") || f.destination.name != "tester") return;
      if (const auto* res = program::payload<codec::RoutingActivationResponse>(m)) {
        if (res->code == codec::ActivationCode::kSuccess) sim.hijack(*f.connection);
      } else if (program::payload<codec::AliveCheckRequest>(m)) {
        const auto conn = sim.connections().find(*f.connection);
        if (conn == sim.connections().end() || !conn->second.hijacked) return;
        sim.adversary_inject(f.destination, program::vehicle(), Channel::kStream,
                             codec::encode(codec::make(codec::AliveCheckResponse{0x0E80})), *f.connection);
      }
    });
    r.runs.push_back(lab.finish("inject"));
    designate(r, "availability", "tester2", lemmas::check_session_availability(r.runs.back().trace, "tester2"));
  }
  r.outcome = outcome_of(r);
}

inline net::ModifyRule power_mode_rewrite(codec::PowerMode from, codec::PowerMode to) {
  return net::ModifyRule{"power-mode",
                         [from](const Frame& f, const codec::Message* m) {
                           const auto* pm = program::payload<codec::PowerModeResponse>(m);
                           return program::from(f, "vehicle") && pm != nullptr && pm->status == from;
                         },
                         [to](Bytes& wire) { wire[codec::kHeaderSize] = static_cast<std::uint8_t>(to); }};
}

inline void run_s10(ScenarioResult& r) {
  auto tc = tester_config(r.mode);
  tc.check_power_mode = true;
  {
    Lab lab(r.mode, r.seed, vehicle_config(r.mode), {tc});
    lab.adversary().add_modify(power_mode_rewrite(codec::PowerMode::kReady, codec::PowerMode::kNotReady));
    r.runs.push_back(lab.finish("ready_to_not_ready"));
    designate(r, "availability", "tester", lemmas::check_session_availability(r.runs.back().trace, "tester"));
  }
  {
    auto vc = vehicle_config(r.mode);
    vc.power_mode = codec::PowerMode::kNotReady;
    Lab lab(r.mode, r.seed, vc, {tc});
    lab.adversary().add_modify(power_mode_rewrite(codec::PowerMode::kNotReady, codec::PowerMode::kReady));
    r.runs.push_back(lab.finish("not_ready_to_ready"));
    designate(r, "authenticity", "not_ready_to_ready", lemmas::check_authenticity(r.runs.back().trace));
  }
  r.outcome = outcome_of(r);
}

inline void run_s11(ScenarioResult& r) {
  auto vc = vehicle_config(r.mode);
  vc.max_data_size = 64;
  auto tc = tester_config(r.mode);
  tc.query_entity_status = true;
  Bytes block(200);
  for (std::size_t i = 0; i < block.size(); ++i) block[i] = static_cast<std::uint8_t>(i);
  block[0] = 0x36;  // TransferData
  tc.job = {{0x1010, block}};
  Lab lab(r.mode, r.seed, vc, {tc});
  lab.adversary().add_modify(net::ModifyRule{
      "inflate-max-data-size",
      [](const Frame& f, const codec::Message* m) {
        return program::from(f, "vehicle") && program::payload<codec::EntityStatusResponse>(m) != nullptr;
      },
      [](Bytes& wire) {
        Bytes inflated;
        put_u32(inflated, 0x00010000);
        std::copy(inflated.begin(), inflated.end(), wire.begin() + codec::kHeaderSize + 3);
      }});
  r.runs.push_back(lab.finish("main"));
  designate(r, "availability", "tester", lemmas::check_session_availability(r.runs.back().trace, "tester"));
  r.outcome = outcome_of(r);
}

inline void run_baseline(ScenarioResult& r) {
  Lab lab(r.mode, r.seed, vehicle_config(r.mode), {tester_config(r.mode)});
  r.runs.push_back(lab.finish("main"));
  designate(r, "availability", "tester", lemmas::check_session_availability(r.runs.back().trace, "tester"));
  r.outcome = outcome_of(r);
}

}  // namespace detail

/// The eleven vulnerability scenarios in table order.
inline const std::vector<Scenario>& all_scenarios() {
  using namespace detail;
  static const std::vector<Scenario> list{
      {"S01", "Weak protection of version number integrity", "integrity", "client + server", "downgrade",
       "inject packet", "header",
       "Only octets 0-1 of the 8-octet header are checked, and only against each other. The adversary rewrites "
       "the version of announcements and diagnostic messages to 0x02 and both sides accept it. A secure stream "
       "protects the diagnostic phase but not the datagram phase.",
       {AS, PART, PART, MIT}, run_s01},
      {"S02", "Missing authentication in vehicle identification", "authorization", "client",
       "illegitimate access", "inject packet", "vehicle identification",
       "Anyone can answer an identification request. The adversary replies with an announcement carrying the "
       "vehicle's VIN and its own address, and the tester accepts it.",
       {AS, AS, AS, MIT}, run_s02},
      {"S03", "Inconsistency in sync status", "confidentiality", "server", "fingerprinting", "read from network",
       "vehicle identification",
       "After an announcement with sync status incomplete, testers retry either at every entity or at the "
       "incomplete one only. A passive observer tells the two implementations apart.",
       {AS, AS, AS, MIT}, run_s03},
      {"S04", "Spoof failed sync status", "availability", "client", "denial of service", "inject packet",
       "vehicle identification",
       "The adversary answers every identification request with a copy of the vehicle's announcement whose sync "
       "status says incomplete. The tester keeps waiting and gives up.",
       {AS, AS, AS, MIT}, run_s04},
      {"S05", "Scanning for source addresses", "confidentiality", "server", "information leak", "inject packet",
       "routing activation",
       "A routing activation request for a known source address fails on authentication, an unknown one with "
       "UNKNOWN_SA. The adversary learns which tester addresses the vehicle accepts.",
       {AS, AS, MIT, MIT}, run_s05},
      {"S06", "Inconsistency in TLS activation", "confidentiality", "server", "fingerprinting",
       "read from network", "routing activation",
       "Implementations check the secure-channel requirement at different points of the activation handler. The "
       "answer to a plain request for a secure-only activation type reveals which one the vehicle runs.",
       {AS, AS, MIT, MIT}, run_s06},
      {"S07", "TCP hijacking during routing activation", "authorization", "TCP connection",
       "illegitimate access", "inject packet", "routing activation",
       "Routing activation binds the tester's source address to the connection, not to the sender. After "
       "hijacking an activated plain stream the adversary's diagnostic requests are routed as the tester's.",
       {AS, MIT, MIT, MIT}, run_s07},
      {"S08", "Scanning for target addresses", "confidentiality", "server", "information leak", "inject packet",
       "diagnostic communication",
       "A diagnostic message to an unknown target address is answered with NACK 0x03, a known one with an ACK. "
       "On a hijacked session the adversary maps the vehicle's ECUs.",
       {AS, MIT, MIT, MIT}, run_s08},
      {"S09", "Intercept/inject alive check messages", "availability", "server", "denial of service",
       "inject packet", "diagnostic communication",
       "Dropping a tester's alive check response makes the vehicle reclaim its socket. Forging responses on a "
       "hijacked stream keeps an abandoned socket occupied and locks other testers out.",
       {AS, MIT, MIT, MIT}, run_s09},
      {"S10", "Spoofing of power mode information", "integrity", "server", "illegitimate access",
       "inject packet", "diagnostic communication",
       "Rewriting the power mode response either stalls a tester at a ready vehicle or lets it proceed on a "
       "vehicle that is not ready.",
       {AS, MIT, MIT, MIT}, run_s10},
      {"S11", "Spoofing of status information", "availability", "server", "denial of service", "inject packet",
       "diagnostic communication",
       "A larger max data size in the entity status response makes the tester send requests the vehicle "
       "rejects with a header NACK and a closed socket.",
       {AS, MIT, MIT, MIT}, run_s11},
  };
  return list;
}

/// Honest tester and vehicle, adversary present but idle.
inline const Scenario& baseline() {
  static const Scenario s{"B00", "Baseline session", "none", "client + server", "none", "read from network",
                          "all", "A tester discovers the vehicle, activates routing and runs its job.",
                          {detail::MIT, detail::MIT, detail::MIT, detail::MIT}, detail::run_baseline};
  return s;
}

inline std::string slug(std::string_view name) {
  std::string out;
  for (char ch : name) {
    if (std::isalnum(static_cast<unsigned char>(ch))) {
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    } else if (!out.empty() && out.back() != '-') {
      out += '-';
    }
  }
  while (!out.empty() && out.back() == '-') out.pop_back();
  return out;
}

/// Looks a scenario up by id ("S05", case-insensitive) or by row name.
inline const Scenario* find_scenario(std::string_view key) {
  const std::string wanted = slug(key);
  auto match = [&](const Scenario& s) { return slug(s.id) == wanted || slug(s.name) == wanted; };
  for (const auto& s : all_scenarios()) {
    if (match(s)) return &s;
  }
  return match(baseline()) ? &baseline() : nullptr;
}

inline ScenarioResult run_scenario(const Scenario& scenario, SecurityMode mode, std::uint64_t seed) {
  ScenarioResult r;
  r.scenario_id = scenario.id;
  r.mode = mode;
  r.seed = seed;
  r.expected = scenario.expected_for(mode);
  scenario.body(r);
  add_background_verdicts(r);
  return r;
}

}  // namespace doiplab::scenarios
