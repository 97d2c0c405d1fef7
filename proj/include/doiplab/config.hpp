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

// Entity configuration and its plain-text key-value file format.
//
//   # comment
//   [server]
//   name = vehicle
//   logical_address = 0x1001
//   known_source_addresses = 0x0E80, 0x0E81
//   general_inactivity_ms = 300000
//
// One section per file; every key is listed in docs/config.md.

#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "doiplab/codec.hpp"
#include "doiplab/sim_types.hpp"

namespace doiplab {

enum class HandlerOrder { kSourceAddressFirst, kAuthenticationFirst };
/// Where the secure-channel requirement is checked in the activation handler.
enum class SecureCheckPosition { kAfterConsent, kBeforeSourceAddress };
enum class SyncRetryVariant { kRetryAll, kRetrySingle };
enum class AuthSource { kToken, kChannelIdentity };

struct ServerTimers {
  SimDuration initial_inactivity = 2s;
  SimDuration general_inactivity = 300s;
  SimDuration alive_check_deadline = 500ms;
  SimDuration announce_interval = 500ms;
  SimDuration response_jitter_max = 500ms;
};

struct ServerConfig {
  std::string name = "vehicle";
  std::uint8_t protocol_version = codec::kDefaultVersion;
  std::uint16_t logical_address = 0x1001;
  codec::Vin vin = codec::make_vin("WDOIPLAB000000001");
  codec::EntityId eid{0x02, 0x00, 0x00, 0x00, 0x10, 0x01};
  codec::EntityId gid{0x02, 0x00, 0x00, 0x00, 0x10, 0x00};
  std::uint8_t further_action = 0x00;
  codec::SyncStatus sync_status = codec::SyncStatus::kSynchronized;
  std::set<std::uint16_t> known_source_addresses{0x0E80};
  std::set<std::uint16_t> known_target_addresses{0x1001, 0x1010, 0x1011};
  codec::NodeType node_type = codec::NodeType::kGateway;
  std::uint8_t max_open_sockets = 2;
  std::uint32_t max_data_size = 4096;
  codec::PowerMode power_mode = codec::PowerMode::kReady;

  bool requires_secure = false;
  /// Activation types that need a secure channel even when requires_secure is off.
  std::set<std::uint8_t> secure_activation_types{0xE0};
  bool requires_authentication = false;
  AuthSource auth_source = AuthSource::kToken;
  std::set<std::uint32_t> allowed_credentials;
  std::set<std::string> allowed_identities;
  /// Refuse secure handshakes that do not present a registered client identity.
  bool requires_client_certificate = false;
  bool requires_user_consent = false;
  HandlerOrder handler_order = HandlerOrder::kSourceAddressFirst;
  SecureCheckPosition secure_check = SecureCheckPosition::kAfterConsent;
  /// Append a header signature to every datagram this entity sends.
  bool sign_datagrams = false;

  int announce_count = 3;
  ServerTimers timers;
};

struct DiagnosticRequest {
  std::uint16_t target_address = 0;
  Bytes user_data;
};

enum class ChannelSecurity { kPlain, kTls, kTlsMutual };

struct ClientConfig {
  std::string name = "tester";
  std::uint8_t protocol_version = codec::kDefaultVersion;
  std::uint16_t source_address = 0x0E80;
  std::uint8_t activation_type = 0x00;
  std::uint32_t credential = 0;
  /// Session begins this long after the simulation starts.
  SimDuration start_delay{0};
  /// Identity presented during a mutually authenticated handshake.
  std::optional<std::string> identity;
  ChannelSecurity security = ChannelSecurity::kPlain;
  /// Upgrade to a secure channel when the server answers SECURE_REQUIRED.
  bool secure_capable = true;
  std::optional<codec::Vin> target_vin;
  /// Accept only announcements carrying a valid header signature.
  bool require_signed_announcements = false;

  SyncRetryVariant sync_retry = SyncRetryVariant::kRetryAll;
  /// Ignores `sync_retry` and always retries at the incomplete entity only.
  bool unified_retry = false;
  SimDuration vehicle_discovery_timer = 5s;
  int max_discovery_retries = 3;
  SimDuration collection_window = 700ms;
  SimDuration response_timeout = 2s;
  SimDuration consent_retry_interval = 1s;
  int max_consent_retries = 3;

  bool check_power_mode = false;
  bool query_entity_status = false;
  std::vector<DiagnosticRequest> job;
  SimDuration request_interval = 1s;
  /// Close the connection once the job completed.
  bool depart_after_job = true;
};

/// Returns human-readable conformance violations; empty when conformant.
inline std::vector<std::string> conformance_issues(const ServerConfig& c) {
  std::vector<std::string> issues;
  if (c.announce_count != 3) {
    issues.push_back("announce_count is " + std::to_string(c.announce_count) + ", conformant value is 3");
  }
  if (c.max_open_sockets < 1) issues.push_back("max_open_sockets must be at least 1");
  if (!codec::is_known_version(c.protocol_version)) issues.push_back("unknown protocol_version");
  return issues;
}

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace config_detail {

inline std::string trim(std::string s) {
  auto not_space = [](unsigned char ch) { return !std::isspace(ch); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& v, std::uint64_t max) {
  std::uint64_t out = 0;
  const char* first = v.data();
  const char* last = v.data() + v.size();
  int base = 10;
  if (v.size() > 2 && v[0] == '0' && (v[1] == 'x' || v[1] == 'X')) {
    first += 2;
    base = 16;
  }
  auto [ptr, ec] = std::from_chars(first, last, out, base);
  if (ec != std::errc{} || ptr != last || out > max) {
    throw ConfigError("invalid value for " + key + ": '" + v + "'");
  }
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  throw ConfigError("invalid boolean for " + key + ": '" + v + "'");
}

template <std::size_t N>
std::array<std::uint8_t, N> parse_hex_array(const std::string& key, std::string v) {
  v.erase(std::remove(v.begin(), v.end(), ':'), v.end());
  if (v.size() != 2 * N) throw ConfigError(key + " needs " + std::to_string(N) + " hex octets");
  std::array<std::uint8_t, N> a{};
  for (std::size_t i = 0; i < N; ++i) {
    a[i] = static_cast<std::uint8_t>(parse_uint(key, "0x" + v.substr(2 * i, 2), 0xff));
  }
  return a;
}

}  // namespace config_detail

/// Parsed `key = value` pairs of a single section.
struct KeyValueFile {
  std::string section;
  std::map<std::string, std::string> values;

  static KeyValueFile parse(std::istream& in) {
    KeyValueFile f;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      line = config_detail::trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": bad section header");
        if (!f.section.empty()) throw ConfigError("line " + std::to_string(lineno) + ": only one section per file");
        f.section = config_detail::trim(line.substr(1, line.size() - 2));
        continue;
      }
      auto eq = line.find('=');
      if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
      std::string key = config_detail::trim(line.substr(0, eq));
      std::string value = config_detail::trim(line.substr(eq + 1));
      if (!f.values.emplace(key, value).second) {
        throw ConfigError("line " + std::to_string(lineno) + ": duplicate key " + key);
      }
    }
    return f;
  }
};

inline ServerConfig parse_server_config(std::istream& in) {
  using namespace config_detail;
  const KeyValueFile f = KeyValueFile::parse(in);
  if (f.section != "server") throw ConfigError("expected [server] section");
  ServerConfig c;
  auto ms = [](std::uint64_t v) { return SimDuration{static_cast<std::int64_t>(v) * 1000}; };
  for (const auto& [key, v] : f.values) {
    if (key == "name") c.name = v;
    else if (key == "protocol_version") c.protocol_version = static_cast<std::uint8_t>(parse_uint(key, v, 0xff));
    else if (key == "logical_address") c.logical_address = static_cast<std::uint16_t>(parse_uint(key, v, 0xffff));
    else if (key == "vin") {
      if (v.size() != 17) throw ConfigError("vin must have 17 characters");
      c.vin = codec::make_vin(v);
    } else if (key == "eid") c.eid = parse_hex_array<6>(key, v);
    else if (key == "gid") c.gid = parse_hex_array<6>(key, v);
    else if (key == "further_action") c.further_action = static_cast<std::uint8_t>(parse_uint(key, v, 0xff));
    else if (key == "sync_status") {
      if (v == "synchronized") c.sync_status = codec::SyncStatus::kSynchronized;
      else if (v == "incomplete") c.sync_status = codec::SyncStatus::kIncomplete;
      else throw ConfigError("sync_status must be synchronized or incomplete");
    } else if (key == "known_source_addresses" || key == "known_target_addresses") {
      auto& set = key == "known_source_addresses" ? c.known_source_addresses : c.known_target_addresses;
      set.clear();
      for (const auto& item : split_list(v)) set.insert(static_cast<std::uint16_t>(parse_uint(key, item, 0xffff)));
    } else if (key == "node_type") {
      if (v == "gateway") c.node_type = codec::NodeType::kGateway;
      else if (v == "node") c.node_type = codec::NodeType::kNode;
      else throw ConfigError("node_type must be gateway or node");
    } else if (key == "max_open_sockets") c.max_open_sockets = static_cast<std::uint8_t>(parse_uint(key, v, 0xff));
    else if (key == "max_data_size") c.max_data_size = static_cast<std::uint32_t>(parse_uint(key, v, 0xffffffff));
    else if (key == "power_mode") {
      if (v == "ready") c.power_mode = codec::PowerMode::kReady;
      else if (v == "not_ready") c.power_mode = codec::PowerMode::kNotReady;
      else if (v == "not_supported") c.power_mode = codec::PowerMode::kNotSupported;
      else throw ConfigError("power_mode must be ready, not_ready or not_supported");
    } else if (key == "requires_secure") c.requires_secure = parse_bool(key, v);
    else if (key == "secure_activation_types") {
      c.secure_activation_types.clear();
      for (const auto& item : split_list(v)) c.secure_activation_types.insert(static_cast<std::uint8_t>(parse_uint(key, item, 0xff)));
    } else if (key == "requires_authentication") c.requires_authentication = parse_bool(key, v);
    else if (key == "auth_source") {
      if (v == "token") c.auth_source = AuthSource::kToken;
      else if (v == "channel_identity") c.auth_source = AuthSource::kChannelIdentity;
      else throw ConfigError("auth_source must be token or channel_identity");
    } else if (key == "allowed_credentials") {
      c.allowed_credentials.clear();
      for (const auto& item : split_list(v)) c.allowed_credentials.insert(static_cast<std::uint32_t>(parse_uint(key, item, 0xffffffff)));
    } else if (key == "allowed_identities") {
      auto items = split_list(v);
      c.allowed_identities = std::set<std::string>(items.begin(), items.end());
    } else if (key == "requires_client_certificate") c.requires_client_certificate = parse_bool(key, v);
    else if (key == "requires_user_consent") c.requires_user_consent = parse_bool(key, v);
    else if (key == "handler_order") {
      if (v == "sa_first") c.handler_order = HandlerOrder::kSourceAddressFirst;
      else if (v == "auth_first") c.handler_order = HandlerOrder::kAuthenticationFirst;
      else throw ConfigError("handler_order must be sa_first or auth_first");
    } else if (key == "secure_check") {
      if (v == "after_consent") c.secure_check = SecureCheckPosition::kAfterConsent;
      else if (v == "before_source_address") c.secure_check = SecureCheckPosition::kBeforeSourceAddress;
      else throw ConfigError("secure_check must be after_consent or before_source_address");
    } else if (key == "sign_datagrams") c.sign_datagrams = parse_bool(key, v);
    else if (key == "announce_count") c.announce_count = static_cast<int>(parse_uint(key, v, 255));
    else if (key == "initial_inactivity_ms") c.timers.initial_inactivity = ms(parse_uint(key, v, 1u << 31));
    else if (key == "general_inactivity_ms") c.timers.general_inactivity = ms(parse_uint(key, v, 1u << 31));
    else if (key == "alive_check_deadline_ms") c.timers.alive_check_deadline = ms(parse_uint(key, v, 1u << 31));
    else if (key == "announce_interval_ms") c.timers.announce_interval = ms(parse_uint(key, v, 1u << 31));
    else if (key == "response_jitter_max_ms") c.timers.response_jitter_max = ms(parse_uint(key, v, 1u << 31));
    else throw ConfigError("unknown server key: " + key);
  }
  return c;
}

inline ClientConfig parse_client_config(std::istream& in) {
  using namespace config_detail;
  const KeyValueFile f = KeyValueFile::parse(in);
  if (f.section != "client") throw ConfigError("expected [client] section");
  ClientConfig c;
  auto ms = [](std::uint64_t v) { return SimDuration{static_cast<std::int64_t>(v) * 1000}; };
  for (const auto& [key, v] : f.values) {
    if (key == "name") c.name = v;
    else if (key == "protocol_version") c.protocol_version = static_cast<std::uint8_t>(parse_uint(key, v, 0xff));
    else if (key == "source_address") c.source_address = static_cast<std::uint16_t>(parse_uint(key, v, 0xffff));
    else if (key == "activation_type") c.activation_type = static_cast<std::uint8_t>(parse_uint(key, v, 0xff));
    else if (key == "start_delay_ms") c.start_delay = ms(parse_uint(key, v, 1u << 31));
    else if (key == "credential") c.credential = static_cast<std::uint32_t>(parse_uint(key, v, 0xffffffff));
    else if (key == "identity") c.identity = v;
    else if (key == "security") {
      if (v == "plain") c.security = ChannelSecurity::kPlain;
      else if (v == "tls") c.security = ChannelSecurity::kTls;
      else if (v == "tls_mutual") c.security = ChannelSecurity::kTlsMutual;
      else throw ConfigError("security must be plain, tls or tls_mutual");
    } else if (key == "secure_capable") c.secure_capable = parse_bool(key, v);
    else if (key == "target_vin") {
      if (v.size() != 17) throw ConfigError("target_vin must have 17 characters");
      c.target_vin = codec::make_vin(v);
    } else if (key == "require_signed_announcements") c.require_signed_announcements = parse_bool(key, v);
    else if (key == "sync_retry") {
      if (v == "retry_all") c.sync_retry = SyncRetryVariant::kRetryAll;
      else if (v == "retry_single") c.sync_retry = SyncRetryVariant::kRetrySingle;
      else throw ConfigError("sync_retry must be retry_all or retry_single");
    } else if (key == "unified_retry") c.unified_retry = parse_bool(key, v);
    else if (key == "vehicle_discovery_timer_ms") c.vehicle_discovery_timer = ms(parse_uint(key, v, 1u << 31));
    else if (key == "max_discovery_retries") c.max_discovery_retries = static_cast<int>(parse_uint(key, v, 1000));
    else if (key == "collection_window_ms") c.collection_window = ms(parse_uint(key, v, 1u << 31));
    else if (key == "response_timeout_ms") c.response_timeout = ms(parse_uint(key, v, 1u << 31));
    else if (key == "check_power_mode") c.check_power_mode = parse_bool(key, v);
    else if (key == "query_entity_status") c.query_entity_status = parse_bool(key, v);
    else if (key == "request_interval_ms") c.request_interval = ms(parse_uint(key, v, 1u << 31));
    else if (key == "consent_retry_interval_ms") c.consent_retry_interval = ms(parse_uint(key, v, 1u << 31));
    else if (key == "max_consent_retries") c.max_consent_retries = static_cast<int>(parse_uint(key, v, 1000));
    else if (key == "depart_after_job") c.depart_after_job = parse_bool(key, v);
    else if (key == "job") {
      // target:hexdata, ...
      c.job.clear();
      for (const auto& item : split_list(v)) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw ConfigError("job entries are target:hexdata");
        DiagnosticRequest req;
        req.target_address = static_cast<std::uint16_t>(parse_uint(key, trim(item.substr(0, colon)), 0xffff));
        const std::string hex = trim(item.substr(colon + 1));
        if (hex.empty() || hex.size() % 2 != 0) throw ConfigError("job data needs whole hex octets: " + item);
        for (std::size_t i = 0; i < hex.size(); i += 2) {
          req.user_data.push_back(static_cast<std::uint8_t>(parse_uint(key, "0x" + hex.substr(i, 2), 0xff)));
        }
        c.job.push_back(std::move(req));
      }
    } else throw ConfigError("unknown client key: " + key);
  }
  return c;
}

}  // namespace doiplab
