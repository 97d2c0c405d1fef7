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

#include "doiplab/client.hpp"
#include "doiplab/network.hpp"
#include "doiplab/server.hpp"

namespace doiplab {
namespace {

using namespace codec;

ClientConfig tester() {
  ClientConfig c;
  c.job = {DiagnosticRequest{0x1010, Bytes{0x22, 0xF1, 0x90}}};
  return c;
}

struct Session {
  explicit Session(ServerConfig vc = {}, ClientConfig cc = tester(), std::uint64_t seed = 1) : sim(seed) {
    vehicle = &sim.add(std::make_unique<Server>(std::move(vc)));
    client = &sim.add(std::make_unique<Client>(std::move(cc)));
  }

  std::vector<std::string> outcomes() const {
    std::vector<std::string> out;
    for (const auto& e : sim.trace()) {
      if (e.kind == EventKind::kSessionOutcome && e.actor == "tester") out.push_back(e.value + ":" + e.summary);
    }
    return out;
  }

  /// Channels of the tester's identification requests, in order.
  std::vector<Channel> identification_channels() const {
    std::vector<Channel> out;
    for (const auto& r : sim.frames()) {
      if (r.frame.claimed_source.name != "tester") continue;
      auto m = decode(r.frame.wire);
      if (m && std::holds_alternative<VehicleIdentificationRequest>(m->payload)) out.push_back(r.frame.channel);
    }
    return out;
  }

  net::Simulator sim;
  Server* vehicle = nullptr;
  Client* client = nullptr;
};

TEST(Client, HappyPath) {
  Session s;
  s.sim.run(30s);
  EXPECT_EQ(s.outcomes(), std::vector<std::string>{"success:job_complete"});
  EXPECT_EQ(s.client->phase(), ClientPhase::kDone);
  EXPECT_EQ(s.client->discovery_retries(), 0);
  EXPECT_TRUE(s.sim.invariant_violations().empty());
}

TEST(Client, LargeRequestSplitAtAdvertisedSize) {
  ServerConfig vc;
  vc.max_data_size = 64;
  ClientConfig cc = tester();
  cc.query_entity_status = true;
  cc.job = {DiagnosticRequest{0x1010, Bytes(150, 0x36)}};
  Session s(vc, cc);
  s.sim.run(30s);
  EXPECT_EQ(s.outcomes(), std::vector<std::string>{"success:job_complete"});
  int chunks = 0;
  for (const auto& r : s.sim.frames()) {
    auto m = decode(r.frame.wire);
    if (m && std::holds_alternative<DiagnosticMessage>(m->payload)) {
      EXPECT_LE(r.frame.wire.size(), kHeaderSize + 64);
      ++chunks;
    }
  }
  EXPECT_EQ(chunks, 3);  // 60 + 60 + 30
}

TEST(Client, IncompleteSyncDefersAndRetries) {
  ServerConfig vc;
  vc.sync_status = SyncStatus::kIncomplete;
  Session s(vc);
  s.sim.at(3s, [&s](net::Simulator&) { s.vehicle->set_sync_status(SyncStatus::kSynchronized); });
  s.sim.run(30s);
  EXPECT_EQ(s.outcomes(), std::vector<std::string>{"success:job_complete"});
  EXPECT_GE(s.client->discovery_retries(), 1);
  EXPECT_GE(s.identification_channels().size(), 2u);
}

TEST(Client, IncompleteForeverGivesUp) {
  ServerConfig vc;
  vc.sync_status = SyncStatus::kIncomplete;
  Session s(vc);
  s.sim.run(60s);
  EXPECT_EQ(s.outcomes(), std::vector<std::string>{"failure:discovery_incomplete"});
}

TEST(Client, RetryVariantsDiffer) {
  auto channels = [](SyncRetryVariant v, bool unified) {
    ServerConfig vc;
    vc.sync_status = SyncStatus::kIncomplete;
    ClientConfig cc = tester();
    cc.sync_retry = v;
    cc.unified_retry = unified;
    Session s(vc, cc);
    s.sim.at(3s, [&s](net::Simulator&) { s.vehicle->set_sync_status(SyncStatus::kSynchronized); });
    s.sim.run(30s);
    return s.identification_channels();
  };
  const auto all = channels(SyncRetryVariant::kRetryAll, false);
  const auto single = channels(SyncRetryVariant::kRetrySingle, false);
  ASSERT_GE(all.size(), 2u);
  ASSERT_GE(single.size(), 2u);
  EXPECT_EQ(all[1], Channel::kDatagramBroadcast);
  EXPECT_EQ(single[1], Channel::kDatagramUnicast);
  EXPECT_EQ(channels(SyncRetryVariant::kRetryAll, true), single);
}

TEST(Client, SecureRequiredUpgradesChannel) {
  ServerConfig vc;
  vc.requires_secure = true;
  Session s(vc);
  s.sim.run(30s);
  EXPECT_EQ(s.outcomes(), std::vector<std::string>{"success:job_complete"});
  ASSERT_EQ(s.sim.connections().size(), 2u);
  EXPECT_FALSE(s.sim.connections().begin()->second.secure);
  EXPECT_TRUE(s.sim.connections().rbegin()->second.secure);
}

TEST(Client, SecureRequiredWithoutCapabilityFails) {
  ServerConfig vc;
  vc.requires_secure = true;
  ClientConfig cc = tester();
  cc.secure_capable = false;
  Session s(vc, cc);
  s.sim.run(30s);
  EXPECT_EQ(s.outcomes(), std::vector<std::string>{"failure:activation_0x06"});
}

TEST(Client, NotReadyVehicleStopsSession) {
  ServerConfig vc;
  vc.power_mode = PowerMode::kNotReady;
  ClientConfig cc = tester();
  cc.check_power_mode = true;
  Session s(vc, cc);
  s.sim.run(30s);
  EXPECT_EQ(s.outcomes(), std::vector<std::string>{"failure:power_mode_not_ready"});
}

TEST(Client, UnsignedAnnouncementsIgnoredWhenSignaturesRequired) {
  ClientConfig cc = tester();
  cc.require_signed_announcements = true;
  Session s({}, cc);
  s.sim.run(60s);
  EXPECT_EQ(s.outcomes(), std::vector<std::string>{"failure:no_vehicle_found"});
}

TEST(Client, SignedAnnouncementsAccepted) {
  ServerConfig vc;
  vc.sign_datagrams = true;
  ClientConfig cc = tester();
  cc.require_signed_announcements = true;
  Session s(vc, cc);
  const auto key = SigningKey::derive("vehicle", 5);
  TrustStore trust;
  trust.add(key);
  s.vehicle->set_signing(key, trust);
  s.client->set_trust(trust);
  s.sim.run(30s);
  EXPECT_EQ(s.outcomes(), std::vector<std::string>{"success:job_complete"});
}

TEST(Client, WrongVinIgnored) {
  ClientConfig cc = tester();
  cc.target_vin = make_vin("XXXXXXXXXXXXXXXXX");
  Session s({}, cc);
  s.sim.run(60s);
  EXPECT_EQ(s.outcomes(), std::vector<std::string>{"failure:no_vehicle_found"});
}

TEST(Client, RejectedActivationReportsCode) {
  ClientConfig cc = tester();
  cc.source_address = 0x0E99;
  Session s({}, cc);
  s.sim.run(30s);
  EXPECT_EQ(s.outcomes(), std::vector<std::string>{"failure:activation_0x00"});
}

}  // namespace
}  // namespace doiplab
