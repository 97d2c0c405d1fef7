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

#include "doiplab/report.hpp"
#include "doiplab/scenarios.hpp"

namespace doiplab::scenarios {
namespace {

TEST(Registry, ElevenScenariosInOrder) {
  const auto& all = all_scenarios();
  ASSERT_EQ(all.size(), 11u);
  for (std::size_t i = 0; i < all.size(); ++i) {
    EXPECT_EQ(all[i].id, (i < 9 ? "S0" : "S") + std::to_string(i + 1));
  }
}

TEST(Registry, LookupByIdAndName) {
  EXPECT_EQ(find_scenario("S05"), &all_scenarios()[4]);
  EXPECT_EQ(find_scenario("s05"), &all_scenarios()[4]);
  EXPECT_EQ(find_scenario("Scanning for source addresses"), &all_scenarios()[4]);
  EXPECT_EQ(find_scenario("scanning-for-source-addresses"), &all_scenarios()[4]);
  EXPECT_EQ(find_scenario("B00"), &baseline());
  EXPECT_EQ(find_scenario("S99"), nullptr);
}

TEST(Registry, RowAttributes) {
  const Scenario& s05 = *find_scenario("S05");
  EXPECT_EQ(s05.violates, "confidentiality");
  EXPECT_EQ(s05.capability, "inject packet");
  const Scenario& s09 = *find_scenario("S09");
  EXPECT_EQ(s09.type, "denial of service");
  EXPECT_EQ(s09.violates, "availability");
  EXPECT_EQ(find_scenario("S03")->capability, "read from network");
}

TEST(Registry, ExpectedTlsColumn) {
  std::string column;
  for (const auto& s : all_scenarios()) {
    if (!column.empty()) column += ",";
    column += mitigation_cell(s.expected_for(SecurityMode::kTls));
  }
  EXPECT_EQ(column, "partly,no,no,no,no,no,yes,yes,yes,yes,yes");
}

int rank(Outcome o) {
  switch (o) {
    case Outcome::kAttackSucceeds: return 0;
    case Outcome::kPartial: return 1;
    case Outcome::kMitigated: return 2;
  }
  return -1;
}

// Stronger modes never do worse.
TEST(Registry, ExpectationsMonotoneInMode) {
  for (const auto& s : all_scenarios()) {
    for (std::size_t i = 1; i < kAllModes.size(); ++i) {
      EXPECT_LE(rank(s.expected_for(kAllModes[i - 1])), rank(s.expected_for(kAllModes[i]))) << s.id;
    }
    EXPECT_EQ(s.expected_for(SecurityMode::kPlain), Outcome::kAttackSucceeds) << s.id;
    EXPECT_EQ(s.expected_for(SecurityMode::kHardened), Outcome::kMitigated) << s.id;
  }
}

TEST(Modes, NamesRoundTrip) {
  for (auto m : kAllModes) EXPECT_EQ(parse_mode(mode_name(m)), m);
  EXPECT_FALSE(parse_mode("ssl"));
}

TEST(Lab, SecureModesNeedSecureVehicle) {
  EXPECT_THROW(Lab(SecurityMode::kTls, 1, vehicle_config(SecurityMode::kPlain), {tester_config(SecurityMode::kTls)}),
               ScenarioConfigError);
  EXPECT_NO_THROW(Lab(SecurityMode::kPlain, 1, vehicle_config(SecurityMode::kPlain), {tester_config(SecurityMode::kPlain)}));
}

TEST(Invariants, ExtraAnnouncementsFlagged) {
  auto vc = vehicle_config(SecurityMode::kPlain);
  vc.announce_count = 5;
  Lab lab(SecurityMode::kPlain, 1, vc, {tester_config(SecurityMode::kPlain)});
  const RunRecord rec = lab.finish("main");
  ASSERT_EQ(rec.invariant_violations.size(), 1u);
  EXPECT_NE(rec.invariant_violations[0].find("5 announcements"), std::string::npos);
}

TEST(Invariants, ClientNackFlagged) {
  Lab lab(SecurityMode::kPlain, 1, vehicle_config(SecurityMode::kPlain), {tester_config(SecurityMode::kPlain)});
  lab.sim().at(SimTime{100ms}, [&lab](net::Simulator& sim) {
    sim.act(lab.tester(), [](Context&) {
      Effects fx;
      fx.frames.push_back(Outgoing{Channel::kDatagramBroadcast, Endpoint::broadcast(), std::nullopt,
                                   codec::encode(codec::make(codec::GenericHeaderNack{}))});
      return fx;
    });
  });
  const RunRecord rec = lab.finish("main");
  ASSERT_FALSE(rec.invariant_violations.empty());
  EXPECT_NE(rec.invariant_violations[0].find("sent a NACK"), std::string::npos);
}

TEST(RunScenario, SyncSpoofPlainSucceeds) {
  const auto r = run_scenario(*find_scenario("S04"), SecurityMode::kPlain, 1);
  EXPECT_EQ(r.outcome, Outcome::kAttackSucceeds);
  bool availability_failed = false;
  for (const auto& v : r.verdicts) availability_failed |= v.designated && v.lemma == "availability" && !v.verdict.holds;
  EXPECT_TRUE(availability_failed);
}

TEST(RunScenario, AliveCheckTlsMitigated) {
  EXPECT_EQ(run_scenario(*find_scenario("S09"), SecurityMode::kTls, 1).outcome, Outcome::kMitigated);
}

TEST(RunScenario, DowngradeTlsPartial) {
  EXPECT_EQ(run_scenario(*find_scenario("S01"), SecurityMode::kTls, 1).outcome, Outcome::kPartial);
}

TEST(RunScenario, BothPowerModeDirectionsRun) {
  const auto r = run_scenario(*find_scenario("S10"), SecurityMode::kPlain, 1);
  ASSERT_EQ(r.runs.size(), 2u);
  int failed = 0;
  for (const auto& v : r.verdicts) failed += v.designated && !v.verdict.holds;
  EXPECT_EQ(failed, 2);
}

TEST(RunScenario, VerdictsCarryCounterexamples) {
  for (auto m : kAllModes) {
    for (const auto& s : all_scenarios()) {
      const auto r = run_scenario(s, m, 2);
      for (const auto& v : r.verdicts) {
        EXPECT_EQ(v.verdict.holds, !v.verdict.counterexample.has_value()) << s.id << " " << v.lemma;
      }
    }
  }
}

TEST(Matrix, SmallRunMatchesExpectations) {
  const MatrixReport report = run_matrix({1, 2});
  EXPECT_TRUE(report.deviations.empty());
  EXPECT_TRUE(report.soundness_issues.empty());
  const std::string csv = render_csv(report);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "scenario,plain,tls,tls_client_auth,hardened");
  EXPECT_NE(csv.find("S01,no,partly,partly,yes\n"), std::string::npos);
  EXPECT_NE(csv.find("S05,no,no,yes,yes\n"), std::string::npos);
}

TEST(Matrix, DeviationsReported) {
  Scenario wrong = *find_scenario("S07");
  wrong.expected = {Outcome::kMitigated, Outcome::kMitigated, Outcome::kMitigated, Outcome::kMitigated};
  const MatrixReport report = evaluate_matrix({&wrong}, {SecurityMode::kPlain}, {1});
  ASSERT_EQ(report.deviations.size(), 1u);
  EXPECT_EQ(report.deviations[0].actual, Outcome::kAttackSucceeds);
  EXPECT_NE(render_table(report).find("deviations: 1"), std::string::npos);
}

}  // namespace
}  // namespace doiplab::scenarios
