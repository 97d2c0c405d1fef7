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

#include "doiplab/lemmas.hpp"
#include "doiplab/scenarios.hpp"

namespace doiplab::lemmas {
namespace {

using scenarios::SecurityMode;

TraceEvent ev(EventKind k, std::string actor, std::string value, Phase phase = Phase::kStream) {
  return TraceEvent{SimTime{0}, k, std::move(actor), std::nullopt, std::move(value), "", phase, Provenance::kHonest};
}

/// Replays the predicate on a counterexample: it must still violate.
void expect_sound(const LemmaVerdict& v, const std::function<LemmaVerdict(const Trace&)>& check) {
  ASSERT_FALSE(v.holds);
  ASSERT_TRUE(v.counterexample);
  EXPECT_FALSE(check(*v.counterexample).holds);
}

TEST(Secrecy, NoSecretsHoldsVacuously) {
  EXPECT_TRUE(check_secrecy({ev(EventKind::kAdversaryKnows, "adversary", "d1")}).holds);
  EXPECT_TRUE(check_secrecy({}).holds);
}

TEST(Secrecy, KnownSecretFails) {
  const Trace t{ev(EventKind::kAdversaryKnows, "adversary", "d1"), ev(EventKind::kSecret, "vehicle", "d1")};
  const auto v = check_secrecy(t);
  expect_sound(v, check_secrecy);
  EXPECT_EQ(v.counterexample->size(), 2u);
}

TEST(Secrecy, KnowledgeAfterSecretStillFails) {
  EXPECT_FALSE(check_secrecy({ev(EventKind::kSecret, "vehicle", "d1"), ev(EventKind::kAdversaryKnows, "adversary", "d1")}).holds);
}

TEST(Authenticity, EmptyTraceHolds) {
  const auto v = check_authenticity({});
  EXPECT_TRUE(v.holds);
  EXPECT_FALSE(v.counterexample);
}

TEST(Authenticity, NeedsEarlierSendFromClaimedActor) {
  EXPECT_TRUE(check_authenticity({ev(EventKind::kSend, "tester", "m"), ev(EventKind::kAuthentic, "tester", "m")}).holds);
  expect_sound(check_authenticity({ev(EventKind::kAuthentic, "tester", "m"), ev(EventKind::kSend, "tester", "m")}),
               check_authenticity);
  expect_sound(check_authenticity({ev(EventKind::kSend, "adversary", "m"), ev(EventKind::kAuthentic, "tester", "m")}),
               check_authenticity);
}

TEST(Availability, SuccessHolds) {
  EXPECT_TRUE(check_session_availability({ev(EventKind::kSessionOutcome, "tester", "success")}, "tester").holds);
}

TEST(Availability, MissingOrFailedSessionFails) {
  EXPECT_FALSE(check_session_availability({}, "tester").holds);
  const Trace t{ev(EventKind::kSlotClosed, "vehicle", "alive_check_timeout"),
                ev(EventKind::kSessionOutcome, "tester", "failure")};
  const auto v = check_session_availability(t, "tester");
  ASSERT_FALSE(v.holds);
  ASSERT_EQ(v.counterexample->size(), 2u);
  EXPECT_EQ((*v.counterexample)[0].kind, EventKind::kSlotClosed);
  EXPECT_FALSE(check_session_availability({ev(EventKind::kSessionOutcome, "tester2", "success")}, "tester").holds);
}

TEST(Indistinguishability, Reflexive) {
  const Trace t{ev(EventKind::kFingerprintObservation, "adversary", "x"),
                ev(EventKind::kFingerprintObservation, "adversary", "y")};
  EXPECT_TRUE(check_indistinguishability({"S03", t}, {"S03", t}, "adversary").holds);
}

TEST(Indistinguishability, IgnoresOtherObserversAndTime) {
  Trace a{ev(EventKind::kFingerprintObservation, "adversary", "x"), ev(EventKind::kSend, "tester", "1")};
  Trace b{ev(EventKind::kFingerprintObservation, "adversary", "x"), ev(EventKind::kSend, "tester", "2")};
  b[0].time = SimTime{5s};
  EXPECT_TRUE(check_indistinguishability({"S03", a}, {"S03", b}, "adversary").holds);
}

TEST(Indistinguishability, DifferentViewFails) {
  const Trace a{ev(EventKind::kFingerprintObservation, "adversary", "x")};
  const Trace b{ev(EventKind::kFingerprintObservation, "adversary", "z")};
  const Trace c{ev(EventKind::kFingerprintObservation, "adversary", "x"),
                ev(EventKind::kFingerprintObservation, "adversary", "y")};
  const auto v = check_indistinguishability({"S03", a}, {"S03", b}, "adversary");
  ASSERT_FALSE(v.holds);
  EXPECT_EQ(v.counterexample->size(), 2u);
  EXPECT_FALSE(check_indistinguishability({"S03", a}, {"S03", c}, "adversary").holds);
}

TEST(Indistinguishability, MismatchedScenariosThrow) {
  EXPECT_THROW(check_indistinguishability({"S03", {}}, {"S05", {}}, "adversary"), MismatchedScenarios);
}

TEST(PhaseSlice, KeepsOnlyPhase) {
  const Trace t{ev(EventKind::kSend, "a", "1", Phase::kDatagram), ev(EventKind::kSend, "a", "2", Phase::kStream)};
  const Trace d = phase_slice(t, Phase::kDatagram);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].value, "1");
}

// --- on simulated runs -------------------------------------------------------

const scenarios::RunRecord& first_run(const scenarios::ScenarioResult& r) { return r.runs.front(); }

scenarios::ScenarioResult run(const char* id, SecurityMode m, std::uint64_t seed = 1) {
  return scenarios::run_scenario(*scenarios::find_scenario(id), m, seed);
}

TEST(LemmasOnRuns, PlainDiagnosticsLeakAndSecureDoNot) {
  const auto plain = run("S07", SecurityMode::kPlain);
  const auto secure = run("S07", SecurityMode::kTls);
  expect_sound(check_secrecy(first_run(plain).trace), check_secrecy);
  expect_sound(check_authenticity(first_run(plain).trace), check_authenticity);
  EXPECT_TRUE(check_secrecy(first_run(secure).trace).holds);
  EXPECT_TRUE(check_authenticity(phase_slice(first_run(secure).trace, Phase::kStream)).holds);
}

TEST(LemmasOnRuns, InjectedAnnouncementFailsAuthenticity) {
  const auto r = run("S02", SecurityMode::kPlain);
  const auto v = check_authenticity(first_run(r).trace);
  expect_sound(v, check_authenticity);
  EXPECT_EQ(v.counterexample->front().phase, Phase::kDatagram);
}

TEST(LemmasOnRuns, SyncSpoofBreaksAvailability) {
  const auto r = run("S04", SecurityMode::kPlain);
  EXPECT_FALSE(check_session_availability(first_run(r).trace, "tester").holds);
}

TEST(LemmasOnRuns, BaselineAvailable) {
  for (auto m : scenarios::kAllModes) {
    const auto r = scenarios::run_scenario(scenarios::baseline(), m, 3);
    EXPECT_TRUE(check_session_availability(first_run(r).trace, "tester").holds) << scenarios::mode_name(m);
    EXPECT_TRUE(check_authenticity(first_run(r).trace).holds) << scenarios::mode_name(m);
  }
}

TEST(LemmasOnRuns, AliveDropClosesSlotFirst) {
  const auto r = run("S09", SecurityMode::kPlain);
  const auto& intercept = r.runs.front();
  const auto v = check_session_availability(intercept.trace, "tester");
  ASSERT_FALSE(v.holds);
  ASSERT_FALSE(v.counterexample->empty());
  EXPECT_EQ(v.counterexample->front().kind, EventKind::kSlotClosed);
  EXPECT_EQ(v.counterexample->front().value, "alive_check_timeout");
}

TEST(LemmasOnRuns, RetryVariantsFingerprintable) {
  const auto r = run("S03", SecurityMode::kPlain);
  ASSERT_EQ(r.runs.size(), 2u);
  EXPECT_FALSE(check_indistinguishability({"S03", r.runs[0].trace}, {"S03", r.runs[1].trace}, "adversary").holds);
  const auto h = run("S03", SecurityMode::kHardened);
  EXPECT_TRUE(check_indistinguishability({"S03", h.runs[0].trace}, {"S03", h.runs[1].trace}, "adversary").holds);
}

TEST(LemmasOnRuns, AuthFirstHidesKnownSourceAddresses) {
  const auto r = run("S05", SecurityMode::kTlsClientAuth);
  ASSERT_EQ(r.runs.size(), 2u);
  EXPECT_TRUE(check_indistinguishability({"S05", r.runs[0].trace}, {"S05", r.runs[1].trace}, "adversary").holds);
}

}  // namespace
}  // namespace doiplab::lemmas
