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

// Security properties as predicates over a finished trace. Each check sees
// one execution; it is a test oracle, not a proof over all executions.

#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "doiplab/sim_types.hpp"

namespace doiplab::lemmas {

struct LemmaVerdict {
  bool holds = true;
  /// Present exactly when `holds` is false.
  std::optional<std::vector<TraceEvent>> counterexample;

  static LemmaVerdict ok() { return {}; }
  static LemmaVerdict violated(std::vector<TraceEvent> witness) { return {false, std::move(witness)}; }
};

/// A trace tagged with the scenario that produced it.
struct RunTrace {
  std::string scenario_id;
  Trace events;
};

class MismatchedScenarios : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Restricts a trace to one protocol phase.
inline Trace phase_slice(const Trace& trace, Phase phase) {
  Trace out;
  for (const auto& e : trace) {
    if (e.phase == phase) out.push_back(e);
  }
  return out;
}

/// No value marked Secret is ever known to the adversary.
inline LemmaVerdict check_secrecy(const Trace& trace) {
  std::map<std::string, const TraceEvent*> known;
  for (const auto& e : trace) {
    if (e.kind == EventKind::kAdversaryKnows) known.emplace(e.value, &e);
  }
  for (const auto& e : trace) {
    if (e.kind != EventKind::kSecret) continue;
    if (auto it = known.find(e.value); it != known.end()) return LemmaVerdict::violated({e, *it->second});
  }
  return LemmaVerdict::ok();
}

/// Every Authentic(b, m) is preceded by Send(b, m).
inline LemmaVerdict check_authenticity(const Trace& trace) {
  std::set<std::pair<std::string, std::string>> sent;
  for (const auto& e : trace) {
    if (e.kind == EventKind::kSend) {
      sent.emplace(e.actor, e.value);
    } else if (e.kind == EventKind::kAuthentic && !sent.count({e.actor, e.value})) {
      return LemmaVerdict::violated({e});
    }
  }
  return LemmaVerdict::ok();
}

/// `expected_actor` completed its session.
inline LemmaVerdict check_session_availability(const Trace& trace, const std::string& expected_actor) {
  std::vector<TraceEvent> witness;
  for (const auto& e : trace) {
    if (e.kind == EventKind::kSessionOutcome && e.actor == expected_actor) {
      if (e.value == "success") return LemmaVerdict::ok();
      witness.push_back(e);
    } else if (e.kind == EventKind::kSlotClosed) {
      witness.push_back(e);
    }
  }
  return LemmaVerdict::violated(std::move(witness));
}

/// What `observer` saw, in order, without timestamps.
inline std::vector<TraceEvent> observer_view(const Trace& trace, const std::string& observer) {
  std::vector<TraceEvent> out;
  for (const auto& e : trace) {
    if (e.kind == EventKind::kFingerprintObservation && e.actor == observer) out.push_back(e);
  }
  return out;
}

/// The observer's projections of two runs are equal.
inline LemmaVerdict check_indistinguishability(const RunTrace& a, const RunTrace& b, const std::string& observer) {
  if (a.scenario_id != b.scenario_id) {
    throw MismatchedScenarios("traces come from " + a.scenario_id + " and " + b.scenario_id);
  }
  const auto va = observer_view(a.events, observer);
  const auto vb = observer_view(b.events, observer);
  const std::size_t n = std::min(va.size(), vb.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (va[i].value != vb[i].value) return LemmaVerdict::violated({va[i], vb[i]});
  }
  if (va.size() != vb.size()) return LemmaVerdict::violated({va.size() > n ? va[n] : vb[n]});
  return LemmaVerdict::ok();
}

}  // namespace doiplab::lemmas
