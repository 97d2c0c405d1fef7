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

// Mitigation matrix: every selected scenario under every selected mode and
// seed, reduced to one cell per (scenario, mode), rendered as a table or CSV.
//
// CSV columns, stable: scenario,plain,tls,tls_client_auth,hardened. A cell
// is "yes", "no" or "partly" (mitigated?), "unstable" when seeds disagree,
// and empty for modes that were not run.

#pragma once

#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "doiplab/scenarios.hpp"

namespace doiplab::scenarios {

struct Deviation {
  std::string scenario_id;
  SecurityMode mode = SecurityMode::kPlain;
  std::uint64_t seed = 0;
  Outcome expected = Outcome::kMitigated;
  Outcome actual = Outcome::kMitigated;

  std::string describe() const {
    return scenario_id + "/" + std::string(mode_name(mode)) + "/seed " + std::to_string(seed) + ": expected " +
           std::string(outcome_name(expected)) + ", got " + std::string(outcome_name(actual));
  }
};

struct Cell {
  std::optional<Outcome> outcome;
  bool stable = true;
};

struct MatrixReport {
  std::vector<const Scenario*> scenarios;
  std::vector<SecurityMode> modes;
  std::vector<std::uint64_t> seeds;
  std::map<std::pair<std::string, SecurityMode>, Cell> cells;
  std::vector<Deviation> deviations;
  /// Protocol invariant violations and non-derivable adversary frames, with run context.
  std::vector<std::string> soundness_issues;

  const Cell* cell(const std::string& id, SecurityMode m) const {
    auto it = cells.find({id, m});
    return it == cells.end() ? nullptr : &it->second;
  }
};

class MatrixMismatch : public std::runtime_error {
 public:
  explicit MatrixMismatch(MatrixReport report)
      : std::runtime_error(message(report)), report_(std::move(report)) {}
  const MatrixReport& report() const { return report_; }
  const std::vector<Deviation>& deviations() const { return report_.deviations; }

 private:
  static std::string message(const MatrixReport& r) {
    std::string s = std::to_string(r.deviations.size()) + " deviating cell(s)";
    for (const auto& d : r.deviations) s += "\n  " + d.describe();
    return s;
  }
  MatrixReport report_;
};

inline std::vector<std::uint64_t> default_seeds(std::size_t n = 20) {
  std::vector<std::uint64_t> seeds(n);
  std::iota(seeds.begin(), seeds.end(), 1);
  return seeds;
}

using ResultSink = std::function<void(const ScenarioResult&)>;

/// Runs the selection; never throws on deviations.
inline MatrixReport evaluate_matrix(std::vector<const Scenario*> scenarios, std::vector<SecurityMode> modes,
                                    std::vector<std::uint64_t> seeds, const ResultSink& sink = {}) {
  MatrixReport report{std::move(scenarios), std::move(modes), std::move(seeds), {}, {}, {}};
  for (const Scenario* s : report.scenarios) {
    for (SecurityMode m : report.modes) {
      Cell& cell = report.cells[{s->id, m}];
      for (std::uint64_t seed : report.seeds) {
        ScenarioResult r = run_scenario(*s, m, seed);
        if (!cell.outcome) {
          cell.outcome = r.outcome;
        } else if (*cell.outcome != r.outcome) {
          cell.stable = false;
        }
        if (!r.matches()) report.deviations.push_back({s->id, m, seed, r.expected, r.outcome});
        const std::string where = s->id + "/" + std::string(mode_name(m)) + "/seed " + std::to_string(seed);
        for (const auto& run : r.runs) {
          for (const auto& v : run.invariant_violations) report.soundness_issues.push_back(where + "/" + run.label + ": " + v);
          for (const auto& d : run.derivations) {
            if (!d.derivable) {
              report.soundness_issues.push_back(where + "/" + run.label + ": frame " + std::to_string(d.frame) + " " +
                                                d.action + " not derivable (" + d.detail + ")");
            }
          }
        }
        if (sink) sink(r);
      }
    }
  }
  return report;
}

/// All eleven scenarios under all four modes. Throws MatrixMismatch on any deviation.
inline MatrixReport run_matrix(const std::vector<std::uint64_t>& seeds) {
  std::vector<const Scenario*> all;
  for (const auto& s : all_scenarios()) all.push_back(&s);
  MatrixReport report = evaluate_matrix(std::move(all), {kAllModes.begin(), kAllModes.end()}, seeds);
  if (!report.deviations.empty()) throw MatrixMismatch(std::move(report));
  return report;
}

inline std::string cell_text(const MatrixReport& r, const std::string& id, SecurityMode m) {
  const Cell* c = r.cell(id, m);
  if (c == nullptr || !c->outcome) return "";
  if (!c->stable) return "unstable";
  return std::string(mitigation_cell(*c->outcome));
}

inline std::string render_csv(const MatrixReport& r) {
  std::ostringstream out;
  out << "scenario";
  for (auto m : kAllModes) out << ',' << mode_name(m);
  out << '\n';
  for (const Scenario* s : r.scenarios) {
    out << s->id;
    for (auto m : kAllModes) out << ',' << cell_text(r, s->id, m);
    out << '\n';
  }
  return out.str();
}

inline std::string render_table(const MatrixReport& r) {
  std::size_t name_width = 13;
  for (const Scenario* s : r.scenarios) name_width = std::max(name_width, s->name.size());
  auto pad = [](std::string s, std::size_t w) {
    if (s.size() < w) s.append(w - s.size(), ' ');
    return s;
  };
  std::ostringstream out;
  out << pad("scenario", 10) << pad("vulnerability", name_width + 2);
  for (auto m : kAllModes) out << pad(std::string(mode_name(m)), 17);
  out << '\n';
  for (const Scenario* s : r.scenarios) {
    out << pad(s->id, 10) << pad(s->name, name_width + 2);
    for (auto m : kAllModes) {
      std::string text = cell_text(r, s->id, m);
      if (text.empty()) text = "-";
      out << pad(text, 17);
    }
    out << '\n';
  }
  out << '\n' << "seeds: " << r.seeds.size() << ", deviations: " << r.deviations.size() << '\n';
  for (const auto& d : r.deviations) out << "  " << d.describe() << '\n';
  if (!r.soundness_issues.empty()) {
    out << "soundness issues: " << r.soundness_issues.size() << '\n';
    for (const auto& i : r.soundness_issues) out << "  " << i << '\n';
  }
  return out.str();
}

}  // namespace doiplab::scenarios
