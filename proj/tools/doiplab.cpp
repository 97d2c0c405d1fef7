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

// doiplab: run attack scenarios, write traces and verdicts, print the
// mitigation matrix.
//
//   doiplab run --all --modes plain,tls --seeds 1-20 --out results
//   doiplab run S04 --mode hardened
//   doiplab explain S05
//   doiplab config vehicle.conf
//
// Exit status: 0 ok, 1 matrix deviation or nonconformant config, 2 usage.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "doiplab/doiplab.hpp"

namespace fs = std::filesystem;
using namespace doiplab;
using namespace doiplab::scenarios;

namespace {

constexpr int kUsage = 2;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  for (const auto& item : config_detail::split_list(s)) out.push_back(item);
  return out;
}

/// "1-20", "3,5,8" or a mix of both.
std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  for (const auto& item : split(text)) {
    const auto dash = item.find('-');
    try {
      if (dash == std::string::npos) {
        seeds.push_back(std::stoull(item));
        continue;
      }
      const auto lo = std::stoull(item.substr(0, dash));
      const auto hi = std::stoull(item.substr(dash + 1));
      if (hi < lo) throw UsageError("empty seed range " + item);
      for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
    } catch (const std::logic_error&) {
      throw UsageError("bad seed list: " + text);
    }
  }
  if (seeds.empty()) throw UsageError("no seeds given");
  return seeds;
}

struct RunConfig {
  std::vector<std::string> positional;
  std::string scenarios;
  bool all = false;
  std::string modes;
  std::string seeds = "1-20";
  std::string out;
  std::string format = "table";
  bool traces = false;
};

nlohmann::ordered_json verdict_json(const NamedVerdict& v) {
  nlohmann::ordered_json j;
  j["lemma"] = v.lemma;
  j["subject"] = v.subject;
  j["designated"] = v.designated;
  j["holds"] = v.verdict.holds;
  if (v.verdict.counterexample) {
    auto cx = nlohmann::ordered_json::array();
    for (const auto& e : *v.verdict.counterexample) cx.push_back(to_json(e));
    j["counterexample"] = cx;
  } else {
    j["counterexample"] = nullptr;
  }
  return j;
}

int cmd_run(const RunConfig& cfg) {
  std::vector<const Scenario*> selected;
  std::set<std::string> seen;
  auto select = [&](const std::string& key) {
    const Scenario* s = find_scenario(key);
    if (s == nullptr) throw UsageError("unknown scenario: " + key);
    if (seen.insert(s->id).second) selected.push_back(s);
  };
  if (cfg.all) {
    for (const auto& s : all_scenarios()) select(s.id);
  }
  for (const auto& key : split(cfg.scenarios)) select(key);
  for (const auto& key : cfg.positional) select(key);
  if (selected.empty()) throw UsageError("select scenarios with ids, --scenarios or --all");

  std::vector<SecurityMode> modes;
  if (cfg.modes.empty()) {
    modes.assign(kAllModes.begin(), kAllModes.end());
  } else {
    for (const auto& name : split(cfg.modes)) {
      auto m = parse_mode(name);
      if (!m) throw UsageError("unknown mode: " + name);
      if (std::find(modes.begin(), modes.end(), *m) == modes.end()) modes.push_back(*m);
    }
    // Column order is fixed regardless of the order given.
    std::sort(modes.begin(), modes.end());
  }
  if (modes.empty()) throw UsageError("no modes selected");
  const auto seeds = parse_seeds(cfg.seeds);

  std::string out = cfg.out;
  if (out.empty()) {
    const char* env = std::getenv("DOIPLAB_OUT");
    out = env != nullptr && *env != '\0' ? env : "doiplab-out";
  }
  const fs::path root(out);
  fs::create_directories(root / "verdicts");
  if (cfg.traces) fs::create_directories(root / "traces");

  std::map<std::string, nlohmann::ordered_json> verdicts;
  auto sink = [&](const ScenarioResult& r) {
    nlohmann::ordered_json entry;
    entry["mode"] = mode_name(r.mode);
    entry["seed"] = r.seed;
    entry["outcome"] = outcome_name(r.outcome);
    entry["expected"] = outcome_name(r.expected);
    auto vs = nlohmann::ordered_json::array();
    for (const auto& v : r.verdicts) vs.push_back(verdict_json(v));
    entry["verdicts"] = vs;
    verdicts[r.scenario_id].push_back(entry);
    if (!cfg.traces) return;
    for (const auto& run : r.runs) {
      const std::string file = r.scenario_id + "_" + std::string(mode_name(r.mode)) + "_seed" + std::to_string(r.seed) +
                               "_" + run.label + ".jsonl";
      std::ofstream f(root / "traces" / file, std::ios::binary);
      write_jsonl(f, run.trace);
    }
  };

  const MatrixReport report = evaluate_matrix(selected, modes, seeds, sink);

  for (const Scenario* s : selected) {
    nlohmann::ordered_json j;
    j["scenario"] = s->id;
    j["name"] = s->name;
    j["results"] = verdicts[s->id];
    std::ofstream f(root / "verdicts" / (s->id + ".json"), std::ios::binary);
    f << j.dump(2) << '\n';
  }
  const std::string text = cfg.format == "csv" ? render_csv(report) : render_table(report);
  {
    std::ofstream f(root / (cfg.format == "csv" ? "report.csv" : "report.txt"), std::ios::binary);
    f << text;
  }
  std::cout << text;
  if (!report.deviations.empty()) {
    std::cerr << "MatrixMismatch: " << report.deviations.size() << " deviating cell(s)\n";
    for (const auto& d : report.deviations) std::cerr << "  " << d.describe() << '\n';
    return 1;
  }
  return 0;
}

int cmd_explain(const std::string& id) {
  const Scenario* s = find_scenario(id);
  if (s == nullptr) {
    std::cerr << "unknown scenario: " << id << '\n';
    return kUsage;
  }
  std::cout << s->id << "  " << s->name << '\n'
            << "phase: " << s->phase << '\n'
            << "violates: " << s->violates << '\n'
            << "target: " << s->target << '\n'
            << "type: " << s->type << '\n'
            << "capability: " << s->capability << '\n'
            << "expected:";
  for (auto m : kAllModes) std::cout << ' ' << mode_name(m) << '=' << outcome_name(s->expected_for(m));
  std::cout << "\n\n" << s->description << '\n';
  return 0;
}

int cmd_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "cannot open " << path << '\n';
    return kUsage;
  }
  const auto kv = KeyValueFile::parse(in);
  in.clear();
  in.seekg(0);
  if (kv.section == "client") {
    const auto c = parse_client_config(in);
    std::cout << "client " << c.name << ": ok\n";
    return 0;
  }
  const auto c = parse_server_config(in);
  const auto issues = conformance_issues(c);
  if (issues.empty()) {
    std::cout << "server " << c.name << ": conformant\n";
    return 0;
  }
  std::cout << "server " << c.name << ": " << issues.size() << " conformance issue(s)\n";
  for (const auto& i : issues) std::cout << "  " << i << '\n';
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DoIP attack scenarios and mitigation matrix"};
  app.require_subcommand(1);

  RunConfig run;
  auto* run_cmd = app.add_subcommand("run", "Run scenarios and print the mitigation matrix");
  run_cmd->add_option("ids", run.positional, "Scenario ids or row names");
  run_cmd->add_option("--scenarios", run.scenarios, "Comma-separated scenario ids");
  run_cmd->add_flag("--all", run.all, "Run all eleven scenarios");
  auto* modes_opt = run_cmd->add_option("--modes", run.modes, "Comma-separated: plain,tls,tls_client_auth,hardened");
  run_cmd->add_option("--mode", run.modes, "Single mode")->excludes(modes_opt);
  run_cmd->add_option("--seeds", run.seeds, "Seed list or range, e.g. 1-20 or 3,5")->capture_default_str();
  run_cmd->add_option("--out", run.out, "Output directory (default: $DOIPLAB_OUT or ./doiplab-out)");
  run_cmd->add_option("--format", run.format, "Report format")
      ->check(CLI::IsMember({"table", "csv"}))
      ->capture_default_str();
  run_cmd->add_flag("--traces", run.traces, "Write one JSON-lines trace per run");

  std::string explain_id;
  auto* explain_cmd = app.add_subcommand("explain", "Describe a scenario");
  explain_cmd->add_option("id", explain_id, "Scenario id")->required();

  std::string config_path;
  auto* config_cmd = app.add_subcommand("config", "Parse an entity config file and check conformance");
  config_cmd->add_option("file", config_path, "Config file")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsage;
  }

  try {
    if (*run_cmd) return cmd_run(run);
    if (*explain_cmd) return cmd_explain(explain_id);
    if (*config_cmd) return cmd_config(config_path);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kUsage;
}
