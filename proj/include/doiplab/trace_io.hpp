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

// JSON-lines trace export. Field order is fixed so exported files can be
// compared byte for byte.

#pragma once

#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "doiplab/sim_types.hpp"

namespace doiplab {

inline nlohmann::ordered_json to_json(const TraceEvent& e) {
  nlohmann::ordered_json j;
  j["time"] = to_micros(e.time);
  j["kind"] = to_string(e.kind);
  j["actor"] = e.actor;
  if (e.frame_id) {
    j["frame_id"] = *e.frame_id;
  } else {
    j["frame_id"] = nullptr;
  }
  j["value"] = e.value;
  j["summary"] = e.summary;
  j["phase"] = to_string(e.phase);
  j["provenance"] = to_string(e.provenance);
  return j;
}

inline void write_jsonl(std::ostream& out, const Trace& trace) {
  for (const auto& e : trace) out << to_json(e).dump() << '\n';
}

}  // namespace doiplab
