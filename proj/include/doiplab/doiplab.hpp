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

#pragma once

#include "doiplab/bytes.hpp"
#include "doiplab/client.hpp"
#include "doiplab/codec.hpp"
#include "doiplab/config.hpp"
#include "doiplab/digest.hpp"
#include "doiplab/invariants.hpp"
#include "doiplab/lemmas.hpp"
#include "doiplab/network.hpp"
#include "doiplab/report.hpp"
#include "doiplab/scenarios.hpp"
#include "doiplab/server.hpp"
#include "doiplab/signature.hpp"
#include "doiplab/sim_types.hpp"
#include "doiplab/trace_io.hpp"
