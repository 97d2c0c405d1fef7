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

#include <sodium.h>

#include <string>

#include "doiplab/bytes.hpp"
#include "doiplab/signature.hpp"

namespace doiplab {

/// Stable 128-bit BLAKE2b content hash, hex encoded.
inline std::string digest(ByteView data) {
  codec::ensure_sodium();
  std::array<std::uint8_t, 16> out{};
  crypto_generichash(out.data(), out.size(), data.data(), data.size(), nullptr, 0);
  return to_hex(out);
}

inline std::string digest(std::string_view s) {
  return digest(ByteView(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

}  // namespace doiplab
