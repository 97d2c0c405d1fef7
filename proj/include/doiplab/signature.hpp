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

// Header signatures. A signed message on the wire is the plain encoding
// followed by a trailer:
//
//   signer_id length (1 octet) | signer_id (ASCII) | Ed25519 signature (64)
//
// The signature covers exactly the 8 header octets.

#pragma once

#include <sodium.h>

#include <array>
#include <map>
#include <optional>
#include <string>

#include "doiplab/bytes.hpp"
#include "doiplab/codec.hpp"

namespace doiplab::codec {

inline void ensure_sodium() {
  static const bool ready = [] {
    if (sodium_init() < 0) throw std::runtime_error("libsodium initialisation failed");
    return true;
  }();
  (void)ready;
}

using PublicKey = std::array<std::uint8_t, crypto_sign_PUBLICKEYBYTES>;
using Signature = std::array<std::uint8_t, crypto_sign_BYTES>;

class SigningKey {
 public:
  /// Deterministic key pair derived from a 32-octet seed expanded from `seed`.
  static SigningKey derive(std::string id, std::uint64_t seed) {
    ensure_sodium();
    std::array<std::uint8_t, crypto_sign_SEEDBYTES> seed_bytes{};
    const Bytes material = to_bytes(id + "/" + std::to_string(seed));
    crypto_generichash(seed_bytes.data(), seed_bytes.size(), material.data(), material.size(), nullptr, 0);
    SigningKey k;
    k.id_ = std::move(id);
    crypto_sign_seed_keypair(k.public_.data(), k.secret_.data(), seed_bytes.data());
    return k;
  }

  const std::string& id() const { return id_; }
  const PublicKey& public_key() const { return public_; }

  Signature sign(ByteView data) const {
    Signature sig{};
    crypto_sign_detached(sig.data(), nullptr, data.data(), data.size(), secret_.data());
    return sig;
  }

 private:
  std::string id_;
  PublicKey public_{};
  std::array<std::uint8_t, crypto_sign_SECRETKEYBYTES> secret_{};
};

class TrustStore {
 public:
  void add(const std::string& signer_id, const PublicKey& key) { keys_[signer_id] = key; }
  void add(const SigningKey& key) { add(key.id(), key.public_key()); }
  bool contains(const std::string& signer_id) const { return keys_.count(signer_id) != 0; }
  const PublicKey* find(const std::string& signer_id) const {
    auto it = keys_.find(signer_id);
    return it == keys_.end() ? nullptr : &it->second;
  }

 private:
  std::map<std::string, PublicKey> keys_;
};

struct SignedHeader {
  Header header;
  Signature signature{};
  std::string signer_id;
  bool operator==(const SignedHeader&) const = default;
};

enum class VerifyFailure { kUnknownSigner, kBadSignature, kMalformed };

inline std::string_view to_string(VerifyFailure f) {
  switch (f) {
    case VerifyFailure::kUnknownSigner: return "UnknownSigner";
    case VerifyFailure::kBadSignature: return "BadSignature";
    case VerifyFailure::kMalformed: return "Malformed";
  }
  return "?";
}

/// accept when empty, otherwise the rejection reason.
using VerifyResult = std::optional<VerifyFailure>;

inline SignedHeader sign_header(const Header& header, const SigningKey& key, const TrustStore& trust) {
  const PublicKey* bound = trust.find(key.id());
  if (bound == nullptr || *bound != key.public_key()) {
    throw CodecError(CodecErrc::kUnknownKey, "signing key not in trust store: " + key.id());
  }
  const auto octets = header.octets();
  return SignedHeader{header, key.sign(octets), key.id()};
}

inline VerifyResult verify_header(const SignedHeader& signed_header, const TrustStore& trust) {
  ensure_sodium();
  const PublicKey* key = trust.find(signed_header.signer_id);
  if (key == nullptr) return VerifyFailure::kUnknownSigner;
  const auto octets = signed_header.header.octets();
  if (crypto_sign_verify_detached(signed_header.signature.data(), octets.data(), octets.size(),
                                  key->data()) != 0) {
    return VerifyFailure::kBadSignature;
  }
  return std::nullopt;
}

inline Bytes encode_trailer(const SignedHeader& s) {
  Bytes out;
  put_u8(out, static_cast<std::uint8_t>(s.signer_id.size()));
  out.insert(out.end(), s.signer_id.begin(), s.signer_id.end());
  put_array(out, s.signature);
  return out;
}

/// Encodes `m` and appends a header signature trailer.
inline Bytes encode_signed(const Message& m, const SigningKey& key, const TrustStore& trust) {
  Bytes wire = encode(m);
  const SignedHeader s = sign_header(Header::from_octets(wire), key, trust);
  const Bytes trailer = encode_trailer(s);
  wire.insert(wire.end(), trailer.begin(), trailer.end());
  return wire;
}

/// A wire split into the plain message octets and an optional signature.
struct SplitWire {
  ByteView message;
  std::optional<SignedHeader> signature;
};

/// Splits off a trailer when octets remain after the declared payload.
/// Returns nullopt if trailing octets are present but do not parse.
inline std::optional<SplitWire> split_signed(ByteView wire) {
  if (wire.size() < kHeaderSize) return SplitWire{wire, std::nullopt};
  const Header h = Header::from_octets(wire);
  const std::size_t end = kHeaderSize + std::size_t{h.payload_length};
  if (end >= wire.size()) return SplitWire{wire, std::nullopt};
  ByteView trailer = wire.subspan(end);
  const std::size_t id_len = trailer[0];
  if (trailer.size() != 1 + id_len + crypto_sign_BYTES) return std::nullopt;
  SignedHeader s;
  s.header = h;
  s.signer_id.assign(trailer.begin() + 1, trailer.begin() + 1 + static_cast<std::ptrdiff_t>(id_len));
  s.signature = get_array<crypto_sign_BYTES>(trailer, 1 + id_len);
  return SplitWire{wire.first(end), s};
}

}  // namespace doiplab::codec
