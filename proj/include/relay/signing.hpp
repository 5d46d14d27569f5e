#pragma once

#include <string>
#include <string_view>

#include "relay/hash.hpp"

namespace relay {

using SignerId = std::string;

struct Signature {
    std::array<std::uint8_t, 32> bytes{};

    bool operator==(const Signature&) const = default;
    ByteView view() const { return ByteView(bytes.data(), bytes.size()); }
};

struct KeyPair {
    SignerId id;
    Digest secret;
};

/**
 * Signing abstraction used by relay construction and proof verification.
 * Settlement only needs round-trip verify semantics, so the default scheme is
 * a deterministic keyed hash whose secrets are derived from the signer id.
 * An asymmetric scheme can be slotted in behind the same interface.
 */
class SignatureScheme {
public:
    virtual ~SignatureScheme() = default;
    virtual KeyPair keygen(const SignerId& id) const = 0;
    virtual Signature sign(const KeyPair& key, ByteView message) const = 0;
    virtual bool verify(const SignerId& signer, ByteView message, const Signature& sig) const = 0;
};

class KeyedHashScheme final : public SignatureScheme {
public:
    KeyPair keygen(const SignerId& id) const override;
    Signature sign(const KeyPair& key, ByteView message) const override;
    bool verify(const SignerId& signer, ByteView message, const Signature& sig) const override;
};

/** Process-wide default scheme instance. */
const SignatureScheme& default_scheme();

}  // namespace relay
