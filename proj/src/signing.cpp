#include "relay/signing.hpp"

namespace relay {

KeyPair KeyedHashScheme::keygen(const SignerId& id) const {
    Bytes idb = to_bytes(id);
    return KeyPair{id, hash_parts("sig:key", {ByteView(idb)})};
}

Signature KeyedHashScheme::sign(const KeyPair& key, ByteView message) const {
    Digest mac = hash_parts("sig:mac", {key.secret.view(), message});
    Signature s;
    s.bytes = mac.bytes;
    return s;
}

bool KeyedHashScheme::verify(const SignerId& signer, ByteView message, const Signature& sig) const {
    return sign(keygen(signer), message) == sig;
}

const SignatureScheme& default_scheme() {
    static KeyedHashScheme scheme;
    return scheme;
}

}  // namespace relay
