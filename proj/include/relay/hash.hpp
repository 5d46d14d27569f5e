#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>

#include "relay/bytes.hpp"

namespace relay {

/** Fixed-width 32-byte hash output, comparable as a big-endian unsigned integer. */
struct Digest {
    std::array<std::uint8_t, 32> bytes{};

    auto operator<=>(const Digest&) const = default;

    ByteView view() const { return ByteView(bytes.data(), bytes.size()); }
    std::string hex() const { return to_hex(view()); }
    static Digest from_hex(std::string_view h);
};

/** SHA-256 of raw bytes. */
Digest sha256(ByteView data);

/**
 * Domain-separated hash: SHA-256 over tag || 0x00 || (be64(len) || part)*.
 * Every canonical hash in the protocol goes through this so that leaf/internal/
 * signature/seed preimages can never collide across domains.
 */
Digest hash_parts(std::string_view tag, std::initializer_list<ByteView> parts);

/**
 * Relay digest: hash of the canonical serialization of a signed
 * (request, response) pair. Both inputs must be non-empty.
 */
Digest relay_digest(ByteView signed_request, ByteView signed_response);

/**
 * Collision threshold for a given mining probability.
 *
 * threshold = floor(probability * 2^256), clamped to >= 1. probability = 1 is
 * represented with all_collide since 2^256 does not fit in 32 bytes.
 * Probabilities are clamped to [2^-64, 1] so the threshold never rounds to
 * zero and mining never becomes impossible.
 */
struct Difficulty {
    double probability = 1.0;
    std::array<std::uint8_t, 32> threshold{};  // big-endian; meaningful when !all_collide
    bool all_collide = true;

    static constexpr double kMinProbability = 0x1p-64;

    static Difficulty from_probability(double p);
};

/** True iff the digest, read as a big-endian integer, falls below the threshold. */
bool check_collision(const Digest& d, const Difficulty& diff);

}  // namespace relay
