#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "relay/hash.hpp"
#include "relay/signing.hpp"
#include "relay/smst.hpp"

namespace relay {

struct SessionParams {
    std::uint32_t servicers_per_session = 12;
    std::int64_t window_blocks = 4;
    std::uint64_t ttrm = 1000;       // token-to-relay multiplier
    double relay_accuracy = 0.2;     // oversubscription margin on the per-servicer bucket
};

/** Deterministic binding of (application, service, block window) to a servicer set. */
struct SessionHeader {
    std::string app_id;
    std::string service_id;
    std::int64_t start_height = 0;
    std::int64_t end_height = 0;  // exclusive
    std::vector<SignerId> servicers;
    Digest seed;

    Digest id() const;
    bool contains_height(std::int64_t h) const { return h >= start_height && h < end_height; }
    bool has_servicer(const SignerId& s) const;
};

struct InsufficientServicersError : std::runtime_error {
    InsufficientServicersError()
        : std::runtime_error("session: not enough eligible servicers") {}
};

/**
 * Servicer set sampled without replacement from the eligible list, keyed by
 * H(block_hash || app_id || service_id). Same inputs always give the same set.
 */
SessionHeader new_session(const Digest& block_hash, std::int64_t start_height,
                          const std::string& app_id, const std::string& service_id,
                          const std::vector<SignerId>& eligible, const SessionParams& params);

struct TokenBudget {
    std::uint64_t tokens_per_servicer = 0;  // b
    std::uint64_t app_stake = 0;
    std::uint64_t ttrm = 0;
    std::uint32_t servicers_per_session = 0;
    double relay_accuracy = 0.0;
};

struct ZeroBudgetError : std::runtime_error {
    ZeroBudgetError() : std::runtime_error("session: computed token budget is zero") {}
};

/** b = floor((app_stake * ttrm / servicers_per_session) * (1 + relay_accuracy)) */
TokenBudget compute_budget(std::uint64_t app_stake, std::uint64_t ttrm,
                           std::uint32_t servicers_per_session, double relay_accuracy);

/** One signed RPC request/response pair; the digest is its trie key. */
struct Relay {
    std::string app_id;
    std::string service_id;
    std::int64_t session_start = 0;
    std::int64_t session_end = 0;
    std::int64_t height = 0;
    std::uint64_t nonce = 0;
    Bytes request_body;
    Signature app_signature;
    SignerId servicer_id;
    Bytes response_body;
    Signature servicer_signature;

    Bytes signed_request_bytes() const;   // canonical request incl. app signature
    Bytes signed_response_bytes() const;  // canonical response incl. servicer signature
    Bytes request_preimage() const;       // what the application signs
    Bytes response_preimage() const;      // what the servicer signs
    Digest digest() const;

    /** Leaf value: the serialized signed pair. */
    Bytes serialize() const;
    static std::optional<Relay> parse(ByteView data);
};

Relay make_relay(const SignatureScheme& scheme, const SessionHeader& session,
                 const SignerId& servicer, std::int64_t height, std::uint64_t nonce,
                 ByteView request_body, ByteView response_body);

enum class Admission {
    rejected_invalid,
    rejected_unpayable,
    rejected_exhausted,
    served_no_collision,
    served_and_inserted,
};

const char* to_string(Admission a);

/** Per-(servicer, session) mining state: token bucket plus the commitment trie. */
struct ServicerSessionState {
    SignerId servicer;
    SessionHeader session;
    std::uint64_t token_count = 0;
    SumTrie trie;
    bool frozen = false;          // set once a claim is submitted
    std::uint64_t served_payable = 0;

    ServicerSessionState(SignerId s, SessionHeader h, std::uint64_t tokens, int key_width = 256)
        : servicer(std::move(s)), session(std::move(h)), token_count(tokens), trie(key_width) {}
};

/**
 * Relay admission: signature check, payability binding, token bucket, then the
 * collision test; a colliding relay costs one token and lands in the trie.
 */
Admission handle_relay(ServicerSessionState& state, const Relay& relay, const Difficulty& diff,
                       const SignatureScheme& scheme = default_scheme());

}  // namespace relay
