#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "relay/session.hpp"
#include "relay/smst.hpp"

namespace relay {

struct ClaimWindows {
    std::int64_t claim_window = 4;  // blocks after session end in which a claim is accepted
    std::int64_t proof_window = 4;  // blocks after the challenge in which a reveal is accepted
};

/** Commit half: the servicer's root commitment for one (servicer, session). */
struct Claim {
    SignerId servicer;
    SessionHeader session;
    NodeSummary root;
    std::int64_t claim_height = 0;
    int key_width = 256;
    double session_probability = 1.0;  // difficulty in effect for the session, fixed at its start
    std::uint64_t budget = 0;          // b, for the sum <= b invariant

    Digest ref() const;
};

/** Reveal half: the challenged closest-leaf proof plus the leaf's value bytes. */
struct ProofReveal {
    Digest claim_ref;
    BitPath target;
    MembershipProof proof;
    Bytes revealed_value;
    std::int64_t reveal_height = 0;
};

enum class ProofCheck {
    ok,
    window_violation,
    target_mismatch,
    root_mismatch,
    wrong_leaf,
    value_hash_mismatch,
    key_mismatch,
    bad_app_signature,
    bad_servicer_signature,
    session_mismatch,
};

const char* to_string(ProofCheck c);

enum class ClaimPhase { claimed, challenged, verified, settled, expired, invalid };

enum class SettleOutcome { settled, expired_unproven, invalid_proof };

const char* to_string(SettleOutcome o);

struct Settlement {
    Digest claim_ref;
    SettleOutcome outcome = SettleOutcome::invalid_proof;
    std::uint64_t minted = 0;  // to the servicer
    std::uint64_t burned = 0;  // from the application
};

struct WindowViolationError : std::runtime_error {
    WindowViolationError() : std::runtime_error("claim: outside the allowed window") {}
};
struct DuplicateClaimError : std::runtime_error {
    DuplicateClaimError() : std::runtime_error("claim: already submitted for this session") {}
};
struct OrderingViolationError : std::runtime_error {
    OrderingViolationError() : std::runtime_error("challenge: block not after the claim") {}
};

/** Append-only mint/burn ledger. Application balances may go negative. */
class Ledger {
public:
    void credit(const SignerId& id, std::int64_t amount) { balances_[id] += amount; }
    void debit(const SignerId& id, std::int64_t amount) { balances_[id] -= amount; }
    std::int64_t balance(const SignerId& id) const;
    std::uint64_t total_minted() const { return minted_; }
    std::uint64_t total_burned() const { return burned_; }
    void record_mint_burn(std::uint64_t minted, std::uint64_t burned) {
        minted_ += minted;
        burned_ += burned;
    }

private:
    std::map<SignerId, std::int64_t> balances_;
    std::uint64_t minted_ = 0;
    std::uint64_t burned_ = 0;
};

/** Newline-delimited JSON event sink with stable field order. */
class EventLog {
public:
    void append(nlohmann::ordered_json event) { events_.push_back(std::move(event)); }
    const std::vector<nlohmann::ordered_json>& events() const { return events_; }
    void write_ndjson(std::ostream& out) const;

private:
    std::vector<nlohmann::ordered_json> events_;
};

/**
 * Commit-and-reveal settlement over a serialized block stream. Each claim
 * moves monotonically through claimed -> challenged -> {verified | invalid}
 * -> settled, or expires unproven.
 */
class ClaimPipeline {
public:
    ClaimPipeline(ClaimWindows windows, double reward_rate,
                  const SignatureScheme& scheme = default_scheme());

    /** Freeze the trie and record the commitment. Throws on window or duplicate violations. */
    const Claim& submit_claim(ServicerSessionState& state, std::int64_t height,
                              double session_probability, std::uint64_t budget);

    /** Challenge path: first key_width bits of H(challenge block hash || claim ref). */
    static BitPath derive_challenge(const Claim& claim, const Digest& challenge_block_hash,
                                    std::int64_t challenge_height);

    /** Record the challenge for a claim; zero-sum claims skip straight to verified. */
    void open_challenge(const Digest& claim_ref, const Digest& challenge_block_hash,
                        std::int64_t challenge_height);

    ProofCheck submit_proof(const Digest& claim_ref, const ProofReveal& reveal);

    /** Mark a challenged claim past its proof window as expired-unproven. */
    void expire(const Digest& claim_ref, std::int64_t height);

    /** Terminal accounting; mint = burn = round(sum * reward_rate / p_session). */
    Settlement settle(const Digest& claim_ref);

    const Claim& claim(const Digest& claim_ref) const;
    ClaimPhase phase(const Digest& claim_ref) const;
    Ledger& ledger() { return ledger_; }
    const Ledger& ledger() const { return ledger_; }
    EventLog& events() { return events_; }

private:
    struct Entry {
        Claim claim;
        ClaimPhase phase = ClaimPhase::claimed;
        BitPath target;
        std::int64_t challenge_height = 0;
        ProofCheck last_check = ProofCheck::ok;
    };

    Entry& entry(const Digest& claim_ref);

    ClaimWindows windows_;
    double reward_rate_;
    const SignatureScheme& scheme_;
    std::map<Digest, Entry> registry_;
    std::map<std::pair<SignerId, Digest>, Digest> by_session_;  // (servicer, session id) -> ref
    Ledger ledger_;
    EventLog events_;
};

}  // namespace relay
