#include "relay/claimproof.hpp"

#include <cmath>
#include <ostream>

namespace relay {

const char* to_string(ProofCheck c) {
    switch (c) {
        case ProofCheck::ok: return "ok";
        case ProofCheck::window_violation: return "window-violation";
        case ProofCheck::target_mismatch: return "target-mismatch";
        case ProofCheck::root_mismatch: return "root-mismatch";
        case ProofCheck::wrong_leaf: return "wrong-leaf";
        case ProofCheck::value_hash_mismatch: return "value-hash-mismatch";
        case ProofCheck::key_mismatch: return "key-mismatch";
        case ProofCheck::bad_app_signature: return "bad-app-signature";
        case ProofCheck::bad_servicer_signature: return "bad-servicer-signature";
        case ProofCheck::session_mismatch: return "session-mismatch";
    }
    return "unknown";
}

const char* to_string(SettleOutcome o) {
    switch (o) {
        case SettleOutcome::settled: return "settled";
        case SettleOutcome::expired_unproven: return "expired-unproven";
        case SettleOutcome::invalid_proof: return "invalid-proof";
    }
    return "unknown";
}

Digest Claim::ref() const {
    Bytes sv = to_bytes(servicer);
    Bytes heights;
    append_be64(heights, static_cast<std::uint64_t>(claim_height));
    append_be64(heights, root.sum);
    return hash_parts("claim:ref",
                      {ByteView(sv), session.id().view(), root.hash.view(), ByteView(heights)});
}

std::int64_t Ledger::balance(const SignerId& id) const {
    auto it = balances_.find(id);
    return it == balances_.end() ? 0 : it->second;
}

void EventLog::write_ndjson(std::ostream& out) const {
    for (const auto& e : events_) out << e.dump() << '\n';
}

ClaimPipeline::ClaimPipeline(ClaimWindows windows, double reward_rate,
                             const SignatureScheme& scheme)
    : windows_(windows), reward_rate_(reward_rate), scheme_(scheme) {
    if (reward_rate_ < 0 || std::isnan(reward_rate_)) {
        throw std::invalid_argument("claim: reward rate must be >= 0");
    }
}

ClaimPipeline::Entry& ClaimPipeline::entry(const Digest& claim_ref) {
    auto it = registry_.find(claim_ref);
    if (it == registry_.end()) throw std::invalid_argument("claim: unknown claim ref");
    return it->second;
}

const Claim& ClaimPipeline::claim(const Digest& claim_ref) const {
    auto it = registry_.find(claim_ref);
    if (it == registry_.end()) throw std::invalid_argument("claim: unknown claim ref");
    return it->second.claim;
}

ClaimPhase ClaimPipeline::phase(const Digest& claim_ref) const {
    auto it = registry_.find(claim_ref);
    if (it == registry_.end()) throw std::invalid_argument("claim: unknown claim ref");
    return it->second.phase;
}

const Claim& ClaimPipeline::submit_claim(ServicerSessionState& state, std::int64_t height,
                                         double session_probability, std::uint64_t budget) {
    const std::int64_t end = state.session.end_height;
    if (height < end || height >= end + windows_.claim_window) throw WindowViolationError();
    auto session_key = std::make_pair(state.servicer, state.session.id());
    if (by_session_.contains(session_key)) throw DuplicateClaimError();

    Claim c;
    c.servicer = state.servicer;
    c.session = state.session;
    c.root = state.trie.root();
    c.claim_height = height;
    c.key_width = state.trie.key_width();
    c.session_probability = session_probability;
    c.budget = budget;
    if (c.root.sum > budget) throw std::logic_error("claim: committed sum exceeds the budget");

    state.frozen = true;
    Digest ref = c.ref();
    auto [it, inserted] = registry_.emplace(ref, Entry{c, ClaimPhase::claimed, {}, 0, ProofCheck::ok});
    if (!inserted) throw DuplicateClaimError();
    by_session_.emplace(session_key, ref);

    events_.append({{"event", "claim"},
                    {"claim_ref", ref.hex()},
                    {"servicer", c.servicer},
                    {"app", c.session.app_id},
                    {"service", c.session.service_id},
                    {"session_start", c.session.start_height},
                    {"session_end", c.session.end_height},
                    {"height", height},
                    {"root", c.root.hash.hex()},
                    {"sum", c.root.sum}});
    return it->second.claim;
}

BitPath ClaimPipeline::derive_challenge(const Claim& claim, const Digest& challenge_block_hash,
                                        std::int64_t challenge_height) {
    if (challenge_height <= claim.claim_height) throw OrderingViolationError();
    Digest ref = claim.ref();
    Digest h = hash_parts("claim:challenge", {challenge_block_hash.view(), ref.view()});
    return BitPath::from_digest(h, claim.key_width);
}

void ClaimPipeline::open_challenge(const Digest& claim_ref, const Digest& challenge_block_hash,
                                   std::int64_t challenge_height) {
    Entry& e = entry(claim_ref);
    if (e.phase != ClaimPhase::claimed) throw std::logic_error("claim: not awaiting a challenge");
    if (e.claim.root.sum == 0) {
        // Nothing committed: there is no branch to reveal, settle at zero.
        e.phase = ClaimPhase::verified;
        events_.append({{"event", "challenge"},
                        {"claim_ref", claim_ref.hex()},
                        {"height", challenge_height},
                        {"target", nullptr}});
        return;
    }
    e.target = derive_challenge(e.claim, challenge_block_hash, challenge_height);
    e.challenge_height = challenge_height;
    e.phase = ClaimPhase::challenged;
    events_.append({{"event", "challenge"},
                    {"claim_ref", claim_ref.hex()},
                    {"height", challenge_height},
                    {"target", e.target.hex()}});
}

ProofCheck ClaimPipeline::submit_proof(const Digest& claim_ref, const ProofReveal& reveal) {
    Entry& e = entry(claim_ref);
    if (e.phase != ClaimPhase::challenged) throw std::logic_error("claim: not challenged");
    const Claim& c = e.claim;

    auto reject = [&](ProofCheck why) {
        e.last_check = why;
        if (why != ProofCheck::window_violation) e.phase = ClaimPhase::invalid;
        events_.append({{"event", "reveal"},
                        {"claim_ref", claim_ref.hex()},
                        {"height", reveal.reveal_height},
                        {"result", to_string(why)}});
        return why;
    };

    if (reveal.reveal_height <= e.challenge_height ||
        reveal.reveal_height > e.challenge_height + windows_.proof_window) {
        return reject(ProofCheck::window_violation);
    }
    if (reveal.target != e.target) return reject(ProofCheck::target_mismatch);
    if (!verify_proof(c.root, reveal.proof)) return reject(ProofCheck::root_mismatch);
    if (!verify_closest_proof(c.root, reveal.proof, e.target)) {
        return reject(ProofCheck::wrong_leaf);
    }
    if (!(sha256(ByteView(reveal.revealed_value)) == reveal.proof.value_hash)) {
        return reject(ProofCheck::value_hash_mismatch);
    }
    auto relay = Relay::parse(ByteView(reveal.revealed_value));
    if (!relay) return reject(ProofCheck::value_hash_mismatch);
    if (!(BitPath::from_digest(relay->digest(), c.key_width) == reveal.proof.leaf_key)) {
        return reject(ProofCheck::key_mismatch);
    }
    if (!scheme_.verify(relay->app_id, ByteView(relay->request_preimage()),
                        relay->app_signature)) {
        return reject(ProofCheck::bad_app_signature);
    }
    if (!scheme_.verify(relay->servicer_id, ByteView(relay->response_preimage()),
                        relay->servicer_signature)) {
        return reject(ProofCheck::bad_servicer_signature);
    }
    bool bound = relay->app_id == c.session.app_id && relay->service_id == c.session.service_id &&
                 relay->session_start == c.session.start_height &&
                 relay->session_end == c.session.end_height && relay->servicer_id == c.servicer &&
                 c.session.has_servicer(c.servicer);
    if (!bound) return reject(ProofCheck::session_mismatch);

    e.phase = ClaimPhase::verified;
    e.last_check = ProofCheck::ok;
    events_.append({{"event", "reveal"},
                    {"claim_ref", claim_ref.hex()},
                    {"height", reveal.reveal_height},
                    {"result", "ok"}});
    return ProofCheck::ok;
}

void ClaimPipeline::expire(const Digest& claim_ref, std::int64_t height) {
    Entry& e = entry(claim_ref);
    if (e.phase != ClaimPhase::challenged) throw std::logic_error("claim: not challenged");
    if (height <= e.challenge_height + windows_.proof_window) {
        throw std::logic_error("claim: proof window still open");
    }
    e.phase = ClaimPhase::expired;
    events_.append(
        {{"event", "expiry"}, {"claim_ref", claim_ref.hex()}, {"height", height}});
}

Settlement ClaimPipeline::settle(const Digest& claim_ref) {
    Entry& e = entry(claim_ref);
    Settlement s;
    s.claim_ref = claim_ref;
    switch (e.phase) {
        case ClaimPhase::verified: {
            double payout = static_cast<double>(e.claim.root.sum) * reward_rate_ /
                            e.claim.session_probability;
            auto amount = static_cast<std::uint64_t>(std::llround(payout));
            s.outcome = SettleOutcome::settled;
            s.minted = amount;
            s.burned = amount;
            ledger_.credit(e.claim.servicer, static_cast<std::int64_t>(amount));
            ledger_.debit(e.claim.session.app_id, static_cast<std::int64_t>(amount));
            ledger_.record_mint_burn(amount, amount);
            e.phase = ClaimPhase::settled;
            break;
        }
        case ClaimPhase::expired:
            s.outcome = SettleOutcome::expired_unproven;
            break;
        case ClaimPhase::invalid:
            s.outcome = SettleOutcome::invalid_proof;
            break;
        default:
            throw std::logic_error("claim: not in a terminal verification state");
    }
    events_.append({{"event", "settlement"},
                    {"claim_ref", claim_ref.hex()},
                    {"outcome", to_string(s.outcome)},
                    {"minted", s.minted},
                    {"burned", s.burned}});
    return s;
}

}  // namespace relay
