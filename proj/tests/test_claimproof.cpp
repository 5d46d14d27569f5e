#include <optional>

#include "doctest.h"
#include "relay/claimproof.hpp"

using namespace relay;

namespace {

std::vector<SignerId> make_pool(int n) {
    std::vector<SignerId> pool;
    for (int i = 0; i < n; ++i) pool.push_back("servicer-" + std::to_string(i));
    return pool;
}

Digest test_hash(std::uint64_t n) {
    Bytes b;
    append_be64(b, n);
    return hash_parts("test:block", {ByteView(b)});
}

SessionParams small_params() {
    SessionParams p;
    p.servicers_per_session = 2;
    p.window_blocks = 4;
    return p;
}

/** Mine a relay whose digest starts with the wanted 4-bit prefix. */
Relay grind_relay(const SessionHeader& session, const SignerId& servicer, std::uint64_t key4,
                  std::uint64_t start_nonce = 0) {
    Bytes req = to_bytes("q");
    Bytes resp = to_bytes("a");
    for (std::uint64_t nonce = start_nonce;; ++nonce) {
        Relay r = make_relay(default_scheme(), session, servicer, session.start_height, nonce,
                             ByteView(req), ByteView(resp));
        if (BitPath::from_digest(r.digest(), 4) == BitPath::from_uint(key4, 4)) return r;
    }
}

/** Find a challenge block hash whose derived target equals `target4`. */
Digest grind_challenge_hash(const Claim& claim, std::uint64_t target4) {
    for (std::uint64_t i = 0;; ++i) {
        Digest h = test_hash(1000000 + i);
        if (ClaimPipeline::derive_challenge(claim, h, claim.claim_height + 1) ==
            BitPath::from_uint(target4, 4)) {
            return h;
        }
    }
}

struct Fixture {
    SessionHeader session;
    ServicerSessionState state;
    std::vector<Relay> relays;

    explicit Fixture(std::uint64_t entropy = 4)
        : session(new_session(test_hash(entropy), 0, "app-0", "eth", make_pool(2),
                              small_params())),
          state(session.servicers[0], session, 100, 4) {}

    /** Fill the trie with the four reference leaves (keyed by ground digests). */
    void fill() {
        for (std::uint64_t key : {0b0011u, 0b0101u, 0b1001u, 0b1110u}) {
            Relay r = grind_relay(session, state.servicer, key, key * 1000);
            REQUIRE(handle_relay(state, r, Difficulty::from_probability(1.0)) ==
                    Admission::served_and_inserted);
            relays.push_back(r);
        }
        REQUIRE(state.trie.root().sum == 4);
    }

    ProofReveal honest_reveal(const Claim& claim, const BitPath& target,
                              std::int64_t reveal_height) const {
        ProofReveal reveal;
        reveal.claim_ref = claim.ref();
        reveal.target = target;
        reveal.proof = state.trie.closest_proof(target);
        auto value = state.trie.value(reveal.proof.leaf_key);
        REQUIRE(value.has_value());
        reveal.revealed_value = *value;
        reveal.reveal_height = reveal_height;
        return reveal;
    }
};

}  // namespace

TEST_CASE("claim window boundaries") {
    Fixture fx;
    fx.fill();
    ClaimPipeline pipeline({4, 4}, 1.0);
    SUBCASE("claim before the session end is rejected") {
        CHECK_THROWS_AS(pipeline.submit_claim(fx.state, fx.session.end_height - 1, 1.0, 100),
                        WindowViolationError);
    }
    SUBCASE("claim at the window's exclusive end is rejected") {
        CHECK_THROWS_AS(pipeline.submit_claim(fx.state, fx.session.end_height + 4, 1.0, 100),
                        WindowViolationError);
    }
    SUBCASE("claim inside the window freezes the trie") {
        const Claim& c = pipeline.submit_claim(fx.state, fx.session.end_height, 1.0, 100);
        CHECK(c.root.sum == 4);
        CHECK(fx.state.frozen);
        CHECK(pipeline.phase(c.ref()) == ClaimPhase::claimed);
    }
}

TEST_CASE("duplicate claims for one session are rejected") {
    Fixture fx;
    fx.fill();
    ClaimPipeline pipeline({4, 4}, 1.0);
    pipeline.submit_claim(fx.state, fx.session.end_height, 1.0, 100);
    CHECK_THROWS_AS(pipeline.submit_claim(fx.state, fx.session.end_height + 1, 1.0, 100),
                    DuplicateClaimError);
}

TEST_CASE("challenge derivation") {
    Fixture fx;
    fx.fill();
    ClaimPipeline pipeline({4, 4}, 1.0);
    const Claim& c = pipeline.submit_claim(fx.state, fx.session.end_height, 1.0, 100);

    SUBCASE("deterministic in (claim, hash)") {
        BitPath a = ClaimPipeline::derive_challenge(c, test_hash(50), c.claim_height + 1);
        BitPath b = ClaimPipeline::derive_challenge(c, test_hash(50), c.claim_height + 2);
        CHECK(a == b);  // height gates ordering, the path depends on the hash
    }
    SUBCASE("the claim ref is part of the preimage") {
        Fixture other(7);
        other.fill();
        ClaimPipeline pipeline2({4, 4}, 1.0);
        const Claim& c2 = pipeline2.submit_claim(other.state, other.session.end_height, 1.0, 100);
        CHECK(ClaimPipeline::derive_challenge(c, test_hash(50), c.claim_height + 1) !=
              ClaimPipeline::derive_challenge(c2, test_hash(50), c2.claim_height + 1));
    }
    SUBCASE("challenge must come after the claim") {
        CHECK_THROWS_AS(ClaimPipeline::derive_challenge(c, test_hash(50), c.claim_height),
                        OrderingViolationError);
    }
}

TEST_CASE("honest pipeline settles end to end") {
    Fixture fx;
    fx.fill();
    ClaimPipeline pipeline({4, 4}, 1.0);
    const Claim& c = pipeline.submit_claim(fx.state, fx.session.end_height, 1.0, 100);
    Digest ref = c.ref();

    // a challenge hash ground so the target is 0b0001: the closest leaf is 0b0011
    Digest challenge = grind_challenge_hash(c, 0b0001);
    std::int64_t ch = c.claim_height + 1;
    pipeline.open_challenge(ref, challenge, ch);
    CHECK(pipeline.phase(ref) == ClaimPhase::challenged);

    BitPath target = ClaimPipeline::derive_challenge(c, challenge, ch);
    CHECK(target == BitPath::from_uint(0b0001, 4));
    ProofReveal reveal = fx.honest_reveal(c, target, ch + 1);
    CHECK(reveal.proof.leaf_key == BitPath::from_uint(0b0011, 4));

    CHECK(pipeline.submit_proof(ref, reveal) == ProofCheck::ok);
    Settlement s = pipeline.settle(ref);
    CHECK(s.outcome == SettleOutcome::settled);
    CHECK(s.minted == 4);
    CHECK(s.burned == 4);
    CHECK(pipeline.ledger().balance(fx.state.servicer) == 4);
    CHECK(pipeline.ledger().balance("app-0") == -4);
    CHECK(pipeline.ledger().total_minted() == pipeline.ledger().total_burned());
    CHECK(pipeline.phase(ref) == ClaimPhase::settled);
}

TEST_CASE("every challenged branch of an honest trie is accepted") {
    Fixture fx;
    fx.fill();
    ClaimPipeline pipeline({4, 4}, 1.0);
    const Claim claim = pipeline.submit_claim(fx.state, fx.session.end_height, 1.0, 100);
    for (std::uint64_t t = 0; t < 16; ++t) {
        // fresh pipeline per target so the claim can be re-challenged
        ClaimPipeline p({4, 4}, 1.0);
        ServicerSessionState state2(fx.session.servicers[0], fx.session, 100, 4);
        // rebuild an identical trie
        for (const Relay& r : fx.relays) {
            ServicerSessionState* s = &state2;
            REQUIRE(handle_relay(*s, r, Difficulty::from_probability(1.0)) ==
                    Admission::served_and_inserted);
        }
        const Claim& c = p.submit_claim(state2, fx.session.end_height, 1.0, 100);
        Digest challenge = grind_challenge_hash(c, t);
        p.open_challenge(c.ref(), challenge, c.claim_height + 1);
        BitPath target = ClaimPipeline::derive_challenge(c, challenge, c.claim_height + 1);
        ProofReveal reveal;
        reveal.claim_ref = c.ref();
        reveal.target = target;
        reveal.proof = state2.trie.closest_proof(target);
        reveal.revealed_value = *state2.trie.value(reveal.proof.leaf_key);
        reveal.reveal_height = c.claim_height + 2;
        CHECK(p.submit_proof(c.ref(), reveal) == ProofCheck::ok);
        CHECK(p.settle(c.ref()).outcome == SettleOutcome::settled);
    }
    (void)claim;
}

TEST_CASE("revealing a valid but non-closest leaf is rejected") {
    Fixture fx;
    fx.fill();
    ClaimPipeline pipeline({4, 4}, 1.0);
    const Claim& c = pipeline.submit_claim(fx.state, fx.session.end_height, 1.0, 100);
    Digest challenge = grind_challenge_hash(c, 0b0001);
    pipeline.open_challenge(c.ref(), challenge, c.claim_height + 1);
    BitPath target = ClaimPipeline::derive_challenge(c, challenge, c.claim_height + 1);

    ProofReveal reveal;
    reveal.claim_ref = c.ref();
    reveal.target = target;
    reveal.proof = fx.state.trie.prove(BitPath::from_uint(0b0101, 4));  // member, not closest
    reveal.revealed_value = *fx.state.trie.value(reveal.proof.leaf_key);
    reveal.reveal_height = c.claim_height + 2;
    CHECK(pipeline.submit_proof(c.ref(), reveal) == ProofCheck::wrong_leaf);
    CHECK(pipeline.settle(c.ref()).outcome == SettleOutcome::invalid_proof);
    CHECK(pipeline.ledger().total_minted() == 0);
}

TEST_CASE("an inflated claimed sum cannot be proven") {
    Fixture fx;
    fx.fill();
    ClaimPipeline pipeline({4, 4}, 1.0);
    Claim forged = pipeline.submit_claim(fx.state, fx.session.end_height, 1.0, 100);
    forged.root.sum += 10;  // the commitment the forger wishes it had made

    Digest challenge = test_hash(3);
    BitPath target = ClaimPipeline::derive_challenge(forged, challenge, forged.claim_height + 1);
    MembershipProof honest = fx.state.trie.closest_proof(target);
    // sibling sums reconcile only with the true root sum
    CHECK_FALSE(verify_proof(forged.root, honest));
}

TEST_CASE("tampering with the stored leaf value after the claim fails the reveal") {
    Fixture fx;
    fx.fill();
    ClaimPipeline pipeline({4, 4}, 1.0);
    const Claim& c = pipeline.submit_claim(fx.state, fx.session.end_height, 1.0, 100);
    Digest challenge = grind_challenge_hash(c, 0b0001);
    pipeline.open_challenge(c.ref(), challenge, c.claim_height + 1);
    BitPath target = ClaimPipeline::derive_challenge(c, challenge, c.claim_height + 1);

    ProofReveal reveal = fx.honest_reveal(c, target, c.claim_height + 2);
    for (std::size_t i = 0; i < reveal.revealed_value.size(); i += 7) {
        ProofReveal tampered = reveal;
        tampered.revealed_value[i] ^= 0x01;
        ClaimPipeline p({4, 4}, 1.0);
        ServicerSessionState state2(fx.session.servicers[0], fx.session, 100, 4);
        for (const Relay& r : fx.relays) handle_relay(state2, r, Difficulty::from_probability(1.0));
        const Claim& c2 = p.submit_claim(state2, fx.session.end_height, 1.0, 100);
        p.open_challenge(c2.ref(), challenge, c2.claim_height + 1);
        tampered.claim_ref = c2.ref();
        tampered.target = ClaimPipeline::derive_challenge(c2, challenge, c2.claim_height + 1);
        tampered.proof = state2.trie.closest_proof(tampered.target);
        // re-derive the honest proof, then swap in the tampered value bytes
        CHECK(p.submit_proof(c2.ref(), tampered) == ProofCheck::value_hash_mismatch);
    }
}

TEST_CASE("reveal window is enforced and expiry settles to zero") {
    Fixture fx;
    fx.fill();
    ClaimPipeline pipeline({4, 4}, 1.0);
    const Claim& c = pipeline.submit_claim(fx.state, fx.session.end_height, 1.0, 100);
    Digest challenge = grind_challenge_hash(c, 0b0001);
    std::int64_t ch = c.claim_height + 1;
    pipeline.open_challenge(c.ref(), challenge, ch);
    BitPath target = ClaimPipeline::derive_challenge(c, challenge, ch);

    SUBCASE("too early") {
        ProofReveal reveal = fx.honest_reveal(c, target, ch);
        CHECK(pipeline.submit_proof(c.ref(), reveal) == ProofCheck::window_violation);
        CHECK(pipeline.phase(c.ref()) == ClaimPhase::challenged);  // not terminal
    }
    SUBCASE("too late, then expired") {
        ProofReveal reveal = fx.honest_reveal(c, target, ch + 5);
        CHECK(pipeline.submit_proof(c.ref(), reveal) == ProofCheck::window_violation);
        CHECK_THROWS_AS(pipeline.expire(c.ref(), ch + 4), std::logic_error);  // window still open
        pipeline.expire(c.ref(), ch + 5);
        Settlement s = pipeline.settle(c.ref());
        CHECK(s.outcome == SettleOutcome::expired_unproven);
        CHECK(s.minted == 0);
        CHECK(s.burned == 0);
    }
}

TEST_CASE("zero-sum claims settle to zero without a reveal") {
    Fixture fx;  // trie left empty
    ClaimPipeline pipeline({4, 4}, 1.0);
    const Claim& c = pipeline.submit_claim(fx.state, fx.session.end_height, 1.0, 100);
    CHECK(c.root.sum == 0);
    pipeline.open_challenge(c.ref(), test_hash(1), c.claim_height + 1);
    CHECK(pipeline.phase(c.ref()) == ClaimPhase::verified);
    Settlement s = pipeline.settle(c.ref());
    CHECK(s.outcome == SettleOutcome::settled);
    CHECK(s.minted == 0);
    CHECK(s.burned == 0);
}

TEST_CASE("settlement scales the claimed sum by the session difficulty") {
    Fixture fx;
    fx.fill();
    ClaimPipeline pipeline({4, 4}, 1.0);
    const Claim& c = pipeline.submit_claim(fx.state, fx.session.end_height, 0.01, 100);
    Digest challenge = grind_challenge_hash(c, 0b0011);
    pipeline.open_challenge(c.ref(), challenge, c.claim_height + 1);
    BitPath target = ClaimPipeline::derive_challenge(c, challenge, c.claim_height + 1);
    ProofReveal reveal = fx.honest_reveal(c, target, c.claim_height + 2);
    REQUIRE(pipeline.submit_proof(c.ref(), reveal) == ProofCheck::ok);
    Settlement s = pipeline.settle(c.ref());
    // 4 claimed relays at p = 0.01 estimate 400 served relays
    CHECK(s.minted == 400);
    CHECK(s.burned == 400);
}

TEST_CASE("a hundred claimed relays settle to a hundred tokens") {
    SessionParams params = small_params();
    auto pool = make_pool(2);
    SessionHeader session = new_session(test_hash(12), 0, "app-0", "eth", pool, params);
    ServicerSessionState state(session.servicers[0], session, 500, 16);
    Bytes req = to_bytes("q");
    Bytes resp = to_bytes("a");
    std::uint64_t nonce = 0;
    while (state.trie.root().sum < 100) {
        Relay r = make_relay(default_scheme(), session, state.servicer, 0, nonce++, ByteView(req),
                             ByteView(resp));
        handle_relay(state, r, Difficulty::from_probability(1.0));  // width-16 key collisions skip
    }

    ClaimPipeline pipeline({4, 4}, 1.0);
    const Claim& c = pipeline.submit_claim(state, session.end_height, 1.0, 500);
    REQUIRE(c.root.sum == 100);
    pipeline.open_challenge(c.ref(), test_hash(77), c.claim_height + 1);
    BitPath target =
        ClaimPipeline::derive_challenge(c, test_hash(77), c.claim_height + 1);
    ProofReveal reveal;
    reveal.claim_ref = c.ref();
    reveal.target = target;
    reveal.proof = state.trie.closest_proof(target);
    reveal.revealed_value = *state.trie.value(reveal.proof.leaf_key);
    reveal.reveal_height = c.claim_height + 2;
    REQUIRE(pipeline.submit_proof(c.ref(), reveal) == ProofCheck::ok);
    Settlement s = pipeline.settle(c.ref());
    CHECK(s.outcome == SettleOutcome::settled);
    CHECK(s.minted == 100);
    CHECK(s.burned == 100);
}

TEST_CASE("state machine transitions are monotone") {
    Fixture fx;
    fx.fill();
    ClaimPipeline pipeline({4, 4}, 1.0);
    const Claim& c = pipeline.submit_claim(fx.state, fx.session.end_height, 1.0, 100);
    Digest ref = c.ref();

    CHECK_THROWS_AS(pipeline.settle(ref), std::logic_error);  // nothing to settle yet
    ProofReveal bogus;
    bogus.claim_ref = ref;
    CHECK_THROWS_AS(pipeline.submit_proof(ref, bogus), std::logic_error);  // not challenged

    Digest challenge = grind_challenge_hash(c, 0b0001);
    pipeline.open_challenge(ref, challenge, c.claim_height + 1);
    CHECK_THROWS_AS(pipeline.open_challenge(ref, challenge, c.claim_height + 2),
                    std::logic_error);

    BitPath target = ClaimPipeline::derive_challenge(c, challenge, c.claim_height + 1);
    ProofReveal reveal = fx.honest_reveal(c, target, c.claim_height + 2);
    REQUIRE(pipeline.submit_proof(ref, reveal) == ProofCheck::ok);
    pipeline.settle(ref);
    CHECK_THROWS_AS(pipeline.settle(ref), std::logic_error);  // settled is terminal
}

TEST_CASE("claims exceeding the budget are refused outright") {
    Fixture fx;
    fx.fill();
    ClaimPipeline pipeline({4, 4}, 1.0);
    CHECK_THROWS_AS(pipeline.submit_claim(fx.state, fx.session.end_height, 1.0, 3),
                    std::logic_error);
}

TEST_CASE("event log keeps a stable record of the lifecycle") {
    Fixture fx;
    fx.fill();
    ClaimPipeline pipeline({4, 4}, 1.0);
    const Claim& c = pipeline.submit_claim(fx.state, fx.session.end_height, 1.0, 100);
    Digest challenge = grind_challenge_hash(c, 0b0001);
    pipeline.open_challenge(c.ref(), challenge, c.claim_height + 1);
    BitPath target = ClaimPipeline::derive_challenge(c, challenge, c.claim_height + 1);
    ProofReveal reveal = fx.honest_reveal(c, target, c.claim_height + 2);
    pipeline.submit_proof(c.ref(), reveal);
    pipeline.settle(c.ref());

    const auto& events = pipeline.events().events();
    REQUIRE(events.size() == 4);
    CHECK(events[0]["event"] == "claim");
    CHECK(events[1]["event"] == "challenge");
    CHECK(events[2]["event"] == "reveal");
    CHECK(events[3]["event"] == "settlement");
    CHECK(events[3]["minted"] == 4);
}
