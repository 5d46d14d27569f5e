#include "relay/session.hpp"

#include <cmath>

#include "relay/rng.hpp"

namespace relay {

namespace {

void append_str_field(Bytes& out, const std::string& s) {
    append_be64(out, s.size());
    out.insert(out.end(), s.begin(), s.end());
}

}  // namespace

Digest SessionHeader::id() const {
    Bytes buf;
    append_str_field(buf, app_id);
    append_str_field(buf, service_id);
    append_be64(buf, static_cast<std::uint64_t>(start_height));
    append_be64(buf, static_cast<std::uint64_t>(end_height));
    for (const auto& s : servicers) append_str_field(buf, s);
    return hash_parts("session:id", {ByteView(buf), seed.view()});
}

bool SessionHeader::has_servicer(const SignerId& s) const {
    for (const auto& x : servicers)
        if (x == s) return true;
    return false;
}

SessionHeader new_session(const Digest& block_hash, std::int64_t start_height,
                          const std::string& app_id, const std::string& service_id,
                          const std::vector<SignerId>& eligible, const SessionParams& params) {
    if (eligible.size() < params.servicers_per_session) throw InsufficientServicersError();
    Bytes app_b = to_bytes(app_id);
    Bytes svc_b = to_bytes(service_id);
    Digest seed = hash_parts("session:seed", {block_hash.view(), ByteView(app_b), ByteView(svc_b)});

    Rng rng = Rng::from_digest(seed);
    auto picks = rng.sample_without_replacement(static_cast<std::uint32_t>(eligible.size()),
                                                params.servicers_per_session);
    SessionHeader h;
    h.app_id = app_id;
    h.service_id = service_id;
    h.start_height = start_height;
    h.end_height = start_height + params.window_blocks;
    h.seed = seed;
    h.servicers.reserve(picks.size());
    for (auto i : picks) h.servicers.push_back(eligible[i]);
    return h;
}

TokenBudget compute_budget(std::uint64_t app_stake, std::uint64_t ttrm,
                           std::uint32_t servicers_per_session, double relay_accuracy) {
    if (app_stake == 0) throw ZeroBudgetError();
    if (ttrm == 0) throw std::invalid_argument("budget: ttrm must be positive");
    if (servicers_per_session == 0) throw std::invalid_argument("budget: servicer count must be positive");
    if (relay_accuracy < 0.0 || std::isnan(relay_accuracy)) {
        throw std::invalid_argument("budget: relay_accuracy must be >= 0");
    }
    long double q = static_cast<long double>(app_stake) * static_cast<long double>(ttrm) *
                    (1.0L + static_cast<long double>(relay_accuracy)) /
                    static_cast<long double>(servicers_per_session);
    // Nudge by one ulp so exact-integer quotients are not floored down.
    auto b = static_cast<std::uint64_t>(std::floor(q * (1.0L + 1e-18L)));
    if (b == 0) throw ZeroBudgetError();
    return TokenBudget{b, app_stake, ttrm, servicers_per_session, relay_accuracy};
}

Bytes Relay::request_preimage() const {
    Bytes buf;
    append_str_field(buf, app_id);
    append_str_field(buf, service_id);
    append_be64(buf, static_cast<std::uint64_t>(session_start));
    append_be64(buf, static_cast<std::uint64_t>(session_end));
    append_be64(buf, static_cast<std::uint64_t>(height));
    append_be64(buf, nonce);
    append_field(buf, ByteView(request_body));
    Bytes out = to_bytes("relay:req");
    out.push_back(0x00);
    out.insert(out.end(), buf.begin(), buf.end());
    return out;
}

Bytes Relay::signed_request_bytes() const {
    Bytes out = request_preimage();
    out.insert(out.end(), app_signature.bytes.begin(), app_signature.bytes.end());
    return out;
}

Bytes Relay::response_preimage() const {
    Digest rq = sha256(ByteView(signed_request_bytes()));
    Bytes buf = to_bytes("relay:resp");
    buf.push_back(0x00);
    buf.insert(buf.end(), rq.bytes.begin(), rq.bytes.end());
    append_str_field(buf, servicer_id);
    append_field(buf, ByteView(response_body));
    return buf;
}

Bytes Relay::signed_response_bytes() const {
    Bytes out = response_preimage();
    out.insert(out.end(), servicer_signature.bytes.begin(), servicer_signature.bytes.end());
    return out;
}

Digest Relay::digest() const {
    return relay_digest(ByteView(signed_request_bytes()), ByteView(signed_response_bytes()));
}

Bytes Relay::serialize() const {
    Bytes buf;
    append_str_field(buf, app_id);
    append_str_field(buf, service_id);
    append_be64(buf, static_cast<std::uint64_t>(session_start));
    append_be64(buf, static_cast<std::uint64_t>(session_end));
    append_be64(buf, static_cast<std::uint64_t>(height));
    append_be64(buf, nonce);
    append_field(buf, ByteView(request_body));
    buf.insert(buf.end(), app_signature.bytes.begin(), app_signature.bytes.end());
    append_str_field(buf, servicer_id);
    append_field(buf, ByteView(response_body));
    buf.insert(buf.end(), servicer_signature.bytes.begin(), servicer_signature.bytes.end());
    return buf;
}

namespace {

struct Cursor {
    ByteView data;
    std::size_t off = 0;

    bool read_u64(std::uint64_t& v) {
        if (off + 8 > data.size()) return false;
        v = read_be64(data.subspan(off, 8));
        off += 8;
        return true;
    }
    bool read_str(std::string& s) {
        std::uint64_t len = 0;
        if (!read_u64(len) || off + len > data.size()) return false;
        s.assign(reinterpret_cast<const char*>(data.data() + off), len);
        off += len;
        return true;
    }
    bool read_bytes(Bytes& b) {
        std::uint64_t len = 0;
        if (!read_u64(len) || off + len > data.size()) return false;
        b.assign(data.begin() + static_cast<long>(off), data.begin() + static_cast<long>(off + len));
        off += len;
        return true;
    }
    bool read_sig(Signature& s) {
        if (off + 32 > data.size()) return false;
        std::copy(data.begin() + static_cast<long>(off), data.begin() + static_cast<long>(off) + 32,
                  s.bytes.begin());
        off += 32;
        return true;
    }
};

}  // namespace

std::optional<Relay> Relay::parse(ByteView data) {
    Relay r;
    Cursor c{data};
    std::uint64_t start = 0, end = 0, height = 0;
    if (!c.read_str(r.app_id)) return std::nullopt;
    if (!c.read_str(r.service_id)) return std::nullopt;
    if (!c.read_u64(start) || !c.read_u64(end) || !c.read_u64(height)) return std::nullopt;
    if (!c.read_u64(r.nonce)) return std::nullopt;
    if (!c.read_bytes(r.request_body)) return std::nullopt;
    if (!c.read_sig(r.app_signature)) return std::nullopt;
    if (!c.read_str(r.servicer_id)) return std::nullopt;
    if (!c.read_bytes(r.response_body)) return std::nullopt;
    if (!c.read_sig(r.servicer_signature)) return std::nullopt;
    if (c.off != data.size()) return std::nullopt;
    r.session_start = static_cast<std::int64_t>(start);
    r.session_end = static_cast<std::int64_t>(end);
    r.height = static_cast<std::int64_t>(height);
    return r;
}

Relay make_relay(const SignatureScheme& scheme, const SessionHeader& session,
                 const SignerId& servicer, std::int64_t height, std::uint64_t nonce,
                 ByteView request_body, ByteView response_body) {
    Relay r;
    r.app_id = session.app_id;
    r.service_id = session.service_id;
    r.session_start = session.start_height;
    r.session_end = session.end_height;
    r.height = height;
    r.nonce = nonce;
    r.request_body.assign(request_body.begin(), request_body.end());
    r.servicer_id = servicer;
    r.response_body.assign(response_body.begin(), response_body.end());
    r.app_signature = scheme.sign(scheme.keygen(session.app_id), ByteView(r.request_preimage()));
    r.servicer_signature = scheme.sign(scheme.keygen(servicer), ByteView(r.response_preimage()));
    return r;
}

const char* to_string(Admission a) {
    switch (a) {
        case Admission::rejected_invalid: return "rejected-invalid";
        case Admission::rejected_unpayable: return "rejected-unpayable";
        case Admission::rejected_exhausted: return "rejected-exhausted";
        case Admission::served_no_collision: return "served-no-collision";
        case Admission::served_and_inserted: return "served-and-inserted";
    }
    return "unknown";
}

Admission handle_relay(ServicerSessionState& state, const Relay& relay, const Difficulty& diff,
                       const SignatureScheme& scheme) {
    if (!scheme.verify(relay.app_id, ByteView(relay.request_preimage()), relay.app_signature)) {
        return Admission::rejected_invalid;
    }

    const SessionHeader& s = state.session;
    bool payable = relay.app_id == s.app_id && relay.service_id == s.service_id &&
                   relay.session_start == s.start_height && relay.session_end == s.end_height &&
                   relay.servicer_id == state.servicer && s.has_servicer(state.servicer) &&
                   s.contains_height(relay.height) && !state.frozen;
    if (!payable) return Admission::rejected_unpayable;

    if (state.token_count == 0) return Admission::rejected_exhausted;

    // Serving: the response must carry the servicer's own valid signature.
    if (!scheme.verify(relay.servicer_id, ByteView(relay.response_preimage()),
                       relay.servicer_signature)) {
        return Admission::rejected_invalid;
    }
    state.served_payable += 1;

    Digest d = relay.digest();
    if (!check_collision(d, diff)) return Admission::served_no_collision;

    try {
        state.trie.insert(d, ByteView(relay.serialize()));
    } catch (const DuplicateKeyError&) {
        return Admission::rejected_unpayable;  // replayed relay
    }
    state.token_count -= 1;
    return Admission::served_and_inserted;
}

}  // namespace relay
