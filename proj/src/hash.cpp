#include "relay/hash.hpp"

#include <openssl/sha.h>

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace relay {

std::string to_hex(ByteView data) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(data.size() * 2);
    for (std::uint8_t b : data) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0x0f]);
    }
    return out;
}

namespace {
int hex_nibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}
}  // namespace

Bytes from_hex(std::string_view hex) {
    if (hex.size() % 2 != 0) throw std::invalid_argument("hex string has odd length");
    Bytes out;
    out.reserve(hex.size() / 2);
    for (std::size_t i = 0; i < hex.size(); i += 2) {
        int hi = hex_nibble(hex[i]);
        int lo = hex_nibble(hex[i + 1]);
        if (hi < 0 || lo < 0) throw std::invalid_argument("invalid hex character");
        out.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
    }
    return out;
}

void append_be64(Bytes& out, std::uint64_t v) {
    for (int i = 7; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t read_be64(ByteView in) {
    if (in.size() < 8) throw std::invalid_argument("be64: short read");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | in[i];
    return v;
}

void append_field(Bytes& out, ByteView field) {
    append_be64(out, field.size());
    out.insert(out.end(), field.begin(), field.end());
}

Digest Digest::from_hex(std::string_view h) {
    Bytes raw = relay::from_hex(h);
    if (raw.size() != 32) throw std::invalid_argument("digest hex must be 32 bytes");
    Digest d;
    std::memcpy(d.bytes.data(), raw.data(), 32);
    return d;
}

Digest sha256(ByteView data) {
    Digest d;
    SHA256(data.data(), data.size(), d.bytes.data());
    return d;
}

Digest hash_parts(std::string_view tag, std::initializer_list<ByteView> parts) {
    Bytes buf;
    std::size_t total = tag.size() + 1;
    for (const auto& p : parts) total += 8 + p.size();
    buf.reserve(total);
    buf.insert(buf.end(), tag.begin(), tag.end());
    buf.push_back(0x00);
    for (const auto& p : parts) append_field(buf, p);
    return sha256(buf);
}

Digest relay_digest(ByteView signed_request, ByteView signed_response) {
    if (signed_request.empty()) throw std::invalid_argument("relay_digest: empty request");
    if (signed_response.empty()) throw std::invalid_argument("relay_digest: empty response");
    return hash_parts("relay:digest", {signed_request, signed_response});
}

Difficulty Difficulty::from_probability(double p) {
    if (std::isnan(p)) throw std::invalid_argument("difficulty probability is NaN");
    Difficulty d;
    d.probability = std::min(1.0, std::max(kMinProbability, p));
    if (d.probability >= 1.0) {
        d.all_collide = true;
        return d;
    }
    d.all_collide = false;

    // threshold = floor(p * 2^256). Split p into mantissa * 2^exp (53-bit
    // mantissa) and place the mantissa at bit offset 203 + exp of the 256-bit
    // big-endian threshold. p >= 2^-64 guarantees the offset is non-negative.
    int exp = 0;
    double frac = std::frexp(d.probability, &exp);  // p = frac * 2^exp, frac in [0.5, 1)
    auto mant = static_cast<std::uint64_t>(std::ldexp(frac, 53));
    int shift = 203 + exp;
    for (int bit = 0; bit < 53; ++bit) {
        if (!(mant & (1ULL << bit))) continue;
        int pos = shift + bit;
        if (pos > 255) continue;  // cannot happen for p < 1, kept as a guard
        d.threshold[31 - pos / 8] |= static_cast<std::uint8_t>(1u << (pos % 8));
    }
    bool zero = true;
    for (auto b : d.threshold)
        if (b) zero = false;
    if (zero) d.threshold[31] = 1;
    return d;
}

bool check_collision(const Digest& d, const Difficulty& diff) {
    if (diff.all_collide) return true;
    // Big-endian integers compare as their byte arrays do; ties do not collide.
    return d.bytes < diff.threshold;
}

}  // namespace relay
