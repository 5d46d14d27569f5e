#include "relay/rng.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

namespace relay {

namespace {

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

// Stirling series tail of log(k!), exact table for small k.
double stirling_tail(double k) {
    static const double table[] = {
        0.0810614667953272,  0.0413406959554092,  0.0276779256849983,
        0.02079067210376509, 0.0166446911898211,  0.0138761288230707,
        0.0118967099458917,  0.0104112652619720,  0.00925546218271273,
        0.00833056343336287,
    };
    if (k <= 9.0) return table[static_cast<int>(k)];
    double kp1sq = (k + 1.0) * (k + 1.0);
    return (1.0 / 12 - (1.0 / 360 - 1.0 / 1260 / kp1sq) / kp1sq) / (k + 1.0);
}

}  // namespace

Rng Rng::from_digest(const Digest& d) {
    Rng r;
    r.seed_ = d;
    for (int i = 0; i < 4; ++i) {
        r.state_[i] = read_be64(ByteView(d.bytes.data() + 8 * i, 8));
    }
    if (r.state_[0] == 0 && r.state_[1] == 0 && r.state_[2] == 0 && r.state_[3] == 0) {
        r.state_[0] = 1;  // xoshiro forbids the all-zero state
    }
    return r;
}

Rng Rng::from_seed(std::uint64_t seed) {
    Bytes b;
    append_be64(b, seed);
    return from_digest(hash_parts("rng:seed", {ByteView(b)}));
}

Rng Rng::substream(std::string_view label) const {
    Bytes lab = to_bytes(label);
    return from_digest(hash_parts("rng:stream", {seed_.view(), ByteView(lab)}));
}

std::uint64_t Rng::next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
}

double Rng::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::uniform_below(std::uint64_t bound) {
    if (bound <= 1) return 0;
    int bits = std::bit_width(bound - 1);
    std::uint64_t mask = (bits >= 64) ? ~0ULL : ((1ULL << bits) - 1);
    for (;;) {
        std::uint64_t x = next_u64() & mask;
        if (x < bound) return x;
    }
}

double Rng::normal() {
    for (;;) {
        double u = 2.0 * next_double() - 1.0;
        double v = 2.0 * next_double() - 1.0;
        double s = u * u + v * v;
        if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
    }
}

void Rng::fill(std::span<std::uint8_t> out) {
    std::size_t i = 0;
    while (i < out.size()) {
        std::uint64_t x = next_u64();
        for (int b = 7; b >= 0 && i < out.size(); --b) {
            out[i++] = static_cast<std::uint8_t>(x >> (8 * b));
        }
    }
}

std::int64_t Rng::binomial(std::int64_t n, double p) {
    if (n < 0) throw std::invalid_argument("binomial: negative n");
    if (std::isnan(p)) throw std::invalid_argument("binomial: NaN p");
    if (n == 0 || p <= 0.0) return 0;
    if (p >= 1.0) return n;

    bool flipped = p > 0.5;
    double r = flipped ? 1.0 - p : p;
    double nd = static_cast<double>(n);
    std::int64_t k;

    if (nd * r < 10.0) {
        // Inversion (CDF walk). n*r < 10 keeps q^n well above underflow.
        double q = 1.0 - r;
        double s = r / q;
        double a = (nd + 1.0) * s;
        for (;;) {
            double f = std::pow(q, nd);
            double u = next_double();
            std::int64_t x = 0;
            while (u > f) {
                u -= f;
                x += 1;
                if (x > n) break;  // numeric tail guard, restart
                f *= (a / static_cast<double>(x) - s);
            }
            if (x <= n) {
                k = x;
                break;
            }
        }
    } else {
        // Transformed rejection with squeeze (Hormann's BTRS).
        double q = 1.0 - r;
        double stddev = std::sqrt(nd * r * q);
        double b = 1.15 + 2.53 * stddev;
        double a = -0.0873 + 0.0248 * b + 0.01 * r;
        double c = nd * r + 0.5;
        double v_r = 0.92 - 4.2 / b;
        double rr = r / q;
        double alpha = (2.83 + 5.1 / b) * stddev;
        double m = std::floor((nd + 1.0) * r);
        for (;;) {
            double u = next_double() - 0.5;
            double v = next_double();
            double us = 0.5 - std::abs(u);
            double kd = std::floor((2.0 * a / us + b) * u + c);
            if (us >= 0.07 && v <= v_r) {
                k = static_cast<std::int64_t>(kd);
                break;
            }
            if (kd < 0.0 || kd > nd) continue;
            double logv = std::log(v * alpha / (a / (us * us) + b));
            double bound = (m + 0.5) * std::log((m + 1.0) / (rr * (nd - m + 1.0))) +
                           (nd + 1.0) * std::log((nd - m + 1.0) / (nd - kd + 1.0)) +
                           (kd + 0.5) * std::log(rr * (nd - kd + 1.0) / (kd + 1.0)) +
                           stirling_tail(m) + stirling_tail(nd - m) - stirling_tail(kd) -
                           stirling_tail(nd - kd);
            if (logv <= bound) {
                k = static_cast<std::int64_t>(kd);
                break;
            }
        }
    }
    return flipped ? n - k : k;
}

std::vector<std::int64_t> Rng::multinomial(std::int64_t n, const std::vector<double>& weights) {
    if (weights.empty()) throw std::invalid_argument("multinomial: no weights");
    double total = 0.0;
    for (double w : weights) {
        if (w < 0.0 || std::isnan(w)) throw std::invalid_argument("multinomial: bad weight");
        total += w;
    }
    if (total <= 0.0) throw std::invalid_argument("multinomial: weights sum to zero");

    std::vector<std::int64_t> out(weights.size(), 0);
    std::int64_t remaining = n;
    double wsum = total;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
        if (remaining == 0 || wsum <= 0.0) break;
        double p = std::min(1.0, weights[i] / wsum);
        out[i] = binomial(remaining, p);
        remaining -= out[i];
        wsum -= weights[i];
    }
    out.back() += remaining;
    return out;
}

std::vector<std::uint32_t> Rng::sample_without_replacement(std::uint32_t n, std::uint32_t k) {
    if (k > n) throw std::invalid_argument("sample_without_replacement: k > n");
    std::vector<std::uint32_t> idx(n);
    for (std::uint32_t i = 0; i < n; ++i) idx[i] = i;
    for (std::uint32_t i = 0; i < k; ++i) {
        std::uint32_t j = i + static_cast<std::uint32_t>(uniform_below(n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
}

}  // namespace relay
