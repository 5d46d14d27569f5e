#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "relay/hash.hpp"

namespace relay {

/**
 * Deterministic random source (xoshiro256**). The standard library engines and
 * distributions are implementation-defined, so everything that must reproduce
 * bit-identically across platforms and runs draws from this instead.
 *
 * A generator remembers the digest it was seeded from; substream(label)
 * derives an independent child generator from (seed, label) without consuming
 * parent state, so evaluation order and parallelism never change results.
 */
class Rng {
public:
    static Rng from_seed(std::uint64_t seed);
    static Rng from_digest(const Digest& d);

    Rng substream(std::string_view label) const;

    std::uint64_t next_u64();
    double next_double();                         // uniform in [0, 1)
    std::uint64_t uniform_below(std::uint64_t bound);  // uniform in [0, bound)
    double normal();                              // standard normal, Marsaglia polar
    void fill(std::span<std::uint8_t> out);

    /** Binomial(n, p) variate. Inversion for small n*p, transformed rejection otherwise. */
    std::int64_t binomial(std::int64_t n, double p);

    /** Split n into one count per weight, multinomially. Weights must be non-negative, not all zero. */
    std::vector<std::int64_t> multinomial(std::int64_t n, const std::vector<double>& weights);

    /** First k slots of a partial Fisher-Yates shuffle of 0..n-1. */
    std::vector<std::uint32_t> sample_without_replacement(std::uint32_t n, std::uint32_t k);

private:
    Digest seed_{};
    std::array<std::uint64_t, 4> state_{};
};

}  // namespace relay
