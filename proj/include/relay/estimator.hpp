#pragma once

#include <cstdint>
#include <vector>

#include "relay/rng.hpp"

namespace relay {

/** Point estimate of true relay volume from observed claims: R = C / p. */
struct VolumeEstimate {
    std::int64_t claims = 0;
    double probability = 1.0;
    double estimate = 0.0;
};

VolumeEstimate estimate_volume(std::int64_t claims, double probability);

/**
 * One cell of the per-application estimation experiment: an application with
 * participation v of a chain running at difficulty d (p = 1/d), with draws of
 * its claimed count scaled back up by d.
 */
struct BiasCell {
    double difficulty = 1.0;      // d
    double participation = 0.0;   // v
    std::int64_t draws = 0;       // I
    double mean_estimate = 0.0;   // average of the per-draw volume estimates
    double expected = 0.0;        // v * R
    double bias_pct = 0.0;
    double variability_pct = 0.0;      // 2 * sqrt(mean squared deviation) * 100, absolute
    double variability_rel_pct = 0.0;  // the same spread relative to the mean estimate
    bool degenerate = false;           // v * R < 1
};

struct BiasExperimentParams {
    std::vector<double> difficulties;
    std::vector<double> participations;
    double target_claims = 1e4;  // T
    std::int64_t draws = 10000;  // I
    /** Chain volume per block; 0 selects T * d / min-grid-v... see resolve_volume(). */
    double relays_per_block = 0.0;

    double resolve_volume(double difficulty) const;
};

/** Log-spaced grid helper, inclusive of both endpoints. */
std::vector<double> log_grid(double lo, double hi, int steps);

/**
 * Monte Carlo sweep over the (d, v) grid. Cells use independent derived
 * sub-streams, so the grid is reproducible cell-by-cell under one seed.
 */
std::vector<BiasCell> run_bias_experiment(const BiasExperimentParams& params, const Rng& base);

}  // namespace relay
