#pragma once

#include <cstdint>
#include <stdexcept>

#include "relay/hash.hpp"

namespace relay {

struct ControllerParams {
    double target_claims = 1e4;   // T
    double ema_alpha = 0.1;       // EMA fold factor
    std::int64_t update_interval = 4;  // U, blocks between difficulty updates
    double initial_ema = 0.0;     // warm start; 0 = cold (probability opens at 1)

    void validate() const;
};

struct ControllerRecord {
    std::int64_t height = 0;
    std::int64_t claims = 0;      // C
    double estimated = 0.0;       // R = C / p
    double ema = 0.0;             // r_ema after this block
    double probability = 1.0;     // p in effect for this block
};

/**
 * Per-service EMA feedback controller steering the collision probability so
 * observed claims per block track the target.
 *
 * The difficulty update is applied at the start of an update-height block
 * (height starts at 0, so the first block is an update block); claims mined
 * within that block already use the new probability. R = C/p therefore always
 * divides by the probability the claims were sampled with.
 */
class DifficultyController {
public:
    explicit DifficultyController(ControllerParams params);

    /** Apply the scheduled update if this is an update height; returns p for the block. */
    double begin_block();

    /** Fold this block's claims into the estimate: R = C/p, EMA, height++. */
    ControllerRecord record_claims(std::int64_t claims);

    /** begin_block() + record_claims() in one step. */
    ControllerRecord observe_block(std::int64_t claims);

    double probability() const { return probability_; }
    Difficulty difficulty() const { return Difficulty::from_probability(probability_); }
    double ema() const { return ema_; }
    std::int64_t height() const { return height_; }
    const ControllerParams& params() const { return params_; }

private:
    ControllerParams params_;
    double ema_ = 0.0;
    double probability_ = 1.0;
    std::int64_t height_ = 0;
    bool in_block_ = false;
};

}  // namespace relay
