#include "relay/difficulty.hpp"

#include <algorithm>
#include <cmath>

namespace relay {

void ControllerParams::validate() const {
    if (!(target_claims > 0) || std::isnan(target_claims)) {
        throw std::invalid_argument("controller: target_claims must be positive");
    }
    if (!(ema_alpha > 0.0) || ema_alpha > 1.0 || std::isnan(ema_alpha)) {
        throw std::invalid_argument("controller: ema_alpha must be in (0, 1]");
    }
    if (update_interval < 1) {
        throw std::invalid_argument("controller: update_interval must be >= 1");
    }
    if (initial_ema < 0 || std::isnan(initial_ema)) {
        throw std::invalid_argument("controller: initial_ema must be >= 0");
    }
}

DifficultyController::DifficultyController(ControllerParams params) : params_(params) {
    params_.validate();
    ema_ = params_.initial_ema;
}

double DifficultyController::begin_block() {
    if (in_block_) throw std::logic_error("controller: begin_block called twice");
    in_block_ = true;
    if (height_ % params_.update_interval == 0) {
        // ema == 0 means no volume observed yet: stay fully open rather than
        // divide by zero (the below-target clamp would land at 1 anyway).
        if (ema_ > 0.0) {
            double p = params_.target_claims / ema_;
            probability_ = std::clamp(p, Difficulty::kMinProbability, 1.0);
        }
    }
    return probability_;
}

ControllerRecord DifficultyController::record_claims(std::int64_t claims) {
    if (!in_block_) throw std::logic_error("controller: record_claims outside a block");
    if (claims < 0) throw std::invalid_argument("controller: negative claim count");
    in_block_ = false;
    double estimated = static_cast<double>(claims) / probability_;
    ema_ = params_.ema_alpha * estimated + (1.0 - params_.ema_alpha) * ema_;
    ControllerRecord rec{height_, claims, estimated, ema_, probability_};
    height_ += 1;
    return rec;
}

ControllerRecord DifficultyController::observe_block(std::int64_t claims) {
    begin_block();
    return record_claims(claims);
}

}  // namespace relay
