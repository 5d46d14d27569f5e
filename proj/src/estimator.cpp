#include "relay/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace relay {

VolumeEstimate estimate_volume(std::int64_t claims, double probability) {
    if (claims < 0) throw std::invalid_argument("estimate: negative claim count");
    if (!(probability > 0.0) || probability > 1.0 || std::isnan(probability)) {
        throw std::invalid_argument("estimate: probability must be in (0, 1]");
    }
    return VolumeEstimate{claims, probability, static_cast<double>(claims) / probability};
}

std::vector<double> log_grid(double lo, double hi, int steps) {
    if (!(lo > 0) || !(hi >= lo) || steps < 1) throw std::invalid_argument("log_grid: bad range");
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(steps));
    if (steps == 1) {
        out.push_back(lo);
        return out;
    }
    double ratio = std::log(hi / lo) / (steps - 1);
    for (int i = 0; i < steps; ++i) out.push_back(lo * std::exp(ratio * i));
    out.back() = hi;  // kill accumulated rounding on the endpoint
    return out;
}

double BiasExperimentParams::resolve_volume(double difficulty) const {
    if (relays_per_block > 0.0) return relays_per_block;
    // Default chain volume: T * d relays would put the chain exactly at target;
    // the extra 1/v_max factor keeps at least one expected claim in every cell.
    double v_max = *std::max_element(participations.begin(), participations.end());
    return target_claims * difficulty / v_max;
}

std::vector<BiasCell> run_bias_experiment(const BiasExperimentParams& params, const Rng& base) {
    if (params.difficulties.empty() || params.participations.empty()) {
        throw std::invalid_argument("experiment: empty grid");
    }
    if (params.draws < 1) throw std::invalid_argument("experiment: draws must be >= 1");
    for (double d : params.difficulties) {
        if (!(d >= 1.0)) throw std::invalid_argument("experiment: difficulty must be >= 1");
    }
    for (double v : params.participations) {
        if (!(v > 0.0) || v > 1.0) {
            throw std::invalid_argument("experiment: participation must be in (0, 1]");
        }
    }

    std::vector<BiasCell> grid;
    grid.reserve(params.difficulties.size() * params.participations.size());
    for (std::size_t di = 0; di < params.difficulties.size(); ++di) {
        for (std::size_t vi = 0; vi < params.participations.size(); ++vi) {
            double d = params.difficulties[di];
            double v = params.participations[vi];
            double chain_volume = params.resolve_volume(d);
            double p = 1.0 / d;
            double app_volume = v * chain_volume;
            auto n = static_cast<std::int64_t>(std::llround(app_volume));

            BiasCell cell;
            cell.difficulty = d;
            cell.participation = v;
            cell.draws = params.draws;
            cell.expected = app_volume;
            cell.degenerate = app_volume < 1.0;

            Rng rng = base.substream("cell/" + std::to_string(di) + "/" + std::to_string(vi));
            // Welford accumulation: the squared-deviation sum stays stable even
            // when the spread is tiny next to the mean.
            double mean = 0.0;
            double m2 = 0.0;
            for (std::int64_t i = 0; i < params.draws; ++i) {
                double x = static_cast<double>(rng.binomial(n, p)) * d;
                double delta = x - mean;
                mean += delta / static_cast<double>(i + 1);
                m2 += delta * (x - mean);
            }
            double spread = std::sqrt(m2 / static_cast<double>(params.draws));
            cell.mean_estimate = mean;
            cell.bias_pct = (mean - app_volume) / app_volume * 100.0;
            cell.variability_pct = 2.0 * spread * 100.0;
            cell.variability_rel_pct = mean > 0.0 ? cell.variability_pct / mean : 0.0;
            grid.push_back(cell);
        }
    }
    return grid;
}

}  // namespace relay
