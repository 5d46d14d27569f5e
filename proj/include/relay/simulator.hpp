#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "relay/claimproof.hpp"
#include "relay/difficulty.hpp"
#include "relay/session.hpp"
#include "relay/trace.hpp"

namespace relay {

struct SimApp {
    std::string id;
    double weight = 1.0;
    std::uint64_t stake = 1'000'000;
};

enum class SimMode { fast, full };

const char* to_string(SimMode m);

struct SimConfig {
    ControllerParams controller;
    SessionParams session;
    ClaimWindows windows;
    double reward_rate = 1.0;
    SimMode mode = SimMode::fast;
    std::uint64_t seed = 1;
    std::vector<SimApp> apps = {{"app-0", 1.0, 1'000'000}};
    std::uint32_t servicer_pool = 0;  // 0 means exactly servicers_per_session
    int key_width = 256;              // trie width used in full mode
    bool dump_tries = false;
    std::string dump_dir;

    std::int64_t warmup_blocks() const;
    void validate() const;  // throws std::invalid_argument naming the problem
};

struct BlockMetrics {
    std::int64_t height = 0;
    std::string service_id;
    std::int64_t true_relays = 0;   // R*
    std::int64_t claims = 0;        // C
    double estimated = 0.0;         // R = C / p
    double target_error_pct = 0.0;  // 100 (C - T) / T
    double volume_error_pct = 0.0;  // 100 (R - R*) / R*
    double probability = 1.0;
    double ema = 0.0;
};

struct SimAggregates {
    std::int64_t blocks = 0;
    std::int64_t warmup_blocks = 0;
    double min_target_error_pct = 0.0;
    double max_target_error_pct = 0.0;
    double mean_target_error_pct = 0.0;
    double accumulated_target_error_claims = 0.0;  // sum of (C - T) over the window
    double accumulated_target_error_per_block = 0.0;
    double min_volume_error_pct = 0.0;
    double max_volume_error_pct = 0.0;
    double mean_volume_error_pct = 0.0;
};

struct SimResult {
    std::vector<BlockMetrics> blocks;
    std::map<std::string, SimAggregates> aggregates;  // per service
    EventLog events;
    Ledger ledger;
    std::int64_t claims_submitted = 0;
    std::int64_t claims_settled = 0;
    std::int64_t claims_expired = 0;
    std::int64_t claims_invalid = 0;
    std::int64_t margin_breaches = 0;
};

/** Deterministic synthetic block hash for the simulated chain. */
Digest chain_block_hash(std::uint64_t seed, std::int64_t height);

/** Full-fidelity runs drive real tries and proofs; cap them at desk scale. */
inline constexpr std::size_t kMaxFullFidelityBlocks = 256;

/**
 * Drive the trace block by block. Fast mode samples claim counts only; full
 * mode additionally materializes colliding relays through the admission path
 * and runs every claim through challenge, reveal, verification and
 * settlement. Both modes consume identical random sub-streams, so they agree
 * on every claim count and estimate under the same seed.
 */
SimResult run_simulation(const std::vector<TraceBlock>& trace, const SimConfig& config);

/** Aggregate per-block rows of one service; the first warmup rows are excluded. */
SimAggregates compute_metrics(const std::vector<BlockMetrics>& rows, double target_claims,
                              std::int64_t warmup_blocks);

}  // namespace relay
