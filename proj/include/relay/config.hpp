#pragma once

#include <string>

#include "json.hpp"
#include "relay/estimator.hpp"
#include "relay/simulator.hpp"

namespace relay {

inline constexpr const char* kVersion = "0.1.0";

struct ConfigError : std::runtime_error {
    std::string field;
    ConfigError(std::string field_name, const std::string& why)
        : std::runtime_error("config field " + field_name + ": " + why),
          field(std::move(field_name)) {}
};

struct EstimatorGridConfig {
    double difficulty_min = 1.25;
    double difficulty_max = 1000.0;
    int difficulty_steps = 13;
    double participation_min = 0.001;
    double participation_max = 0.1;
    int participation_steps = 13;
    std::int64_t draws = 10000;
    double relays_per_block = 0.0;  // 0 = derived per cell

    BiasExperimentParams to_params(double target_claims) const;
};

/**
 * Whole-run configuration. Defaults are the protocol's reference constants
 * (T=1e4, alpha=0.1, U=4, 12 servicers per session, TTRM=1000, accuracy 0.2,
 * stake 1e6). A JSON file overrides fields; unknown or ill-typed fields fail
 * validation by name.
 */
struct Config {
    ControllerParams difficulty;
    SessionParams session;
    std::uint64_t app_stake = 1'000'000;
    ClaimWindows claimproof;
    double reward_rate = 1.0;
    EstimatorGridConfig estimator;
    SimMode mode = SimMode::fast;
    std::uint64_t seed = 1;
    std::vector<SimApp> apps;  // empty = single default app
    std::uint32_t servicer_pool = 0;
    int key_width = 256;
    bool dump_tries = false;

    static Config from_json(const nlohmann::json& j);  // throws ConfigError
    static Config load_file(const std::string& path);
    nlohmann::ordered_json to_json() const;
    Digest config_hash() const;
    void validate() const;  // throws ConfigError

    SimConfig sim_config() const;
};

}  // namespace relay
