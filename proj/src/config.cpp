#include "relay/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace relay {

using nlohmann::json;
using nlohmann::ordered_json;

BiasExperimentParams EstimatorGridConfig::to_params(double target_claims) const {
    BiasExperimentParams p;
    p.difficulties = log_grid(difficulty_min, difficulty_max, difficulty_steps);
    p.participations = log_grid(participation_min, participation_max, participation_steps);
    p.target_claims = target_claims;
    p.draws = draws;
    p.relays_per_block = relays_per_block;
    return p;
}

namespace {

/** Walks a JSON object, rejecting unknown keys and ill-typed values by name. */
class Section {
public:
    Section(const json& j, std::string prefix) : j_(j), prefix_(std::move(prefix)) {
        if (!j_.is_object()) throw ConfigError(prefix_.empty() ? "<root>" : prefix_, "must be an object");
    }

    ~Section() = default;

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.contains(it.key())) {
                throw ConfigError(path(it.key()), "unknown field");
            }
        }
    }

    bool has(const std::string& key) const { return j_.contains(key) && !j_[key].is_null(); }

    template <typename T>
    void get_number(const std::string& key, T& out) {
        mark(key);
        if (!j_.contains(key)) return;
        const json& v = j_[key];
        if (!v.is_number()) throw ConfigError(path(key), "missing or non-numeric value");
        out = v.get<T>();
    }

    void get_bool(const std::string& key, bool& out) {
        mark(key);
        if (!j_.contains(key)) return;
        const json& v = j_[key];
        if (!v.is_boolean()) throw ConfigError(path(key), "missing or non-boolean value");
        out = v.get<bool>();
    }

    void get_string(const std::string& key, std::string& out) {
        mark(key);
        if (!j_.contains(key)) return;
        const json& v = j_[key];
        if (!v.is_string()) throw ConfigError(path(key), "missing or non-string value");
        out = v.get<std::string>();
    }

    const json* get_raw(const std::string& key) {
        mark(key);
        if (!j_.contains(key)) return nullptr;
        if (j_[key].is_null()) throw ConfigError(path(key), "missing value");
        return &j_[key];
    }

    std::string path(const std::string& key) const {
        return prefix_.empty() ? key : prefix_ + "." + key;
    }

private:
    void mark(const std::string& key) {
        seen_.insert(key);
        if (j_.contains(key) && j_[key].is_null()) {
            throw ConfigError(path(key), "missing value");
        }
    }

    const json& j_;
    std::string prefix_;
    std::set<std::string> seen_;
};

}  // namespace

Config Config::from_json(const json& j) {
    Config c;
    Section root(j, "");

    if (const json* sec = root.get_raw("difficulty")) {
        Section s(*sec, "difficulty");
        s.get_number("target_claims", c.difficulty.target_claims);
        s.get_number("ema_alpha", c.difficulty.ema_alpha);
        s.get_number("update_interval", c.difficulty.update_interval);
        s.get_number("initial_ema", c.difficulty.initial_ema);
        s.finish();
    }
    if (const json* sec = root.get_raw("session")) {
        Section s(*sec, "session");
        s.get_number("servicers_per_session", c.session.servicers_per_session);
        s.get_number("window_blocks", c.session.window_blocks);
        s.get_number("ttrm", c.session.ttrm);
        s.get_number("relay_accuracy", c.session.relay_accuracy);
        s.get_number("app_stake", c.app_stake);
        s.finish();
    }
    if (const json* sec = root.get_raw("claimproof")) {
        Section s(*sec, "claimproof");
        s.get_number("claim_window", c.claimproof.claim_window);
        s.get_number("proof_window", c.claimproof.proof_window);
        s.get_number("reward_rate", c.reward_rate);
        s.finish();
    }
    if (const json* sec = root.get_raw("estimator")) {
        Section s(*sec, "estimator");
        s.get_number("difficulty_min", c.estimator.difficulty_min);
        s.get_number("difficulty_max", c.estimator.difficulty_max);
        s.get_number("difficulty_steps", c.estimator.difficulty_steps);
        s.get_number("participation_min", c.estimator.participation_min);
        s.get_number("participation_max", c.estimator.participation_max);
        s.get_number("participation_steps", c.estimator.participation_steps);
        s.get_number("draws", c.estimator.draws);
        s.get_number("relays_per_block", c.estimator.relays_per_block);
        s.finish();
    }
    if (const json* sec = root.get_raw("sim")) {
        Section s(*sec, "sim");
        std::string mode;
        s.get_string("mode", mode);
        if (!mode.empty()) {
            if (mode == "fast")
                c.mode = SimMode::fast;
            else if (mode == "full")
                c.mode = SimMode::full;
            else
                throw ConfigError("sim.mode", "must be \"fast\" or \"full\"");
        }
        s.get_number("seed", c.seed);
        s.get_number("servicer_pool", c.servicer_pool);
        s.get_number("key_width", c.key_width);
        s.get_bool("dump_tries", c.dump_tries);
        if (const json* apps = s.get_raw("apps")) {
            if (!apps->is_array()) throw ConfigError("sim.apps", "must be an array");
            std::size_t i = 0;
            for (const auto& a : *apps) {
                std::string field = "sim.apps[" + std::to_string(i) + "]";
                Section as(a, field);
                SimApp app;
                app.stake = c.app_stake;
                as.get_string("id", app.id);
                as.get_number("weight", app.weight);
                as.get_number("stake", app.stake);
                as.finish();
                if (app.id.empty()) throw ConfigError(field + ".id", "missing value");
                c.apps.push_back(std::move(app));
                ++i;
            }
        }
        s.finish();
    }
    root.finish();
    c.validate();
    return c;
}

Config Config::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("<file>", "cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("<file>", std::string("invalid JSON: ") + e.what());
    }
    return from_json(j);
}

void Config::validate() const {
    auto fail = [](const std::string& field, const std::string& why) {
        throw ConfigError(field, why);
    };
    if (!(difficulty.target_claims > 0)) fail("difficulty.target_claims", "must be positive");
    if (!(difficulty.ema_alpha > 0.0) || difficulty.ema_alpha > 1.0) {
        fail("difficulty.ema_alpha", "must be in (0, 1]");
    }
    if (difficulty.update_interval < 1) fail("difficulty.update_interval", "must be >= 1");
    if (difficulty.initial_ema < 0) fail("difficulty.initial_ema", "must be >= 0");
    if (session.servicers_per_session == 0) {
        fail("session.servicers_per_session", "must be positive");
    }
    if (session.window_blocks < 1) fail("session.window_blocks", "must be >= 1");
    if (session.ttrm == 0) fail("session.ttrm", "must be positive");
    if (session.relay_accuracy < 0 || std::isnan(session.relay_accuracy)) {
        fail("session.relay_accuracy", "must be >= 0");
    }
    if (app_stake == 0) fail("session.app_stake", "must be positive");
    if (claimproof.claim_window < 1) fail("claimproof.claim_window", "must be >= 1");
    if (claimproof.proof_window < 1) fail("claimproof.proof_window", "must be >= 1");
    if (reward_rate < 0 || std::isnan(reward_rate)) fail("claimproof.reward_rate", "must be >= 0");
    if (!(estimator.difficulty_min >= 1)) fail("estimator.difficulty_min", "must be >= 1");
    if (estimator.difficulty_max < estimator.difficulty_min) {
        fail("estimator.difficulty_max", "must be >= difficulty_min");
    }
    if (estimator.difficulty_steps < 1) fail("estimator.difficulty_steps", "must be >= 1");
    if (!(estimator.participation_min > 0) || estimator.participation_min > 1) {
        fail("estimator.participation_min", "must be in (0, 1]");
    }
    if (estimator.participation_max < estimator.participation_min ||
        estimator.participation_max > 1) {
        fail("estimator.participation_max", "must be in [participation_min, 1]");
    }
    if (estimator.participation_steps < 1) fail("estimator.participation_steps", "must be >= 1");
    if (estimator.draws < 1) fail("estimator.draws", "must be >= 1");
    if (estimator.relays_per_block < 0) fail("estimator.relays_per_block", "must be >= 0");
    if (key_width < 4 || key_width > 256) fail("sim.key_width", "must be in [4, 256]");
    try {
        SimConfig sc = sim_config();
        sc.dump_dir = ".";  // the actual directory is supplied at run time
        sc.validate();
    } catch (const std::exception& e) {
        throw ConfigError("sim", e.what());
    }
}

SimConfig Config::sim_config() const {
    SimConfig sc;
    sc.controller = difficulty;
    sc.session = session;
    sc.windows = claimproof;
    sc.reward_rate = reward_rate;
    sc.mode = mode;
    sc.seed = seed;
    if (apps.empty()) {
        sc.apps = {{"app-0", 1.0, app_stake}};
    } else {
        sc.apps = apps;
    }
    sc.servicer_pool = servicer_pool;
    sc.key_width = key_width;
    sc.dump_tries = dump_tries;
    return sc;
}

ordered_json Config::to_json() const {
    ordered_json apps_j = ordered_json::array();
    for (const auto& a : sim_config().apps) {
        apps_j.push_back({{"id", a.id}, {"weight", a.weight}, {"stake", a.stake}});
    }
    return ordered_json{
        {"difficulty",
         {{"target_claims", difficulty.target_claims},
          {"ema_alpha", difficulty.ema_alpha},
          {"update_interval", difficulty.update_interval},
          {"initial_ema", difficulty.initial_ema}}},
        {"session",
         {{"servicers_per_session", session.servicers_per_session},
          {"window_blocks", session.window_blocks},
          {"ttrm", session.ttrm},
          {"relay_accuracy", session.relay_accuracy},
          {"app_stake", app_stake}}},
        {"claimproof",
         {{"claim_window", claimproof.claim_window},
          {"proof_window", claimproof.proof_window},
          {"reward_rate", reward_rate}}},
        {"estimator",
         {{"difficulty_min", estimator.difficulty_min},
          {"difficulty_max", estimator.difficulty_max},
          {"difficulty_steps", estimator.difficulty_steps},
          {"participation_min", estimator.participation_min},
          {"participation_max", estimator.participation_max},
          {"participation_steps", estimator.participation_steps},
          {"draws", estimator.draws},
          {"relays_per_block", estimator.relays_per_block}}},
        {"sim",
         {{"mode", to_string(mode)},
          {"seed", seed},
          {"servicer_pool", servicer_pool},
          {"key_width", key_width},
          {"dump_tries", dump_tries},
          {"apps", apps_j}}}};
}

Digest Config::config_hash() const {
    std::string dump = to_json().dump();
    Bytes b = to_bytes(dump);
    return hash_parts("config", {ByteView(b)});
}

}  // namespace relay
