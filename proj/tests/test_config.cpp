#include "doctest.h"
#include "relay/config.hpp"

using namespace relay;
using nlohmann::json;

TEST_CASE("defaults are the reference constants") {
    Config c;
    c.validate();
    CHECK(c.difficulty.target_claims == 1e4);
    CHECK(c.difficulty.ema_alpha == 0.1);
    CHECK(c.difficulty.update_interval == 4);
    CHECK(c.session.servicers_per_session == 12);
    CHECK(c.session.ttrm == 1000);
    CHECK(c.session.relay_accuracy == 0.2);
    CHECK(c.app_stake == 1000000);
    CHECK(c.session.window_blocks == 4);
    CHECK(c.claimproof.claim_window == 4);
    CHECK(c.claimproof.proof_window == 4);
}

TEST_CASE("json fields override defaults") {
    json j = {
        {"difficulty", {{"target_claims", 500}, {"ema_alpha", 0.2}}},
        {"session", {{"servicers_per_session", 4}, {"app_stake", 77}}},
        {"sim", {{"seed", 99}, {"mode", "full"}}},
    };
    Config c = Config::from_json(j);
    CHECK(c.difficulty.target_claims == 500);
    CHECK(c.difficulty.ema_alpha == 0.2);
    CHECK(c.difficulty.update_interval == 4);  // untouched default
    CHECK(c.session.servicers_per_session == 4);
    CHECK(c.app_stake == 77);
    CHECK(c.seed == 99);
    CHECK(c.mode == SimMode::full);
}

TEST_CASE("validation errors name the field") {
    auto field_of = [](const json& j) -> std::string {
        try {
            Config::from_json(j);
        } catch (const ConfigError& e) {
            return e.field;
        }
        return "";
    };
    CHECK(field_of({{"difficulty", {{"ema_alpha", nullptr}}}}) == "difficulty.ema_alpha");
    CHECK(field_of({{"difficulty", {{"ema_alpha", "high"}}}}) == "difficulty.ema_alpha");
    CHECK(field_of({{"difficulty", {{"ema_alpha", 3.0}}}}) == "difficulty.ema_alpha");
    CHECK(field_of({{"difficulty", {{"emaalpha", 0.1}}}}) == "difficulty.emaalpha");
    CHECK(field_of({{"session", {{"ttrm", 0}}}}) == "session.ttrm");
    CHECK(field_of({{"mystery", {{"x", 1}}}}) == "mystery");
    CHECK(field_of({{"sim", {{"mode", "warp"}}}}) == "sim.mode");
    CHECK(field_of({{"sim", {{"apps", json::array({{{"weight", 2.0}}})}}}}) == "sim.apps[0].id");
    CHECK(field_of({{"estimator", {{"participation_min", 0.0}}}}) ==
          "estimator.participation_min");
}

TEST_CASE("app list carries stakes and weights") {
    json j = {{"sim",
               {{"apps", json::array({
                             {{"id", "alpha"}, {"weight", 3.0}},
                             {{"id", "beta"}, {"weight", 1.0}, {"stake", 5000}},
                         })}}}};
    Config c = Config::from_json(j);
    REQUIRE(c.apps.size() == 2);
    CHECK(c.apps[0].id == "alpha");
    CHECK(c.apps[0].stake == 1000000);  // inherits the default stake
    CHECK(c.apps[1].stake == 5000);
    SimConfig sc = c.sim_config();
    CHECK(sc.apps.size() == 2);
}

TEST_CASE("config hash is stable and sensitive") {
    Config a;
    Config b;
    CHECK(a.config_hash() == b.config_hash());
    b.seed = 2;
    CHECK(a.config_hash() != b.config_hash());
}

TEST_CASE("to_json round-trips through from_json") {
    Config a;
    a.seed = 5;
    a.difficulty.target_claims = 123;
    a.apps = {{"solo", 1.0, 999}};
    Config b = Config::from_json(json::parse(a.to_json().dump()));
    CHECK(b.seed == 5);
    CHECK(b.difficulty.target_claims == 123);
    REQUIRE(b.apps.size() == 1);
    CHECK(b.apps[0].stake == 999);
    CHECK(a.config_hash() == b.config_hash());
}

TEST_CASE("load_file reports unreadable and invalid inputs") {
    CHECK_THROWS_AS(Config::load_file("/nonexistent/config.json"), ConfigError);
}
