// relaymine: trace-driven simulation, estimation experiments, and trie
// proof tooling for relay mining, in one binary.
#include <iostream>

#include "CLI11.hpp"
#include "relay/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"relay mining simulator and proof tool"};
    app.require_subcommand(1);

    relay::SimulateOptions sim_opt;
    std::string sim_mode;
    std::uint64_t sim_seed = 0;
    auto* sim = app.add_subcommand("simulate", "drive a traffic trace through the protocol");
    sim->add_option("--config", sim_opt.config_path, "config JSON path");
    sim->add_option("--trace", sim_opt.trace_path, "input trace CSV");
    sim->add_option("--shape", sim_opt.shape,
                    "synthetic shape: steady | soft-surge | step-drop | step-surge");
    auto* sim_seed_opt = sim->add_option("--seed", sim_seed, "override the config seed");
    auto* sim_mode_opt = sim->add_option("--mode", sim_mode, "fast | full");
    sim->add_option("--out-dir", sim_opt.out_dir, "output directory")->capture_default_str();

    relay::ExperimentOptions exp_opt;
    std::uint64_t exp_seed = 0;
    std::string exp_grid;
    auto* exp = app.add_subcommand("experiment", "run the estimation bias/variability grid");
    exp->add_option("--config", exp_opt.config_path, "config JSON path");
    auto* exp_seed_opt = exp->add_option("--seed", exp_seed, "override the config seed");
    auto* exp_grid_opt = exp->add_option("--grid", exp_grid, "grid steps as DxV, e.g. 13x13");
    exp->add_option("--out-dir", exp_opt.out_dir, "output directory")->capture_default_str();

    relay::ProveOptions prove_opt;
    auto* prove = app.add_subcommand("prove", "closest-leaf proof from a trie export");
    prove->add_option("--trie", prove_opt.trie_path, "trie export file")->required();
    prove->add_option("--target", prove_opt.target_hex, "target path, hex")->required();
    prove->add_option("--out-dir", prove_opt.out_dir, "output directory")->capture_default_str();

    relay::VerifyOptions verify_opt;
    std::string verify_target;
    auto* verify = app.add_subcommand("verify", "check a proof against a trie export");
    verify->add_option("--trie", verify_opt.trie_path, "trie export file")->required();
    verify->add_option("--proof", verify_opt.proof_path, "proof JSON file")->required();
    auto* verify_target_opt =
        verify->add_option("--target", verify_target, "expected target path, hex");

    CLI11_PARSE(app, argc, argv);

    if (sim->parsed()) {
        if (*sim_seed_opt) sim_opt.seed = sim_seed;
        if (*sim_mode_opt) sim_opt.mode = sim_mode;
        return relay::cmd_simulate(sim_opt, std::cerr);
    }
    if (exp->parsed()) {
        if (*exp_seed_opt) exp_opt.seed = exp_seed;
        if (*exp_grid_opt) exp_opt.grid = exp_grid;
        return relay::cmd_experiment(exp_opt, std::cerr);
    }
    if (prove->parsed()) return relay::cmd_prove(prove_opt, std::cerr);
    if (verify->parsed()) {
        if (*verify_target_opt) verify_opt.target_hex = verify_target;
        return relay::cmd_verify(verify_opt, std::cerr);
    }
    return 1;
}
