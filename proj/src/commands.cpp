#include "relay/commands.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

namespace relay {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

Config load_config_or_default(const std::string& path) {
    if (path.empty()) {
        Config c;
        c.validate();
        return c;
    }
    return Config::load_file(path);
}

ordered_json run_meta(const Config& cfg) {
    return ordered_json{{"version", kVersion},
                        {"seed", cfg.seed},
                        {"mode", to_string(cfg.mode)},
                        {"config_hash", cfg.config_hash().hex()}};
}

void write_text(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

void write_metrics_csv(const fs::path& path, const SimResult& result) {
    std::string csv =
        "height,service_id,true_relays,claims,estimated_relays,"
        "target_error_pct,volume_error_pct,probability,ema\n";
    for (const auto& m : result.blocks) {
        csv += std::to_string(m.height) + ',' + m.service_id + ',' +
               std::to_string(m.true_relays) + ',' + std::to_string(m.claims) + ',' +
               fmt_double(m.estimated) + ',' + fmt_double(m.target_error_pct) + ',' +
               fmt_double(m.volume_error_pct) + ',' + fmt_double(m.probability) + ',' +
               fmt_double(m.ema) + '\n';
    }
    write_text(path, csv);
}

ordered_json aggregates_json(const Config& cfg, const SimResult& result) {
    ordered_json services = ordered_json::object();
    for (const auto& [svc, agg] : result.aggregates) {
        services[svc] = ordered_json{
            {"blocks", agg.blocks},
            {"warmup_blocks", agg.warmup_blocks},
            {"target_error",
             {{"min_pct", agg.min_target_error_pct},
              {"max_pct", agg.max_target_error_pct},
              {"mean_pct", agg.mean_target_error_pct},
              {"accumulated_claims", agg.accumulated_target_error_claims},
              {"accumulated_claims_per_block", agg.accumulated_target_error_per_block}}},
            {"volume_error",
             {{"min_pct", agg.min_volume_error_pct},
              {"max_pct", agg.max_volume_error_pct},
              {"mean_pct", agg.mean_volume_error_pct}}}};
    }
    return ordered_json{{"meta", run_meta(cfg)},
                        {"target_claims", cfg.difficulty.target_claims},
                        {"services", services},
                        {"claims",
                         {{"submitted", result.claims_submitted},
                          {"settled", result.claims_settled},
                          {"expired", result.claims_expired},
                          {"invalid", result.claims_invalid}}},
                        {"ledger",
                         {{"total_minted", result.ledger.total_minted()},
                          {"total_burned", result.ledger.total_burned()}}},
                        {"margin_breaches", result.margin_breaches}};
}

}  // namespace

int cmd_simulate(const SimulateOptions& opt, std::ostream& diag) {
    Config cfg;
    try {
        cfg = load_config_or_default(opt.config_path);
        if (opt.seed) cfg.seed = *opt.seed;
        if (opt.mode) {
            if (*opt.mode == "fast")
                cfg.mode = SimMode::fast;
            else if (*opt.mode == "full")
                cfg.mode = SimMode::full;
            else
                throw ConfigError("sim.mode", "must be \"fast\" or \"full\"");
        }
    } catch (const std::exception& e) {
        diag << "config error: " << e.what() << '\n';
        return kExitFailure;
    }

    if (opt.trace_path.empty() == opt.shape.empty()) {
        diag << "config error: exactly one of --trace or --shape is required\n";
        return kExitFailure;
    }

    std::vector<TraceBlock> trace;
    try {
        if (!opt.trace_path.empty()) {
            trace = load_trace_file(opt.trace_path);
        } else {
            SynthParams params;
            params.shape = parse_shape(opt.shape);
            trace = synth_trace(params, Rng::from_seed(cfg.seed).substream("trace"));
        }
    } catch (const MalformedTraceError& e) {
        diag << "trace error: " << e.what() << '\n';
        return kExitParse;
    } catch (const std::exception& e) {
        diag << "trace error: " << e.what() << '\n';
        return kExitFailure;
    }

    SimConfig sim = cfg.sim_config();
    if (sim.dump_tries) sim.dump_dir = opt.out_dir;
    SimResult result;
    try {
        result = run_simulation(trace, sim);
    } catch (const std::exception& e) {
        diag << "simulation error: " << e.what() << '\n';
        return kExitFailure;
    }

    fs::create_directories(opt.out_dir);
    write_metrics_csv(fs::path(opt.out_dir) / "metrics.csv", result);
    write_text(fs::path(opt.out_dir) / "aggregates.json",
               aggregates_json(cfg, result).dump(2) + "\n");
    std::ofstream events(fs::path(opt.out_dir) / "events.ndjson",
                         std::ios::binary | std::ios::trunc);
    result.events.write_ndjson(events);
    return kExitOk;
}

int cmd_experiment(const ExperimentOptions& opt, std::ostream& diag) {
    Config cfg;
    BiasExperimentParams params;
    try {
        cfg = load_config_or_default(opt.config_path);
        if (opt.seed) cfg.seed = *opt.seed;
        if (opt.grid) {
            auto x = opt.grid->find('x');
            if (x == std::string::npos) throw ConfigError("--grid", "expected DxV, e.g. 13x13");
            cfg.estimator.difficulty_steps = std::stoi(opt.grid->substr(0, x));
            cfg.estimator.participation_steps = std::stoi(opt.grid->substr(x + 1));
            cfg.validate();
        }
        params = cfg.estimator.to_params(cfg.difficulty.target_claims);
    } catch (const std::exception& e) {
        diag << "config error: " << e.what() << '\n';
        return kExitFailure;
    }

    std::vector<BiasCell> grid =
        run_bias_experiment(params, Rng::from_seed(cfg.seed).substream("experiment"));

    fs::create_directories(opt.out_dir);
    std::string csv =
        "difficulty,participation,draws,bias_pct,variability_pct,variability_rel_pct,"
        "degenerate\n";
    for (const auto& c : grid) {
        csv += fmt_double(c.difficulty) + ',' + fmt_double(c.participation) + ',' +
               std::to_string(c.draws) + ',' + fmt_double(c.bias_pct) + ',' +
               fmt_double(c.variability_pct) + ',' + fmt_double(c.variability_rel_pct) + ',' +
               (c.degenerate ? "1" : "0") + '\n';
    }
    write_text(fs::path(opt.out_dir) / "grid.csv", csv);
    write_text(fs::path(opt.out_dir) / "meta.json", run_meta(cfg).dump(2) + "\n");
    return kExitOk;
}

ordered_json proof_to_json(const MembershipProof& proof, const NodeSummary& root,
                           const BitPath& target) {
    ordered_json siblings = ordered_json::array();
    for (const auto& s : proof.siblings) {
        siblings.push_back({{"hash", s.hash.hex()}, {"sum", s.sum}});
    }
    return ordered_json{{"width", proof.leaf_key.width},
                        {"target", target.hex()},
                        {"leaf_key", proof.leaf_key.hex()},
                        {"value_hash", proof.value_hash.hex()},
                        {"weight", proof.weight},
                        {"root", {{"hash", root.hash.hex()}, {"sum", root.sum}}},
                        {"siblings", siblings}};
}

MembershipProof proof_from_json(const json& j, NodeSummary* root_out, BitPath* target_out) {
    MembershipProof proof;
    int width = j.at("width").get<int>();
    proof.leaf_key = BitPath::from_hex(j.at("leaf_key").get<std::string>(), width);
    proof.value_hash = Digest::from_hex(j.at("value_hash").get<std::string>());
    proof.weight = j.at("weight").get<std::uint64_t>();
    for (const auto& s : j.at("siblings")) {
        proof.siblings.push_back(NodeSummary{Digest::from_hex(s.at("hash").get<std::string>()),
                                             s.at("sum").get<std::uint64_t>()});
    }
    if (root_out) {
        *root_out = NodeSummary{Digest::from_hex(j.at("root").at("hash").get<std::string>()),
                                j.at("root").at("sum").get<std::uint64_t>()};
    }
    if (target_out) {
        *target_out = BitPath::from_hex(j.at("target").get<std::string>(), width);
    }
    return proof;
}

int cmd_prove(const ProveOptions& opt, std::ostream& diag) {
    try {
        std::ifstream in(opt.trie_path);
        if (!in) {
            diag << "prove error: cannot open " << opt.trie_path << '\n';
            return kExitParse;
        }
        SumTrie trie = SumTrie::import_from(in);
        BitPath target = BitPath::from_hex(opt.target_hex, trie.key_width());
        MembershipProof proof = trie.closest_proof(target);
        fs::create_directories(opt.out_dir);
        write_text(fs::path(opt.out_dir) / "proof.json",
                   proof_to_json(proof, trie.root(), target).dump(2) + "\n");
        return kExitOk;
    } catch (const EmptyTrieError& e) {
        diag << "prove error: " << e.what() << '\n';
        return kExitFailure;
    } catch (const std::exception& e) {
        diag << "prove error: " << e.what() << '\n';
        return kExitParse;
    }
}

int cmd_verify(const VerifyOptions& opt, std::ostream& diag) {
    NodeSummary trie_root;
    MembershipProof proof;
    NodeSummary declared_root;
    BitPath target;
    try {
        std::ifstream in(opt.trie_path);
        if (!in) {
            diag << "verify error: cannot open " << opt.trie_path << '\n';
            return kExitParse;
        }
        SumTrie trie = SumTrie::import_from(in);
        trie_root = trie.root();
        std::ifstream pin(opt.proof_path);
        if (!pin) {
            diag << "verify error: cannot open " << opt.proof_path << '\n';
            return kExitParse;
        }
        json pj;
        pin >> pj;
        proof = proof_from_json(pj, &declared_root, &target);
        if (opt.target_hex) {
            target = BitPath::from_hex(*opt.target_hex, proof.leaf_key.width);
        }
    } catch (const std::exception& e) {
        diag << "verify error: " << e.what() << '\n';
        return kExitParse;
    }

    if (!(declared_root == trie_root)) {
        diag << "verification failed: proof root does not match the trie export\n";
        return kExitFailure;
    }
    if (!verify_closest_proof(trie_root, proof, target)) {
        diag << "verification failed\n";
        return kExitFailure;
    }
    diag << "ok: leaf " << proof.leaf_key.hex() << " verifies against root sum "
         << trie_root.sum << '\n';
    return kExitOk;
}

}  // namespace relay
