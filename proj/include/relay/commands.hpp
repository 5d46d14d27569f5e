#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "relay/config.hpp"
#include "relay/smst.hpp"

namespace relay {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // validation / verification failures
inline constexpr int kExitParse = 2;    // malformed input files

struct SimulateOptions {
    std::string config_path;
    std::string trace_path;
    std::string shape;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> mode;
    std::string out_dir = "out";
};

struct ExperimentOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> grid;  // "DxV" step counts, e.g. "13x13"
    std::string out_dir = "out";
};

struct ProveOptions {
    std::string trie_path;
    std::string target_hex;
    std::string out_dir = "out";
};

struct VerifyOptions {
    std::string trie_path;
    std::string proof_path;
    std::optional<std::string> target_hex;
};

int cmd_simulate(const SimulateOptions& opt, std::ostream& diag);
int cmd_experiment(const ExperimentOptions& opt, std::ostream& diag);
int cmd_prove(const ProveOptions& opt, std::ostream& diag);
int cmd_verify(const VerifyOptions& opt, std::ostream& diag);

nlohmann::ordered_json proof_to_json(const MembershipProof& proof, const NodeSummary& root,
                                     const BitPath& target);
MembershipProof proof_from_json(const nlohmann::json& j, NodeSummary* root_out = nullptr,
                                BitPath* target_out = nullptr);

}  // namespace relay
