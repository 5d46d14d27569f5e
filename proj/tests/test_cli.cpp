#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "relay/commands.hpp"

using namespace relay;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string sub(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

SumTrie reference_trie() {
    SumTrie trie(4);
    for (std::uint64_t key : {0b0101u, 0b1001u, 0b0011u, 0b1110u}) {
        Bytes value = to_bytes("leaf-" + std::to_string(key));
        trie.insert(BitPath::from_uint(key, 4), ByteView(value));
    }
    return trie;
}

// The same traversal rule, worked over an explicit 16-slot array.
int closest_oracle16(const std::vector<bool>& slots, int target) {
    int lo = 0;
    int hi = 16;
    auto any = [&](int a, int b) {
        for (int i = a; i < b; ++i)
            if (slots[static_cast<std::size_t>(i)]) return true;
        return false;
    };
    for (int level = 0; level < 4; ++level) {
        int mid = (lo + hi) / 2;
        bool right = (target >> (3 - level)) & 1;
        if (right) {
            if (any(mid, hi))
                lo = mid;
            else
                hi = mid;
        } else {
            if (any(lo, mid))
                hi = mid;
            else
                lo = mid;
        }
    }
    return lo;
}

}  // namespace

TEST_CASE("simulate is byte-deterministic per seed") {
    TempDir tmp("relay-cli-sim");
    std::ostringstream diag;
    SimulateOptions opt;
    opt.shape = "steady";
    opt.seed = 7;

    opt.out_dir = tmp.sub("run1");
    REQUIRE(cmd_simulate(opt, diag) == kExitOk);
    opt.out_dir = tmp.sub("run2");
    REQUIRE(cmd_simulate(opt, diag) == kExitOk);

    for (const char* name : {"metrics.csv", "aggregates.json", "events.ndjson"}) {
        CHECK(slurp(tmp.sub("run1") + "/" + name) == slurp(tmp.sub("run2") + "/" + name));
    }
    CHECK(slurp(tmp.sub("run1") + "/aggregates.json").find("config_hash") != std::string::npos);
}

TEST_CASE("a broken config field fails with exit 1 and its name") {
    TempDir tmp("relay-cli-cfg");
    write_file(tmp.sub("config.json"), R"({"difficulty": {"ema_alpha": null}})");
    SimulateOptions opt;
    opt.config_path = tmp.sub("config.json");
    opt.shape = "steady";
    opt.out_dir = tmp.sub("out");
    std::ostringstream diag;
    CHECK(cmd_simulate(opt, diag) == kExitFailure);
    CHECK(diag.str().find("difficulty.ema_alpha") != std::string::npos);
}

TEST_CASE("a malformed trace fails with exit 2 and the line number") {
    TempDir tmp("relay-cli-trace");
    write_file(tmp.sub("trace.csv"), "height,service_id,relay_count\n1,eth,5\n1,eth,6\n");
    SimulateOptions opt;
    opt.trace_path = tmp.sub("trace.csv");
    opt.out_dir = tmp.sub("out");
    std::ostringstream diag;
    CHECK(cmd_simulate(opt, diag) == kExitParse);
    CHECK(diag.str().find("line 3") != std::string::npos);
}

TEST_CASE("requesting both trace and shape is refused") {
    SimulateOptions opt;
    opt.trace_path = "x.csv";
    opt.shape = "steady";
    std::ostringstream diag;
    CHECK(cmd_simulate(opt, diag) == kExitFailure);
    opt.trace_path.clear();
    opt.shape.clear();
    CHECK(cmd_simulate(opt, diag) == kExitFailure);
}

TEST_CASE("step surge spikes target error but not volume error") {
    TempDir tmp("relay-cli-surge");
    SimulateOptions opt;
    opt.shape = "step-surge";
    opt.seed = 3;
    opt.out_dir = tmp.sub("out");
    std::ostringstream diag;
    REQUIRE(cmd_simulate(opt, diag) == kExitOk);
    auto agg = nlohmann::json::parse(slurp(tmp.sub("out") + "/aggregates.json"));
    const auto& svc = agg["services"]["svc-0"];
    CHECK(svc["target_error"]["max_pct"].get<double>() > 300.0);
    CHECK(svc["volume_error"]["max_pct"].get<double>() < 10.0);
    CHECK(svc["volume_error"]["min_pct"].get<double>() > -10.0);
}

TEST_CASE("experiment grid writes csv with flags") {
    TempDir tmp("relay-cli-exp");
    ExperimentOptions opt;
    opt.seed = 5;
    opt.grid = "4x4";
    opt.out_dir = tmp.sub("out");
    std::ostringstream diag;

    // shrink draws for test speed
    write_file(tmp.sub("config.json"), R"({"estimator": {"draws": 200}})");
    opt.config_path = tmp.sub("config.json");
    REQUIRE(cmd_experiment(opt, diag) == kExitOk);
    std::string csv = slurp(tmp.sub("out") + "/grid.csv");
    int lines = 0;
    for (char ch : csv)
        if (ch == '\n') ++lines;
    CHECK(lines == 17);  // header + 16 cells
    CHECK(csv.rfind("difficulty,participation,draws,bias_pct,variability_pct,"
                    "variability_rel_pct,degenerate\n", 0) == 0);
    CHECK(slurp(tmp.sub("out") + "/meta.json").find("config_hash") != std::string::npos);
}

TEST_CASE("a single-draw experiment still completes") {
    TempDir tmp("relay-cli-exp1");
    write_file(tmp.sub("config.json"),
               R"({"estimator": {"draws": 1, "difficulty_steps": 2, "participation_steps": 2}})");
    ExperimentOptions opt;
    opt.config_path = tmp.sub("config.json");
    opt.out_dir = tmp.sub("out");
    std::ostringstream diag;
    CHECK(cmd_experiment(opt, diag) == kExitOk);
}

TEST_CASE("prove then verify round-trips on the reference trie") {
    TempDir tmp("relay-cli-prove");
    {
        SumTrie trie = reference_trie();
        std::ofstream out(tmp.sub("trie.smst"));
        trie.export_to(out);
    }
    std::ostringstream diag;
    ProveOptions prove;
    prove.trie_path = tmp.sub("trie.smst");
    prove.target_hex = "10";  // leading bits 0001
    prove.out_dir = tmp.sub("out");
    REQUIRE(cmd_prove(prove, diag) == kExitOk);

    auto pj = nlohmann::json::parse(slurp(tmp.sub("out") + "/proof.json"));
    CHECK(pj["leaf_key"] == "30");  // 0b0011 left-aligned

    VerifyOptions verify;
    verify.trie_path = tmp.sub("trie.smst");
    verify.proof_path = tmp.sub("out") + "/proof.json";
    CHECK(cmd_verify(verify, diag) == kExitOk);
}

TEST_CASE("all sixteen targets prove and verify to the oracle leaf") {
    TempDir tmp("relay-cli-sweep");
    std::vector<bool> slots(16, false);
    for (std::uint64_t key : {0b0101u, 0b1001u, 0b0011u, 0b1110u}) slots[key] = true;
    {
        SumTrie trie = reference_trie();
        std::ofstream out(tmp.sub("trie.smst"));
        trie.export_to(out);
    }
    std::ostringstream diag;
    for (int t = 0; t < 16; ++t) {
        ProveOptions prove;
        prove.trie_path = tmp.sub("trie.smst");
        char hex[3];
        std::snprintf(hex, sizeof(hex), "%x0", t);
        prove.target_hex = hex;
        prove.out_dir = tmp.sub("out" + std::to_string(t));
        REQUIRE(cmd_prove(prove, diag) == kExitOk);

        auto pj = nlohmann::json::parse(slurp(prove.out_dir + "/proof.json"));
        int oracle = closest_oracle16(slots, t);
        char want[3];
        std::snprintf(want, sizeof(want), "%x0", oracle);
        CHECK(pj["leaf_key"] == want);

        VerifyOptions verify;
        verify.trie_path = tmp.sub("trie.smst");
        verify.proof_path = prove.out_dir + "/proof.json";
        verify.target_hex = std::string(hex);
        CHECK(cmd_verify(verify, diag) == kExitOk);
    }
}

TEST_CASE("a corrupted proof byte fails verification with exit 1") {
    TempDir tmp("relay-cli-corrupt");
    {
        SumTrie trie = reference_trie();
        std::ofstream out(tmp.sub("trie.smst"));
        trie.export_to(out);
    }
    std::ostringstream diag;
    ProveOptions prove;
    prove.trie_path = tmp.sub("trie.smst");
    prove.target_hex = "10";
    prove.out_dir = tmp.sub("out");
    REQUIRE(cmd_prove(prove, diag) == kExitOk);

    auto pj = nlohmann::json::parse(slurp(tmp.sub("out") + "/proof.json"));
    std::string vh = pj["value_hash"];
    vh[0] = vh[0] == '0' ? '1' : '0';
    pj["value_hash"] = vh;
    write_file(tmp.sub("out") + "/proof.json", pj.dump());

    VerifyOptions verify;
    verify.trie_path = tmp.sub("trie.smst");
    verify.proof_path = tmp.sub("out") + "/proof.json";
    CHECK(cmd_verify(verify, diag) == kExitFailure);
}

TEST_CASE("unparseable trie exports exit 2") {
    TempDir tmp("relay-cli-badtrie");
    write_file(tmp.sub("trie.smst"), "not a trie\n");
    std::ostringstream diag;
    ProveOptions prove;
    prove.trie_path = tmp.sub("trie.smst");
    prove.target_hex = "10";
    prove.out_dir = tmp.sub("out");
    CHECK(cmd_prove(prove, diag) == kExitParse);

    VerifyOptions verify;
    verify.trie_path = tmp.sub("trie.smst");
    verify.proof_path = tmp.sub("missing.json");
    CHECK(cmd_verify(verify, diag) == kExitParse);
}
