#include "relay/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace relay {

const char* to_string(SimMode m) { return m == SimMode::fast ? "fast" : "full"; }

std::int64_t SimConfig::warmup_blocks() const {
    return static_cast<std::int64_t>(std::ceil(3.0 / controller.ema_alpha));
}

void SimConfig::validate() const {
    controller.validate();
    if (session.servicers_per_session == 0) {
        throw std::invalid_argument("config: session.servicers_per_session must be positive");
    }
    if (session.window_blocks < 1) {
        throw std::invalid_argument("config: session.window_blocks must be >= 1");
    }
    if (windows.claim_window < 1 || windows.proof_window < 1) {
        throw std::invalid_argument("config: claim and proof windows must be >= 1");
    }
    if (reward_rate < 0 || std::isnan(reward_rate)) {
        throw std::invalid_argument("config: reward_rate must be >= 0");
    }
    if (apps.empty()) throw std::invalid_argument("config: at least one app required");
    std::set<std::string> ids;
    for (const auto& a : apps) {
        if (a.id.empty()) throw std::invalid_argument("config: app id must not be empty");
        if (!ids.insert(a.id).second) {
            throw std::invalid_argument("config: duplicate app id " + a.id);
        }
        if (a.weight < 0 || std::isnan(a.weight)) {
            throw std::invalid_argument("config: app weight must be >= 0 for " + a.id);
        }
        try {
            compute_budget(a.stake, session.ttrm, session.servicers_per_session,
                           session.relay_accuracy);
        } catch (const std::exception& e) {
            throw std::invalid_argument("config: app " + a.id + ": " + e.what());
        }
    }
    if (servicer_pool != 0 && servicer_pool < session.servicers_per_session) {
        throw std::invalid_argument("config: servicer_pool smaller than servicers_per_session");
    }
    if (key_width < 4 || key_width > 256) {
        throw std::invalid_argument("config: key_width must be in [4, 256]");
    }
    if (dump_tries && dump_dir.empty()) {
        throw std::invalid_argument("config: dump_tries requires dump_dir");
    }
}

Digest chain_block_hash(std::uint64_t seed, std::int64_t height) {
    Bytes b;
    append_be64(b, seed);
    append_be64(b, static_cast<std::uint64_t>(height));
    return hash_parts("chain:block", {ByteView(b)});
}

namespace {

struct PendingClaim {
    Digest ref;
    std::size_t app_index = 0;
    std::size_t slot = 0;
};

/** Per-(app, session-window) mining state, shared between modes. */
struct AppSession {
    double session_probability = 1.0;
    std::uint64_t budget = 0;
    std::vector<std::uint64_t> tokens;      // per slot
    std::vector<std::uint64_t> claim_sums;  // per slot
    // full mode only:
    std::vector<ServicerSessionState> states;
    std::vector<std::uint64_t> nonces;
};

struct SessionRound {
    std::int64_t start = 0;
    std::int64_t end = 0;
    std::vector<AppSession> per_app;
    std::vector<PendingClaim> pending;  // full mode lifecycle
    bool lifecycle_done = false;
};

class ServiceSim {
public:
    ServiceSim(std::string service_id, const SimConfig& cfg, SimResult& out)
        : service_(std::move(service_id)),
          cfg_(cfg),
          out_(out),
          controller_(cfg.controller),
          scheme_(default_scheme()),
          pipeline_(cfg.windows, cfg.reward_rate, scheme_),
          base_rng_(Rng::from_seed(cfg.seed)) {
        app_weights_.reserve(cfg_.apps.size());
        for (const auto& a : cfg_.apps) app_weights_.push_back(a.weight);
        std::uint32_t pool = cfg_.servicer_pool ? cfg_.servicer_pool
                                                : cfg_.session.servicers_per_session;
        pool_.reserve(pool);
        for (std::uint32_t i = 0; i < pool; ++i) {
            pool_.push_back("servicer-" + std::to_string(i));
        }
    }

    void run(const std::vector<TraceBlock>& blocks) {
        first_height_ = blocks.front().height;
        for (const auto& b : blocks) {
            process_lifecycle(b.height);
            mine_block(b);
        }
        // Sessions ending at or after the trace edge still need their claim
        // round-trips; keep advancing empty heights until everything settled.
        std::int64_t h = blocks.back().height + 1;
        while (!rounds_.empty()) {
            process_lifecycle(h);
            ++h;
        }
        finish();
    }

private:
    void mine_block(const TraceBlock& block) {
        std::int64_t h = block.height;
        double p = controller_.begin_block();
        SessionRound& round = current_round(h, p);

        std::vector<std::int64_t> app_counts = split_apps(block);
        std::int64_t total_claims = 0;
        for (std::size_t ai = 0; ai < cfg_.apps.size(); ++ai) {
            if (app_counts[ai] == 0) continue;
            total_claims += mine_app(round, ai, app_counts[ai], h, p);
        }

        ControllerRecord rec = controller_.record_claims(total_claims);

        BlockMetrics m;
        m.height = h;
        m.service_id = service_;
        m.true_relays = block.relay_count;
        m.claims = rec.claims;
        m.estimated = rec.estimated;
        m.probability = rec.probability;
        m.ema = rec.ema;
        double target = cfg_.controller.target_claims;
        m.target_error_pct = 100.0 * (static_cast<double>(rec.claims) - target) / target;
        m.volume_error_pct =
            block.relay_count > 0
                ? 100.0 * (rec.estimated - static_cast<double>(block.relay_count)) /
                      static_cast<double>(block.relay_count)
                : 0.0;
        out_.blocks.push_back(std::move(m));
    }

    std::vector<std::int64_t> split_apps(const TraceBlock& block) {
        std::vector<std::int64_t> counts(cfg_.apps.size(), 0);
        if (!block.breakdown.empty()) {
            for (const auto& [app, count] : block.breakdown) {
                counts[app_index(app)] += count;
            }
            return counts;
        }
        if (cfg_.apps.size() == 1) {
            counts[0] = block.relay_count;
            return counts;
        }
        Rng rng = substream("split", block.height);
        return rng.multinomial(block.relay_count, app_weights_);
    }

    std::int64_t mine_app(SessionRound& round, std::size_t ai, std::int64_t n, std::int64_t h,
                          double p) {
        AppSession& as = round.per_app[ai];
        std::uint32_t sps = cfg_.session.servicers_per_session;
        std::vector<std::int64_t> alloc;
        if (sps == 1) {
            alloc = {n};
        } else {
            Rng rng = substream("alloc/" + cfg_.apps[ai].id, h);
            alloc = rng.multinomial(n, std::vector<double>(sps, 1.0));
        }

        std::int64_t claimed = 0;
        for (std::uint32_t s = 0; s < sps; ++s) {
            Rng rng = substream("mine/" + cfg_.apps[ai].id + "/" + std::to_string(s), h);
            std::int64_t c = rng.binomial(alloc[s], p);
            std::uint64_t inserted =
                std::min<std::uint64_t>(static_cast<std::uint64_t>(c), as.tokens[s]);
            if (cfg_.mode == SimMode::full && inserted > 0) {
                materialize(as, s, h, inserted);
            }
            as.tokens[s] -= inserted;
            as.claim_sums[s] += inserted;
            claimed += static_cast<std::int64_t>(inserted);
        }
        return claimed;
    }

    /** Insert `count` colliding relays through the real admission path. */
    void materialize(AppSession& as, std::uint32_t slot, std::int64_t h, std::uint64_t count) {
        ServicerSessionState& state = as.states[slot];
        Bytes req = to_bytes("req");
        Bytes resp = to_bytes("ok");
        Difficulty open = Difficulty::from_probability(1.0);
        for (std::uint64_t i = 0; i < count; ++i) {
            Relay r = make_relay(scheme_, state.session, state.servicer, h, as.nonces[slot]++,
                                 ByteView(req), ByteView(resp));
            Admission a = handle_relay(state, r, open, scheme_);
            if (a != Admission::served_and_inserted) {
                throw std::logic_error(std::string("sim: unexpected admission ") + to_string(a));
            }
        }
    }

    SessionRound& current_round(std::int64_t h, double p) {
        std::int64_t w = cfg_.session.window_blocks;
        std::int64_t start = first_height_ + ((h - first_height_) / w) * w;
        auto it = rounds_.find(start);
        if (it != rounds_.end()) return it->second;

        SessionRound round;
        round.start = start;
        round.end = start + w;
        round.per_app.resize(cfg_.apps.size());
        for (std::size_t ai = 0; ai < cfg_.apps.size(); ++ai) {
            const SimApp& app = cfg_.apps[ai];
            AppSession& as = round.per_app[ai];
            as.session_probability = p;
            TokenBudget budget =
                compute_budget(app.stake, cfg_.session.ttrm, cfg_.session.servicers_per_session,
                               cfg_.session.relay_accuracy);
            as.budget = budget.tokens_per_servicer;
            as.tokens.assign(cfg_.session.servicers_per_session, budget.tokens_per_servicer);
            as.claim_sums.assign(cfg_.session.servicers_per_session, 0);
            if (cfg_.mode == SimMode::full) {
                SessionHeader header = new_session(chain_block_hash(cfg_.seed, start), start,
                                                   app.id, service_, pool_, cfg_.session);
                as.nonces.assign(cfg_.session.servicers_per_session, 0);
                as.states.reserve(cfg_.session.servicers_per_session);
                for (std::uint32_t s = 0; s < cfg_.session.servicers_per_session; ++s) {
                    as.states.emplace_back(header.servicers[s], header,
                                           budget.tokens_per_servicer, cfg_.key_width);
                }
            }
        }
        return rounds_.emplace(start, std::move(round)).first->second;
    }

    void process_lifecycle(std::int64_t h) {
        for (auto it = rounds_.begin(); it != rounds_.end();) {
            SessionRound& round = it->second;
            if (round.end == h && !round.lifecycle_done) {
                close_round(round, h);
            }
            bool round_finished = round.lifecycle_done;
            if (cfg_.mode == SimMode::full && !round.pending.empty()) {
                // challenge at end+1, reveal + settlement at end+2
                if (h == round.end + 1) {
                    for (const auto& pc : round.pending) {
                        pipeline_.open_challenge(pc.ref, chain_block_hash(cfg_.seed, h), h);
                    }
                } else if (h == round.end + 2) {
                    for (const auto& pc : round.pending) reveal_and_settle(round, pc, h);
                    round.pending.clear();
                    report_margins(round, h);
                }
                round_finished = round.lifecycle_done && round.pending.empty();
            }
            if (round_finished && round.end + 2 < h) {
                it = rounds_.erase(it);
            } else {
                ++it;
            }
        }
    }

    void close_round(SessionRound& round, std::int64_t h) {
        round.lifecycle_done = true;
        if (cfg_.mode == SimMode::fast) {
            report_margins(round, h);
            return;
        }
        for (std::size_t ai = 0; ai < cfg_.apps.size(); ++ai) {
            AppSession& as = round.per_app[ai];
            for (std::uint32_t s = 0; s < cfg_.session.servicers_per_session; ++s) {
                const Claim& c = pipeline_.submit_claim(as.states[s], h, as.session_probability,
                                                        as.budget);
                out_.claims_submitted += 1;
                if (cfg_.dump_tries) dump_trie(as.states[s], round.start, ai, s);
                round.pending.push_back(PendingClaim{c.ref(), ai, s});
            }
        }
    }

    void reveal_and_settle(SessionRound& round, const PendingClaim& pc, std::int64_t h) {
        if (pipeline_.phase(pc.ref) == ClaimPhase::challenged) {
            const Claim& c = pipeline_.claim(pc.ref);
            AppSession& as = round.per_app[pc.app_index];
            const SumTrie& trie = as.states[pc.slot].trie;
            BitPath target = ClaimPipeline::derive_challenge(
                c, chain_block_hash(cfg_.seed, h - 1), h - 1);
            ProofReveal reveal;
            reveal.claim_ref = pc.ref;
            reveal.target = target;
            reveal.proof = trie.closest_proof(target);
            auto value = trie.value(reveal.proof.leaf_key);
            if (!value) throw std::logic_error("sim: leaf value missing");
            reveal.revealed_value = *value;
            reveal.reveal_height = h;
            ProofCheck check = pipeline_.submit_proof(pc.ref, reveal);
            if (check != ProofCheck::ok) {
                throw std::logic_error(std::string("sim: honest reveal rejected: ") +
                                       to_string(check));
            }
        }
        Settlement s = pipeline_.settle(pc.ref);
        switch (s.outcome) {
            case SettleOutcome::settled: out_.claims_settled += 1; break;
            case SettleOutcome::expired_unproven: out_.claims_expired += 1; break;
            case SettleOutcome::invalid_proof: out_.claims_invalid += 1; break;
        }
    }

    /**
     * The per-servicer buckets oversubscribe the stake by the accuracy margin,
     * so a fully spent session can burn past the stake; record it when it does.
     */
    void report_margins(SessionRound& round, std::int64_t h) {
        for (std::size_t ai = 0; ai < cfg_.apps.size(); ++ai) {
            const SimApp& app = cfg_.apps[ai];
            const AppSession& as = round.per_app[ai];
            double burn = 0;
            for (std::uint32_t s = 0; s < cfg_.session.servicers_per_session; ++s) {
                burn += std::llround(static_cast<double>(as.claim_sums[s]) * cfg_.reward_rate /
                                     as.session_probability);
            }
            double limit = static_cast<double>(app.stake) * static_cast<double>(cfg_.session.ttrm);
            if (burn > limit) {
                out_.margin_breaches += 1;
                pipeline_.events().append({{"event", "margin-breach"},
                                           {"service", service_},
                                           {"app", app.id},
                                           {"session_start", round.start},
                                           {"height", h},
                                           {"burned", burn},
                                           {"stake_limit", limit}});
            }
        }
    }

    void dump_trie(const ServicerSessionState& state, std::int64_t session_start, std::size_t ai,
                   std::uint32_t slot) {
        namespace fs = std::filesystem;
        fs::path dir = fs::path(cfg_.dump_dir) / "tries";
        fs::create_directories(dir);
        std::ostringstream name;
        name << service_ << "-s" << session_start << "-" << cfg_.apps[ai].id << "-slot" << slot
             << ".smst";
        std::ofstream out(dir / name.str());
        state.trie.export_to(out);
    }

    void finish() {
        // Fold this service's pipeline events and ledger into the shared result.
        for (const auto& e : pipeline_.events().events()) out_.events.append(e);
        for (const auto& app : cfg_.apps) {
            std::int64_t bal = pipeline_.ledger().balance(app.id);
            if (bal != 0) out_.ledger.debit(app.id, -bal);
        }
        for (const auto& sv : pool_) {
            std::int64_t bal = pipeline_.ledger().balance(sv);
            if (bal != 0) out_.ledger.credit(sv, bal);
        }
        out_.ledger.record_mint_burn(pipeline_.ledger().total_minted(),
                                     pipeline_.ledger().total_burned());
    }

    std::size_t app_index(const std::string& id) const {
        for (std::size_t i = 0; i < cfg_.apps.size(); ++i) {
            if (cfg_.apps[i].id == id) return i;
        }
        throw std::invalid_argument("sim: trace app not in config: " + id);
    }

    Rng substream(const std::string& kind, std::int64_t height) const {
        return base_rng_.substream(kind + "/" + service_ + "/" + std::to_string(height));
    }

    std::string service_;
    const SimConfig& cfg_;
    SimResult& out_;
    DifficultyController controller_;
    const SignatureScheme& scheme_;
    ClaimPipeline pipeline_;
    Rng base_rng_;
    std::vector<double> app_weights_;
    std::vector<SignerId> pool_;
    std::int64_t first_height_ = 0;
    std::map<std::int64_t, SessionRound> rounds_;
};

}  // namespace

SimResult run_simulation(const std::vector<TraceBlock>& trace, const SimConfig& config) {
    config.validate();
    if (trace.empty()) throw std::invalid_argument("sim: empty trace");

    // Keep each service's blocks in trace order; validate breakdown ids up front.
    std::vector<std::string> service_order;
    std::map<std::string, std::vector<TraceBlock>> by_service;
    for (const auto& b : trace) {
        if (!by_service.contains(b.service_id)) service_order.push_back(b.service_id);
        by_service[b.service_id].push_back(b);
        for (const auto& [app, count] : b.breakdown) {
            (void)count;
            bool known = false;
            for (const auto& a : config.apps) known = known || a.id == app;
            if (!known) throw std::invalid_argument("sim: trace app not in config: " + app);
        }
    }

    // Real tries and proofs are for short end-to-end runs; long traces belong
    // in fast mode.
    if (config.mode == SimMode::full) {
        for (const auto& [svc, blocks] : by_service) {
            if (blocks.size() > kMaxFullFidelityBlocks) {
                throw std::invalid_argument(
                    "sim: full-fidelity mode is bounded to " +
                    std::to_string(kMaxFullFidelityBlocks) + " blocks per service (" + svc +
                    " has " + std::to_string(blocks.size()) + "); use fast mode");
            }
        }
    }

    SimResult result;
    for (const auto& svc : service_order) {
        ServiceSim sim(svc, config, result);
        sim.run(by_service[svc]);
    }

    for (const auto& svc : service_order) {
        std::vector<BlockMetrics> rows;
        for (const auto& m : result.blocks) {
            if (m.service_id == svc) rows.push_back(m);
        }
        result.aggregates[svc] =
            compute_metrics(rows, config.controller.target_claims, config.warmup_blocks());
    }
    return result;
}

SimAggregates compute_metrics(const std::vector<BlockMetrics>& rows, double target_claims,
                              std::int64_t warmup_blocks) {
    if (rows.empty()) throw std::invalid_argument("metrics: no rows");
    SimAggregates agg;
    // Runs shorter than the warm-up have no steady state; aggregate everything.
    agg.warmup_blocks =
        static_cast<std::int64_t>(rows.size()) > warmup_blocks ? warmup_blocks : 0;
    agg.min_target_error_pct = std::numeric_limits<double>::infinity();
    agg.max_target_error_pct = -std::numeric_limits<double>::infinity();
    agg.min_volume_error_pct = std::numeric_limits<double>::infinity();
    agg.max_volume_error_pct = -std::numeric_limits<double>::infinity();
    double sum_target = 0.0;
    double sum_volume = 0.0;
    double accumulated = 0.0;
    for (std::size_t i = static_cast<std::size_t>(agg.warmup_blocks); i < rows.size(); ++i) {
        const BlockMetrics& m = rows[i];
        agg.blocks += 1;
        agg.min_target_error_pct = std::min(agg.min_target_error_pct, m.target_error_pct);
        agg.max_target_error_pct = std::max(agg.max_target_error_pct, m.target_error_pct);
        agg.min_volume_error_pct = std::min(agg.min_volume_error_pct, m.volume_error_pct);
        agg.max_volume_error_pct = std::max(agg.max_volume_error_pct, m.volume_error_pct);
        sum_target += m.target_error_pct;
        sum_volume += m.volume_error_pct;
        accumulated += static_cast<double>(m.claims) - target_claims;
    }
    if (agg.blocks == 0) throw std::invalid_argument("metrics: warmup swallowed every row");
    agg.mean_target_error_pct = sum_target / static_cast<double>(agg.blocks);
    agg.mean_volume_error_pct = sum_volume / static_cast<double>(agg.blocks);
    agg.accumulated_target_error_claims = accumulated;
    agg.accumulated_target_error_per_block = accumulated / static_cast<double>(agg.blocks);
    return agg;
}

}  // namespace relay
