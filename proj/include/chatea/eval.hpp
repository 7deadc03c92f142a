#pragma once

#include <cstdio>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "chatea/aligner.hpp"
#include "chatea/noise.hpp"
#include "chatea/oracle.hpp"

namespace chatea {

using GoldMap = std::unordered_map<EntityId, EntityId>;

inline GoldMap gold_map(const std::vector<AnchorPair>& pairs) {
    GoldMap m;
    for (const auto& p : pairs) m[p.left] = p.right;
    return m;
}

// 1-based rank of the gold match inside the stored ranking; nullopt when the
// target failed or the gold fell outside the stored prefix (rank infinity).
inline std::optional<std::size_t> gold_rank(const AlignmentResult& r, const GoldMap& gold) {
    auto it = gold.find(r.target);
    if (it == gold.end())
        throw std::invalid_argument("no gold match for target " + std::to_string(r.target));
    if (r.failed) return std::nullopt;
    for (std::size_t i = 0; i < r.final_ranking.size(); ++i)
        if (r.final_ranking[i] == it->second) return i + 1;
    return std::nullopt;
}

inline double hits_at_k(const std::vector<AlignmentResult>& results, const GoldMap& gold,
                        std::size_t k) {
    if (results.empty()) return 0.0;
    std::size_t hits = 0;
    for (const auto& r : results) {
        const auto rank = gold_rank(r, gold);
        if (rank && *rank <= k) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(results.size());
}

// Mean reciprocal rank; unfindable golds contribute 0.
inline double mrr(const std::vector<AlignmentResult>& results, const GoldMap& gold) {
    if (results.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& r : results) {
        const auto rank = gold_rank(r, gold);
        if (rank) sum += 1.0 / static_cast<double>(*rank);
    }
    return sum / static_cast<double>(results.size());
}

struct EvalReport {
    std::size_t num_targets = 0;
    double hits1 = 0.0;
    double hits10 = 0.0;
    double mrr = 0.0;
    std::vector<double> round_proportions;
    double avg_tokens = 0.0;
    double avg_time_s = 0.0;
    bool tokens_estimated = false;
    std::string config_fingerprint;

    bool no_data() const { return num_targets == 0; }
};

inline EvalReport make_report(const std::vector<AlignmentResult>& results, const GoldMap& gold,
                              const RoundHistogram& histogram,
                              const std::string& config_fingerprint) {
    EvalReport rep;
    rep.config_fingerprint = config_fingerprint;
    rep.num_targets = results.size();
    rep.round_proportions = histogram.proportions();
    if (results.empty()) return rep;
    rep.hits1 = hits_at_k(results, gold, 1);
    rep.hits10 = hits_at_k(results, gold, 10);
    rep.mrr = mrr(results, gold);
    std::int64_t tokens = 0, latency = 0;
    for (const auto& r : results) {
        tokens += r.usage.total_tokens();
        latency += r.usage.latency_us;
        rep.tokens_estimated = rep.tokens_estimated || r.usage.estimated;
    }
    rep.avg_tokens = static_cast<double>(tokens) / static_cast<double>(results.size());
    rep.avg_time_s = static_cast<double>(latency) / 1e6 / static_cast<double>(results.size());
    return rep;
}

inline RoundHistogram histogram_from_results(const std::vector<AlignmentResult>& results,
                                             std::size_t num_rounds) {
    RoundHistogram h;
    h.counts.assign(num_rounds, 0);
    for (const auto& r : results)
        if (r.rounds_used >= 1 && r.rounds_used <= num_rounds) ++h.counts[r.rounds_used - 1];
    return h;
}

// Fixed CSV schema: one header line, one data row. Round columns follow the
// schedule length.
inline std::string report_csv(const EvalReport& rep) {
    std::string header = "targets,hits1,hits10,mrr";
    for (std::size_t i = 0; i < rep.round_proportions.size(); ++i)
        header += ",round_" + std::to_string(i + 1);
    header += ",avg_tokens,avg_time_s,tokens_estimated,config_fingerprint";
    char buf[64];
    std::string row = std::to_string(rep.num_targets);
    auto add = [&](double v) {
        std::snprintf(buf, sizeof buf, ",%.6f", v);
        row += buf;
    };
    add(rep.hits1);
    add(rep.hits10);
    add(rep.mrr);
    for (double p : rep.round_proportions) add(p);
    add(rep.avg_tokens);
    add(rep.avg_time_s);
    row += rep.tokens_estimated ? ",true" : ",false";
    row += "," + rep.config_fingerprint;
    return header + "\n" + row + "\n";
}

inline nlohmann::ordered_json report_json(const EvalReport& rep) {
    return nlohmann::ordered_json{{"num_targets", rep.num_targets},
                                  {"hits1", rep.hits1},
                                  {"hits10", rep.hits10},
                                  {"mrr", rep.mrr},
                                  {"round_proportions", rep.round_proportions},
                                  {"avg_tokens", rep.avg_tokens},
                                  {"avg_time_s", rep.avg_time_s},
                                  {"tokens_estimated", rep.tokens_estimated},
                                  {"config_fingerprint", rep.config_fingerprint}};
}

inline std::string report_text(const EvalReport& rep) {
    if (rep.no_data()) return "no data: empty result set\n";
    char buf[256];
    std::string out;
    std::snprintf(buf, sizeof buf, "targets:     %zu\n", rep.num_targets);
    out += buf;
    std::snprintf(buf, sizeof buf, "hits@1:      %.4f\nhits@10:     %.4f\nmrr:         %.4f\n",
                  rep.hits1, rep.hits10, rep.mrr);
    out += buf;
    for (std::size_t i = 0; i < rep.round_proportions.size(); ++i) {
        std::snprintf(buf, sizeof buf, "round %zu:     %.4f\n", i + 1, rep.round_proportions[i]);
        out += buf;
    }
    std::snprintf(buf, sizeof buf, "avg tokens:  %.1f%s\navg time:    %.3f s\n", rep.avg_tokens,
                  rep.tokens_estimated ? " (estimated)" : "", rep.avg_time_s);
    out += buf;
    out += "config:      " + rep.config_fingerprint + "\n";
    return out;
}

// --- noise-robustness sweep -------------------------------------------------

struct NoiseSweepRow {
    double ratio = 0.0;
    double embedding_hits1 = 0.0;   // CSLS rank-1 on noised embeddings
    double full_loop_hits1 = 0.0;   // two-stage loop with the oracle backend
    double gold_in_top_scope = 0.0; // fraction of targets with gold inside max scope
};

// Reruns candidate retrieval (and the full loop with an oracle backend) on
// noise-injected copies of the trained embeddings. The same seed noises the
// same dimensions in both matrices.
inline std::vector<NoiseSweepRow> noise_sweep(const KnowledgeGraph& kg1, const KnowledgeGraph& kg2,
                                              const EmbeddingMatrix& h1, const EmbeddingMatrix& h2,
                                              const AnchorSet& anchors,
                                              const std::vector<double>& ratios, std::uint64_t seed,
                                              const AlignConfig& align_cfg, CslsConfig csls_cfg = {}) {
    std::vector<NoiseSweepRow> rows;
    const auto gold = gold_map(anchors.pairs);
    for (double ratio : ratios) {
        NoiseSweepRow row;
        row.ratio = ratio;
        const EmbeddingMatrix n1 = inject_noise(h1, ratio, seed);
        const EmbeddingMatrix n2 = inject_noise(h2, ratio, seed);
        const CslsIndex index(n1, n2, csls_cfg);

        std::size_t rank1 = 0, in_scope = 0;
        for (const auto& p : anchors.test) {
            const std::size_t rank = index.rank_of(kg1.row_of(p.left), kg2.row_of(p.right));
            if (rank == 1) ++rank1;
            if (rank <= align_cfg.schedule.max_scope()) ++in_scope;
        }
        const auto n_test = static_cast<double>(anchors.test.size());
        row.embedding_hits1 = rank1 / n_test;
        row.gold_in_top_scope = in_scope / n_test;

        auto backend = std::make_shared<OracleBackend>(kg1, kg2, anchors);
        ChatClient client(backend, RetryPolicy{}, nullptr, std::make_shared<UsageLedger>());
        DescriptionCache cache;
        AlignContext ctx(kg1, kg2, index, client, cache, align_cfg);
        const AlignRun run = align_all(anchors.test, ctx);
        row.full_loop_hits1 = hits_at_k(run.results, gold, 1);
        rows.push_back(row);
    }
    return rows;
}

inline std::string noise_sweep_csv(const std::vector<NoiseSweepRow>& rows) {
    std::string out = "ratio,embedding_hits1,full_loop_hits1,gold_in_top_scope\n";
    char buf[128];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%.2f,%.6f,%.6f,%.6f\n", r.ratio, r.embedding_hits1,
                      r.full_loop_hits1, r.gold_in_top_scope);
        out += buf;
    }
    return out;
}

}  // namespace chatea
