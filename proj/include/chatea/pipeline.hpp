#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "chatea/config.hpp"
#include "chatea/eval.hpp"
#include "chatea/hash_encoder.hpp"
#include "chatea/http_backend.hpp"
#include "chatea/oracle.hpp"
#include "chatea/results_io.hpp"
#include "chatea/skipgram.hpp"
#include "chatea/synthetic.hpp"
#include "chatea/transcript.hpp"
#include "chatea/whitening.hpp"

namespace chatea {

struct LoadedDataset {
    KnowledgeGraph kg1;
    KnowledgeGraph kg2;
    AnchorSet anchors;
};

inline LoadedDataset load_dataset(const DatasetConfig& cfg) {
    LoadedDataset d;
    d.kg1 = load_kg(cfg.dir + "/triples_1", cfg.dir + "/ent_ids_1", cfg.temporal,
                    cfg.dir + "/rel_ids_1", "kg1");
    d.kg2 = load_kg(cfg.dir + "/triples_2", cfg.dir + "/ent_ids_2", cfg.temporal,
                    cfg.dir + "/rel_ids_2", "kg2");
    d.anchors = load_anchors(cfg.dir + "/ref_ent_ids", cfg.split_seed, cfg.train_ratio);
    return d;
}

namespace detail {

// Name views: external vector files when configured, the bundled hashing
// encoder otherwise. Both KGs are whitened jointly so the views stay
// comparable across graphs.
inline std::pair<EmbeddingMatrix, EmbeddingMatrix> name_views(const RunConfig& cfg,
                                                              const LoadedDataset& data) {
    EmbeddingMatrix raw1, raw2;
    if (!cfg.dataset.name_vectors_1.empty() && std::filesystem::exists(cfg.dataset.name_vectors_1) &&
        !cfg.dataset.name_vectors_2.empty() && std::filesystem::exists(cfg.dataset.name_vectors_2)) {
        raw1 = load_name_vectors(cfg.dataset.name_vectors_1, data.kg1.sorted_ids());
        raw2 = load_name_vectors(cfg.dataset.name_vectors_2, data.kg2.sorted_ids());
        if (raw1.dim() != raw2.dim())
            throw ConfigError("name vector files disagree on dimension");
    } else {
        if (!cfg.dataset.name_vectors_1.empty() || !cfg.dataset.name_vectors_2.empty())
            log_info("name-vector files not found, falling back to the hashing name encoder");
        const HashNameEncoder encoder(std::max<std::size_t>(cfg.views.name_dim, 16));
        raw1 = encoder.encode_all(data.kg1);
        raw2 = encoder.encode_all(data.kg2);
    }

    if (cfg.views.name_dim == 0)
        return {EmbeddingMatrix(raw1.rows(), 0), EmbeddingMatrix(raw2.rows(), 0)};

    EmbeddingMatrix stacked(raw1.rows() + raw2.rows(), raw1.dim());
    for (std::size_t i = 0; i < raw1.rows(); ++i)
        std::copy(raw1.row(i).begin(), raw1.row(i).end(), stacked.row(i).begin());
    for (std::size_t i = 0; i < raw2.rows(); ++i)
        std::copy(raw2.row(i).begin(), raw2.row(i).end(), stacked.row(raw1.rows() + i).begin());

    const EmbeddingMatrix white = whiten(stacked, cfg.views.name_dim);
    EmbeddingMatrix out1(raw1.rows(), white.dim()), out2(raw2.rows(), white.dim());
    for (std::size_t i = 0; i < out1.rows(); ++i)
        std::copy(white.row(i).begin(), white.row(i).end(), out1.row(i).begin());
    for (std::size_t i = 0; i < out2.rows(); ++i)
        std::copy(white.row(out1.rows() + i).begin(), white.row(out1.rows() + i).end(),
                  out2.row(i).begin());
    return {std::move(out1), std::move(out2)};
}

inline EmbeddingMatrix structure_view(const KnowledgeGraph& kg, const RunConfig& cfg,
                                      std::uint64_t seed_salt) {
    if (cfg.views.structure_dim == 0) return EmbeddingMatrix(kg.sorted_ids().size(), 0);
    WalkConfig wcfg = cfg.walks;
    wcfg.seed = mix_seeds(cfg.walks.seed, seed_salt);
    const auto corpus = biased_walks(kg, wcfg);
    return train_skipgram(corpus, kg.sorted_ids().size(), cfg.views.structure_dim, wcfg);
}

inline EmbeddingMatrix time_view(const KnowledgeGraph& kg, const RunConfig& cfg) {
    if (cfg.views.time_dim == 0) return EmbeddingMatrix(kg.sorted_ids().size(), 0);
    return entity_time_views(kg, Time2VecParams::defaults(cfg.views.time_dim));
}

}  // namespace detail

struct PreprocessOutput {
    std::string emb1_path;
    std::string emb2_path;
    std::string manifest_path;
    FusionResult fusion;
};

// The feature pre-processing stage: name whitening, time encoding, biased
// walks + skip-gram, fusion training. Writes both embedding checkpoints plus
// a manifest with content hashes; partial outputs are removed on failure.
inline PreprocessOutput run_preprocess(const RunConfig& cfg) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.output_dir);
    PreprocessOutput out;
    out.emb1_path = cfg.output_dir + "/emb_1.bin";
    out.emb2_path = cfg.output_dir + "/emb_2.bin";
    out.manifest_path = cfg.output_dir + "/manifest.json";
    try {
        const LoadedDataset data = load_dataset(cfg.dataset);
        if (data.anchors.train.empty())
            throw ConfigError("no training anchors after the split; lower train_ratio?");

        auto [name1, name2] = detail::name_views(cfg, data);
        ViewSet views1{std::move(name1), detail::time_view(data.kg1, cfg),
                       detail::structure_view(data.kg1, cfg, 1)};
        ViewSet views2{std::move(name2), detail::time_view(data.kg2, cfg),
                       detail::structure_view(data.kg2, cfg, 2)};
        // name views come back centered from the whitening; time views share
        // a scale across KGs and are centered jointly, walk embeddings live
        // in per-KG spaces and are centered per KG
        center_columns(views1.time, views2.time);
        center_columns(views1.structure);
        center_columns(views2.structure);
        for (auto* v : {&views1, &views2}) {
            normalize_rows(v->name);
            normalize_rows(v->time);
            normalize_rows(v->structure);
        }

        std::vector<std::pair<std::size_t, std::size_t>> anchor_rows;
        anchor_rows.reserve(data.anchors.train.size());
        for (const auto& p : data.anchors.train)
            anchor_rows.emplace_back(data.kg1.row_of(p.left), data.kg2.row_of(p.right));

        ViewDims dims{views1.name.dim(), views1.time.dim(), views1.structure.dim()};
        out.fusion = fuse_and_train(views1, views2, anchor_rows, dims, cfg.train);

        save_embedding(out.fusion.h1, out.emb1_path);
        save_embedding(out.fusion.h2, out.emb2_path);

        nlohmann::ordered_json manifest{
            {"entities_1", data.kg1.sorted_ids().size()},
            {"entities_2", data.kg2.sorted_ids().size()},
            {"facts_1", data.kg1.facts.size()},
            {"facts_2", data.kg2.facts.size()},
            {"anchors", data.anchors.pairs.size()},
            {"train_anchors", data.anchors.train.size()},
            {"dim", out.fusion.h1.dim()},
            {"emb_1", {{"path", out.emb1_path}, {"fnv1a", file_fnv1a(out.emb1_path)}}},
            {"emb_2", {{"path", out.emb2_path}, {"fnv1a", file_fnv1a(out.emb2_path)}}},
            {"final_loss", out.fusion.loss_history.empty() ? 0.0 : out.fusion.loss_history.back()},
            {"config_fingerprint", config_fingerprint(cfg)},
            {"template_hash", template_hash()}};
        std::ofstream mf(out.manifest_path, std::ios::trunc);
        if (!mf) throw std::runtime_error("cannot write " + out.manifest_path);
        mf << manifest.dump(2) << '\n';
    } catch (...) {
        for (const auto& p : {out.emb1_path, out.emb2_path, out.manifest_path})
            if (fs::exists(p)) fs::remove(p);
        throw;
    }
    return out;
}

class StartupError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline std::shared_ptr<ChatBackend> make_backend(const RunConfig& cfg, const LoadedDataset& data) {
    switch (cfg.backend.kind) {
        case BackendKind::Http: {
            HttpBackendConfig hc;
            hc.base_url = cfg.backend.base_url;
            hc.model = cfg.backend.model;
            hc.api_key_env = cfg.backend.api_key_env;
            auto backend = std::make_shared<HttpChatBackend>(hc);
            if (!backend->reachable())
                throw StartupError("chat backend unreachable at " + cfg.backend.base_url);
            return backend;
        }
        case BackendKind::Scripted:
            return ScriptedBackend::from_file(cfg.backend.transcript);
        case BackendKind::Oracle:
        default:
            return std::make_shared<OracleBackend>(data.kg1, data.kg2, data.anchors);
    }
}

struct AlignOutput {
    std::string results_path;
    std::string transcript_path;
    std::string meta_path;
    AlignRun run;
};

// The two-stage alignment stage over all test anchors. Always records a
// transcript so any run can be replayed bit for bit.
inline AlignOutput run_align(const RunConfig& cfg) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.output_dir);
    const LoadedDataset data = load_dataset(cfg.dataset);

    const EmbeddingMatrix h1 = load_embedding(cfg.output_dir + "/emb_1.bin");
    const EmbeddingMatrix h2 = load_embedding(cfg.output_dir + "/emb_2.bin");
    const CslsIndex index(h1, h2, cfg.csls);

    AlignOutput out;
    out.results_path = cfg.output_dir + "/results.jsonl";
    out.transcript_path = cfg.output_dir + "/transcript.jsonl";
    out.meta_path = cfg.output_dir + "/align_meta.json";

    auto backend = make_backend(cfg, data);
    RetryPolicy retry;
    retry.max_attempts = cfg.backend.max_attempts;
    retry.initial_backoff = std::chrono::milliseconds(cfg.backend.backoff_ms);
    ChatClient client(std::move(backend), retry,
                      std::make_shared<RateLimiter>(cfg.backend.max_in_flight),
                      std::make_shared<UsageLedger>());
    TranscriptRecorder recorder(out.transcript_path);
    client.set_observer([&recorder](const ChatRequest& rq, const ChatReply& rp) {
        recorder.record(rq, rp);
    });

    // The cache is written as a run artifact; it is never preloaded, so
    // reruns with identical inputs stay byte-identical in their usage.
    DescriptionCache cache;
    const std::string cache_path = cfg.output_dir + "/descriptions.cache";

    AlignContext ctx(data.kg1, data.kg2, index, client, cache, cfg.align);
    out.run = align_all(data.anchors.test, ctx, cfg.workers);

    write_results(out.run.results, out.results_path);
    cache.save(cache_path);

    const auto global = client.ledger()->global();
    nlohmann::ordered_json meta{{"targets", out.run.results.size()},
                                {"round_counts", out.run.histogram.counts},
                                {"usage",
                                 {{"prompt_tokens", global.prompt_tokens},
                                  {"completion_tokens", global.completion_tokens},
                                  {"latency_us", global.latency_us},
                                  {"calls", global.calls},
                                  {"estimated", global.estimated}}},
                                {"config_fingerprint", config_fingerprint(cfg)}};
    std::ofstream mf(out.meta_path, std::ios::trunc);
    if (!mf) throw std::runtime_error("cannot write " + out.meta_path);
    mf << meta.dump(2) << '\n';
    return out;
}

struct EvalOutput {
    EvalReport report;
    std::string csv_path;
    std::string json_path;
    std::string text_path;
};

// Metrics over a results file against a gold pair file.
inline EvalOutput run_eval(const std::string& results_path, const std::string& gold_path,
                           const std::string& out_dir, std::size_t rounds = 3,
                           const std::string& fingerprint = "") {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const auto results = read_results(results_path);

    GoldMap gold;
    {
        std::ifstream in(gold_path);
        if (!in) throw DatasetError("cannot open gold file: " + gold_path);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            const auto tab = line.find('\t');
            if (tab == std::string::npos)
                throw DatasetError(gold_path + ":" + std::to_string(lineno) + ": expected id1<TAB>id2");
            gold[std::stoll(line.substr(0, tab))] = std::stoll(line.substr(tab + 1));
        }
    }

    EvalOutput out;
    const auto max_rounds = std::max(rounds, [&] {
        std::size_t m = 0;
        for (const auto& r : results) m = std::max(m, r.rounds_used);
        return m;
    }());
    out.report = make_report(results, gold, histogram_from_results(results, max_rounds), fingerprint);
    out.csv_path = out_dir + "/report.csv";
    out.json_path = out_dir + "/report.json";
    out.text_path = out_dir + "/report.txt";
    std::ofstream(out.csv_path, std::ios::trunc) << report_csv(out.report);
    std::ofstream(out.json_path, std::ios::trunc) << report_json(out.report).dump(2) << '\n';
    std::ofstream(out.text_path, std::ios::trunc) << report_text(out.report);
    return out;
}

}  // namespace chatea
