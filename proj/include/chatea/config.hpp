#pragma once

#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "chatea/aligner.hpp"
#include "chatea/csls.hpp"
#include "chatea/fusion.hpp"
#include "chatea/prompts.hpp"
#include "chatea/time2vec.hpp"
#include "chatea/walks.hpp"

namespace chatea {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class BackendKind { Http, Scripted, Oracle };

struct BackendConfig {
    BackendKind kind = BackendKind::Oracle;
    std::string base_url;
    std::string model = "oracle";
    std::string api_key_env = "CHATEA_API_KEY";
    double temperature = 0.0;
    int max_tokens = 1024;
    std::size_t max_in_flight = 4;
    std::size_t max_attempts = 3;
    int backoff_ms = 200;
    std::string transcript;  // scripted replay source
};

struct DatasetConfig {
    std::string dir;
    bool temporal = true;
    std::string name_vectors_1;  // optional; hashing encoder otherwise
    std::string name_vectors_2;
    double train_ratio = 0.3;
    std::uint64_t split_seed = 17;
};

struct ViewConfig {
    std::size_t name_dim = 64;  // post-whitening width
    std::size_t time_dim = 32;
    std::size_t structure_dim = 64;
};

struct RunConfig {
    DatasetConfig dataset;
    ViewConfig views;
    WalkConfig walks;
    TrainConfig train;
    CslsConfig csls;
    AlignConfig align;
    std::size_t workers = 1;
    BackendConfig backend;
    std::string output_dir = "out";
    std::vector<std::string> ablations;
};

namespace detail {

inline void require_keys(const nlohmann::json& j, const std::set<std::string>& known,
                         const std::string& section) {
    if (!j.is_object()) throw ConfigError("config section '" + section + "' must be an object");
    for (const auto& [key, _] : j.items())
        if (!known.count(key))
            throw ConfigError("unknown config key '" + key + "' in section '" + section + "'");
}

template <typename T>
void read_into(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json& j) {
    detail::require_keys(j, {"dataset", "views", "walks", "train", "csls", "align", "workers",
                             "backend", "output_dir", "ablations"},
                         "<root>");
    RunConfig cfg;

    if (j.contains("dataset")) {
        const auto& d = j.at("dataset");
        detail::require_keys(d, {"dir", "temporal", "name_vectors_1", "name_vectors_2",
                                 "train_ratio", "split_seed"},
                             "dataset");
        detail::read_into(d, "dir", cfg.dataset.dir);
        detail::read_into(d, "temporal", cfg.dataset.temporal);
        detail::read_into(d, "name_vectors_1", cfg.dataset.name_vectors_1);
        detail::read_into(d, "name_vectors_2", cfg.dataset.name_vectors_2);
        detail::read_into(d, "train_ratio", cfg.dataset.train_ratio);
        detail::read_into(d, "split_seed", cfg.dataset.split_seed);
    }
    if (j.contains("views")) {
        const auto& v = j.at("views");
        detail::require_keys(v, {"name_dim", "time_dim", "structure_dim"}, "views");
        detail::read_into(v, "name_dim", cfg.views.name_dim);
        detail::read_into(v, "time_dim", cfg.views.time_dim);
        detail::read_into(v, "structure_dim", cfg.views.structure_dim);
    }
    if (j.contains("walks")) {
        const auto& w = j.at("walks");
        detail::require_keys(w, {"walks_per_node", "walk_length", "p", "q", "window", "negatives",
                                 "epochs", "seed"},
                             "walks");
        detail::read_into(w, "walks_per_node", cfg.walks.walks_per_node);
        detail::read_into(w, "walk_length", cfg.walks.walk_length);
        detail::read_into(w, "p", cfg.walks.return_bias_p);
        detail::read_into(w, "q", cfg.walks.inout_bias_q);
        detail::read_into(w, "window", cfg.walks.window);
        detail::read_into(w, "negatives", cfg.walks.negatives);
        detail::read_into(w, "epochs", cfg.walks.epochs);
        detail::read_into(w, "seed", cfg.walks.seed);
    }
    if (j.contains("train")) {
        const auto& t = j.at("train");
        detail::require_keys(t, {"margin", "learning_rate", "epochs", "negatives_per_positive",
                                 "seed", "distance", "csls_k"},
                             "train");
        detail::read_into(t, "margin", cfg.train.margin);
        detail::read_into(t, "learning_rate", cfg.train.learning_rate);
        detail::read_into(t, "epochs", cfg.train.epochs);
        detail::read_into(t, "negatives_per_positive", cfg.train.negatives_per_positive);
        detail::read_into(t, "seed", cfg.train.seed);
        detail::read_into(t, "csls_k", cfg.train.csls_k);
        if (t.contains("distance")) {
            const auto dist = t.at("distance").get<std::string>();
            if (dist == "csls")
                cfg.train.distance = FusionDistance::NegCsls;
            else if (dist == "euclidean")
                cfg.train.distance = FusionDistance::EuclideanSq;
            else
                throw ConfigError("train.distance must be 'csls' or 'euclidean', got '" + dist + "'");
        }
    }
    if (j.contains("csls")) {
        const auto& c = j.at("csls");
        detail::require_keys(c, {"k"}, "csls");
        detail::read_into(c, "k", cfg.csls.neighborhood_k);
    }
    if (j.contains("align")) {
        const auto& a = j.at("align");
        detail::require_keys(a, {"scope_schedule", "rethink_mode", "rethink_threshold",
                                 "rethink_min_gap", "tuple_cap", "ranking_cap", "score_weights"},
                             "align");
        detail::read_into(a, "scope_schedule", cfg.align.schedule.scopes);
        detail::read_into(a, "rethink_threshold", cfg.align.rethink_threshold);
        detail::read_into(a, "rethink_min_gap", cfg.align.rethink_min_gap);
        detail::read_into(a, "tuple_cap", cfg.align.card_options.tuple_cap);
        detail::read_into(a, "ranking_cap", cfg.align.ranking_cap);
        if (a.contains("rethink_mode")) {
            const auto mode = a.at("rethink_mode").get<std::string>();
            if (mode == "llm")
                cfg.align.rethink_mode = RethinkMode::Llm;
            else if (mode == "rule")
                cfg.align.rethink_mode = RethinkMode::Rule;
            else
                throw ConfigError("align.rethink_mode must be 'llm' or 'rule', got '" + mode + "'");
        }
        if (a.contains("score_weights")) {
            const auto w = a.at("score_weights").get<std::vector<double>>();
            if (w.size() != 4) throw ConfigError("align.score_weights must have 4 entries");
            cfg.align.weights = ScoreWeights{w[0], w[1], w[2], w[3]};
        }
        cfg.align.schedule.validate();
    }
    detail::read_into(j, "workers", cfg.workers);
    if (j.contains("backend")) {
        const auto& b = j.at("backend");
        detail::require_keys(b, {"kind", "base_url", "model", "api_key_env", "temperature",
                                 "max_tokens", "max_in_flight", "max_attempts", "backoff_ms",
                                 "transcript"},
                             "backend");
        if (b.contains("kind")) {
            const auto kind = b.at("kind").get<std::string>();
            if (kind == "http")
                cfg.backend.kind = BackendKind::Http;
            else if (kind == "scripted")
                cfg.backend.kind = BackendKind::Scripted;
            else if (kind == "oracle")
                cfg.backend.kind = BackendKind::Oracle;
            else
                throw ConfigError("backend.kind must be http|scripted|oracle, got '" + kind + "'");
        }
        detail::read_into(b, "base_url", cfg.backend.base_url);
        detail::read_into(b, "model", cfg.backend.model);
        detail::read_into(b, "api_key_env", cfg.backend.api_key_env);
        detail::read_into(b, "temperature", cfg.backend.temperature);
        detail::read_into(b, "max_tokens", cfg.backend.max_tokens);
        detail::read_into(b, "max_in_flight", cfg.backend.max_in_flight);
        detail::read_into(b, "max_attempts", cfg.backend.max_attempts);
        detail::read_into(b, "backoff_ms", cfg.backend.backoff_ms);
        detail::read_into(b, "transcript", cfg.backend.transcript);
        if (cfg.backend.kind == BackendKind::Http && cfg.backend.base_url.empty())
            throw ConfigError("backend.base_url required for the http backend");
        if (cfg.backend.kind == BackendKind::Scripted && cfg.backend.transcript.empty())
            throw ConfigError("backend.transcript required for the scripted backend");
    }
    detail::read_into(j, "output_dir", cfg.output_dir);
    detail::read_into(j, "ablations", cfg.ablations);
    if (cfg.dataset.dir.empty()) throw ConfigError("dataset.dir is required");

    cfg.align.model = cfg.backend.model;
    cfg.align.temperature = cfg.backend.temperature;
    cfg.align.max_tokens = cfg.backend.max_tokens;
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return parse_config(j);
}

inline const std::vector<std::string>& known_ablations() {
    static const std::vector<std::string> names{"no-name",        "no-structure", "no-temporal",
                                                "no-code",        "no-description",
                                                "no-two-stage"};
    return names;
}

// Ablation toggles mirror the paper-style feature knockouts: each one drops a
// view from fusion and/or flips the matching renderer option.
inline void apply_ablation(RunConfig& cfg, const std::string& name) {
    if (name == "no-name") {
        cfg.views.name_dim = 0;
        cfg.align.card_options.mask_names = true;
    } else if (name == "no-structure") {
        cfg.views.structure_dim = 0;
        cfg.align.card_options.mask_structure = true;
    } else if (name == "no-temporal") {
        cfg.views.time_dim = 0;
        cfg.align.card_options.mask_time = true;
    } else if (name == "no-code") {
        cfg.align.card_options.plain_text = true;
    } else if (name == "no-description") {
        cfg.align.card_options.include_description = false;
    } else if (name == "no-two-stage") {
        cfg.align.two_stage = false;
    } else {
        throw ConfigError("unknown ablation '" + name + "'");
    }
    cfg.ablations.push_back(name);
}

// Canonical serialization of everything that affects a run; hashed into the
// config fingerprint embedded in reports.
inline nlohmann::ordered_json config_to_json(const RunConfig& cfg) {
    nlohmann::ordered_json j;
    j["dataset"] = {{"dir", cfg.dataset.dir},
                    {"temporal", cfg.dataset.temporal},
                    {"name_vectors_1", cfg.dataset.name_vectors_1},
                    {"name_vectors_2", cfg.dataset.name_vectors_2},
                    {"train_ratio", cfg.dataset.train_ratio},
                    {"split_seed", cfg.dataset.split_seed}};
    j["views"] = {{"name_dim", cfg.views.name_dim},
                  {"time_dim", cfg.views.time_dim},
                  {"structure_dim", cfg.views.structure_dim}};
    j["walks"] = {{"walks_per_node", cfg.walks.walks_per_node},
                  {"walk_length", cfg.walks.walk_length},
                  {"p", cfg.walks.return_bias_p},
                  {"q", cfg.walks.inout_bias_q},
                  {"window", cfg.walks.window},
                  {"negatives", cfg.walks.negatives},
                  {"epochs", cfg.walks.epochs},
                  {"seed", cfg.walks.seed}};
    j["train"] = {{"margin", cfg.train.margin},
                  {"learning_rate", cfg.train.learning_rate},
                  {"epochs", cfg.train.epochs},
                  {"negatives_per_positive", cfg.train.negatives_per_positive},
                  {"seed", cfg.train.seed},
                  {"distance", cfg.train.distance == FusionDistance::NegCsls ? "csls" : "euclidean"},
                  {"csls_k", cfg.train.csls_k}};
    j["csls"] = {{"k", cfg.csls.neighborhood_k}};
    j["align"] = {{"scope_schedule", cfg.align.schedule.scopes},
                  {"rethink_mode", cfg.align.rethink_mode == RethinkMode::Llm ? "llm" : "rule"},
                  {"rethink_threshold", cfg.align.rethink_threshold},
                  {"rethink_min_gap", cfg.align.rethink_min_gap},
                  {"tuple_cap", cfg.align.card_options.tuple_cap},
                  {"ranking_cap", cfg.align.ranking_cap},
                  {"score_weights",
                   {cfg.align.weights.name, cfg.align.weights.description,
                    cfg.align.weights.structure, cfg.align.weights.time}}};
    j["workers"] = cfg.workers;
    j["backend"] = {{"kind", cfg.backend.kind == BackendKind::Http
                                 ? "http"
                                 : (cfg.backend.kind == BackendKind::Scripted ? "scripted"
                                                                              : "oracle")},
                    {"base_url", cfg.backend.base_url},
                    {"model", cfg.backend.model},
                    {"temperature", cfg.backend.temperature},
                    {"max_tokens", cfg.backend.max_tokens},
                    {"max_in_flight", cfg.backend.max_in_flight},
                    {"max_attempts", cfg.backend.max_attempts},
                    {"backoff_ms", cfg.backend.backoff_ms},
                    {"transcript", cfg.backend.transcript}};
    j["output_dir"] = cfg.output_dir;
    j["ablations"] = cfg.ablations;
    return j;
}

inline std::string config_fingerprint(const RunConfig& cfg) {
    std::uint64_t h = fnv1a(config_to_json(cfg).dump());
    h = mix_seeds(h, template_hash());
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace chatea
