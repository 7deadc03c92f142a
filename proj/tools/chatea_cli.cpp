// Command-line front end: preprocess | align | eval | replay | inspect.
// Exit codes: 0 ok, 1 user error, 2 runtime failure.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "chatea/chatea.hpp"

namespace {

int run_preprocess_cmd(const std::string& config_path, const std::vector<std::string>& ablations) {
    chatea::RunConfig cfg = chatea::load_config(config_path);
    for (const auto& a : ablations) chatea::apply_ablation(cfg, a);
    const auto out = chatea::run_preprocess(cfg);
    std::printf("wrote %s\nwrote %s\nwrote %s\n", out.emb1_path.c_str(), out.emb2_path.c_str(),
                out.manifest_path.c_str());
    if (!out.fusion.loss_history.empty())
        std::printf("training loss %.4f -> %.4f over %zu epochs\n", out.fusion.loss_history.front(),
                    out.fusion.loss_history.back(), out.fusion.loss_history.size());
    return 0;
}

int run_align_cmd(const std::string& config_path, const std::vector<std::string>& ablations,
                  const std::string& transcript_override) {
    chatea::RunConfig cfg = chatea::load_config(config_path);
    for (const auto& a : ablations) chatea::apply_ablation(cfg, a);
    if (!transcript_override.empty()) {
        cfg.backend.kind = chatea::BackendKind::Scripted;
        cfg.backend.transcript = transcript_override;
    }
    const auto out = chatea::run_align(cfg);
    std::size_t failed = 0;
    for (const auto& r : out.run.results) failed += r.failed ? 1 : 0;
    std::printf("aligned %zu targets (%zu failed)\nwrote %s\nwrote %s\n", out.run.results.size(),
                failed, out.results_path.c_str(), out.transcript_path.c_str());
    return 0;
}

int run_eval_cmd(const std::string& results_path, const std::string& gold_path,
                 const std::string& out_dir, std::size_t rounds) {
    const auto out = chatea::run_eval(results_path, gold_path, out_dir, rounds);
    std::fputs(chatea::report_text(out.report).c_str(), stdout);
    std::printf("wrote %s\nwrote %s\n", out.csv_path.c_str(), out.json_path.c_str());
    return 0;
}

int run_inspect_cmd(const std::string& config_path, long long entity, int which_kg) {
    chatea::RunConfig cfg = chatea::load_config(config_path);
    const auto data = chatea::load_dataset(cfg.dataset);
    const auto& kg = which_kg == 2 ? data.kg2 : data.kg1;
    if (entity < 0) {
        std::printf("%s: %zu entities, %zu relations, %zu facts, temporal=%s\n", kg.name.c_str(),
                    kg.sorted_ids().size(), kg.relations.size(), kg.facts.size(),
                    kg.temporal ? "yes" : "no");
        std::printf("anchors: %zu total, %zu train, %zu test\n", data.anchors.pairs.size(),
                    data.anchors.train.size(), data.anchors.test.size());
        return 0;
    }
    const auto card = chatea::make_card(kg, entity, "", cfg.align.card_options);
    std::printf("%s\n", chatea::render_card(card).c_str());
    std::printf("degree: %zu\n", kg.degree(entity));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ChatEA-style entity alignment pipeline"};
    app.require_subcommand(1);

    std::string config_path, results_path, gold_path, out_dir = ".", transcript_path;
    std::vector<std::string> ablations;
    long long entity = -1;
    int which_kg = 1;
    std::size_t rounds = 3;

    auto add_ablate = [&](CLI::App* cmd) {
        cmd->add_option("--ablate", ablations, "feature knockouts")
            ->check(CLI::IsMember(chatea::known_ablations()));
    };

    auto* pre = app.add_subcommand("preprocess", "build and train embedding checkpoints");
    pre->add_option("--config", config_path, "run config JSON")->required();
    add_ablate(pre);

    auto* align = app.add_subcommand("align", "run the two-stage alignment loop");
    align->add_option("--config", config_path, "run config JSON")->required();
    add_ablate(align);

    auto* eval = app.add_subcommand("eval", "score a results file against gold pairs");
    eval->add_option("--results", results_path, "results JSONL")->required();
    eval->add_option("--gold", gold_path, "gold pair file (id1<TAB>id2)")->required();
    eval->add_option("--out", out_dir, "report output directory");
    eval->add_option("--rounds", rounds, "round-histogram width");

    auto* replay = app.add_subcommand("replay", "re-run alignment from a recorded transcript");
    replay->add_option("--config", config_path, "run config JSON")->required();
    replay->add_option("--transcript", transcript_path, "transcript JSONL")->required();
    add_ablate(replay);

    auto* inspect = app.add_subcommand("inspect", "print dataset stats or one entity card");
    inspect->add_option("--config", config_path, "run config JSON")->required();
    inspect->add_option("--entity", entity, "entity id (omit for stats)");
    inspect->add_option("--kg", which_kg, "1 or 2")->check(CLI::Range(1, 2));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (pre->parsed()) return run_preprocess_cmd(config_path, ablations);
        if (align->parsed()) return run_align_cmd(config_path, ablations, "");
        if (eval->parsed()) return run_eval_cmd(results_path, gold_path, out_dir, rounds);
        if (replay->parsed()) return run_align_cmd(config_path, ablations, transcript_path);
        if (inspect->parsed()) return run_inspect_cmd(config_path, entity, which_kg);
    } catch (const chatea::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const chatea::DatasetError& e) {
        std::fprintf(stderr, "dataset error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 1;
}
