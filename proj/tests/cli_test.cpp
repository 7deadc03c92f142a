// Drives the installed CLI binary end to end on a synthetic dataset.

#include <gtest/gtest.h>

#include <array>
#include <chrono>
#include <cstdio>
#include <string>

#include <json.hpp>

#include "chatea/config.hpp"
#include "chatea/results_io.hpp"
#include "chatea/rng.hpp"
#include "chatea/synthetic.hpp"
#include "test_support.hpp"

using namespace chatea;
using chatea::testing::TempDir;
using chatea::testing::read_file;
using chatea::testing::write_file;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string output;
};

CliResult run_cli(const std::string& args) {
    const std::string command = std::string(CHATEA_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(command.c_str(), "r");
    EXPECT_NE(pipe, nullptr);
    CliResult res;
    std::array<char, 4096> buf;
    while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe)) res.output.append(buf.data(), n);
    const int status = pclose(pipe);
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return res;
}

// One shared dataset + config for the whole binary walk-through.
class CliWorkflow : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        dir_ = new TempDir("cli");
        const auto pair = make_synthetic_pair({.entities = 40, .seed = 99});
        write_synthetic_dataset(pair, dir_->path());
        RunConfig cfg;
        cfg.dataset.dir = dir_->path();
        cfg.output_dir = dir_->file("out");
        config_path_ = dir_->file("config.json");
        write_file(config_path_, config_to_json(cfg).dump(2) + "\n");
    }
    static void TearDownTestSuite() {
        delete dir_;
        dir_ = nullptr;
    }

    static TempDir* dir_;
    static std::string config_path_;
};

TempDir* CliWorkflow::dir_ = nullptr;
std::string CliWorkflow::config_path_;

}  // namespace

TEST_F(CliWorkflow, Step1_PreprocessWritesCheckpoints) {
    const auto start = std::chrono::steady_clock::now();
    const auto res = run_cli("preprocess --config " + config_path_);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    ASSERT_EQ(res.exit_code, 0) << res.output;
    EXPECT_LT(secs, 60.0);
    EXPECT_TRUE(std::filesystem::exists(dir_->file("out/emb_1.bin")));
    EXPECT_TRUE(std::filesystem::exists(dir_->file("out/manifest.json")));

    // rerun with identical config and seeds: checkpoint hashes match
    const auto manifest_before = read_file(dir_->file("out/manifest.json"));
    const auto rerun = run_cli("preprocess --config " + config_path_);
    ASSERT_EQ(rerun.exit_code, 0) << rerun.output;
    EXPECT_EQ(manifest_before, read_file(dir_->file("out/manifest.json")));
}

TEST_F(CliWorkflow, Step2_AlignWritesResultsAndTranscript) {
    const auto res = run_cli("align --config " + config_path_);
    ASSERT_EQ(res.exit_code, 0) << res.output;
    EXPECT_TRUE(std::filesystem::exists(dir_->file("out/results.jsonl")));
    EXPECT_TRUE(std::filesystem::exists(dir_->file("out/transcript.jsonl")));
    EXPECT_NE(res.output.find("aligned 28 targets (0 failed)"), std::string::npos) << res.output;
}

TEST_F(CliWorkflow, Step3_ReplayIsByteIdentical) {
    // keep the recorded artifacts aside
    std::filesystem::copy_file(dir_->file("out/results.jsonl"), dir_->file("results_rec.jsonl"),
                               std::filesystem::copy_options::overwrite_existing);
    std::filesystem::copy_file(dir_->file("out/transcript.jsonl"), dir_->file("transcript_rec.jsonl"),
                               std::filesystem::copy_options::overwrite_existing);

    const auto first = run_cli("replay --config " + config_path_ + " --transcript " +
                               dir_->file("transcript_rec.jsonl"));
    ASSERT_EQ(first.exit_code, 0) << first.output;
    const auto once = read_file(dir_->file("out/results.jsonl"));
    EXPECT_EQ(once, read_file(dir_->file("results_rec.jsonl")));

    const auto second = run_cli("replay --config " + config_path_ + " --transcript " +
                                dir_->file("transcript_rec.jsonl"));
    ASSERT_EQ(second.exit_code, 0) << second.output;
    EXPECT_EQ(once, read_file(dir_->file("out/results.jsonl")));
}

TEST_F(CliWorkflow, Step4_EvalReportsPerfectRun) {
    const auto res = run_cli("eval --results " + dir_->file("out/results.jsonl") + " --gold " +
                             dir_->file("ref_ent_ids") + " --out " + dir_->file("eval"));
    ASSERT_EQ(res.exit_code, 0) << res.output;
    const auto report = nlohmann::json::parse(read_file(dir_->file("eval/report.json")));
    EXPECT_DOUBLE_EQ(report.at("hits1").get<double>(), 1.0);
    EXPECT_EQ(report.at("num_targets").get<int>(), 28);

    // order independence: a shuffled results file reports identically
    auto results = read_results(dir_->file("out/results.jsonl"));
    Rng rng(3);
    rng.shuffle(results);
    write_results(results, dir_->file("shuffled.jsonl"));
    const auto res2 = run_cli("eval --results " + dir_->file("shuffled.jsonl") + " --gold " +
                              dir_->file("ref_ent_ids") + " --out " + dir_->file("eval2"));
    ASSERT_EQ(res2.exit_code, 0) << res2.output;
    EXPECT_EQ(read_file(dir_->file("eval/report.csv")), read_file(dir_->file("eval2/report.csv")));
}

TEST_F(CliWorkflow, Step5_AblationsChangeBehaviour) {
    // no-two-stage: every target judged in a single round
    {
        const auto res = run_cli("align --config " + config_path_ + " --ablate no-two-stage");
        ASSERT_EQ(res.exit_code, 0) << res.output;
        for (const auto& r : read_results(dir_->file("out/results.jsonl"))) {
            EXPECT_EQ(r.rounds_used, 1u);
            EXPECT_EQ(r.judged.size(), 20u);
        }
    }
    // no-description: cards carry '' and no description prompts are issued
    {
        const auto res = run_cli("align --config " + config_path_ + " --ablate no-description");
        ASSERT_EQ(res.exit_code, 0) << res.output;
        const auto transcript = read_file(dir_->file("out/transcript.jsonl"));
        EXPECT_EQ(transcript.find("description of the knowledge graph entity"), std::string::npos);
    }
    // no-code: prompts carry plain cards instead of Entity(...) literals
    {
        const auto res = run_cli("align --config " + config_path_ + " --ablate no-code");
        ASSERT_EQ(res.exit_code, 0) << res.output;
        const auto transcript = read_file(dir_->file("out/transcript.jsonl"));
        EXPECT_NE(transcript.find("entity name '"), std::string::npos);
        EXPECT_EQ(transcript.find("[Main Entity] l_e = Entity("), std::string::npos);
    }
    // restore the canonical results for any later step
    const auto res = run_cli("align --config " + config_path_);
    ASSERT_EQ(res.exit_code, 0) << res.output;
}

TEST_F(CliWorkflow, Step6_InspectPrintsStatsAndCards) {
    const auto stats = run_cli("inspect --config " + config_path_);
    ASSERT_EQ(stats.exit_code, 0) << stats.output;
    EXPECT_NE(stats.output.find("40 entities"), std::string::npos) << stats.output;
    EXPECT_NE(stats.output.find("anchors: 40 total, 12 train, 28 test"), std::string::npos);

    const auto card = run_cli("inspect --config " + config_path_ + " --entity 3 --kg 2");
    ASSERT_EQ(card.exit_code, 0) << card.output;
    EXPECT_NE(card.output.find("Entity('"), std::string::npos);
    EXPECT_NE(card.output.find("degree:"), std::string::npos);
}

TEST(CliErrors, ExitCodesFollowContract) {
    TempDir dir("clierr");
    // unknown config key -> user error (1)
    write_file(dir.file("bad.json"), "{\"dataset\": {\"dir\": \"x\"}, \"bogus\": 1}\n");
    EXPECT_EQ(run_cli("preprocess --config " + dir.file("bad.json")).exit_code, 1);

    // missing dataset directory -> user error (1)
    write_file(dir.file("missing.json"), "{\"dataset\": {\"dir\": \"" + dir.file("nope") + "\"}}\n");
    EXPECT_EQ(run_cli("preprocess --config " + dir.file("missing.json")).exit_code, 1);

    // bad CLI usage -> 1
    EXPECT_EQ(run_cli("align").exit_code, 1);
    EXPECT_EQ(run_cli("frobnicate").exit_code, 1);

    // unreachable chat backend at startup -> runtime failure (2)
    const auto pair = make_synthetic_pair({.entities = 12, .seed = 5});
    write_synthetic_dataset(pair, dir.file("data"));
    RunConfig cfg;
    cfg.dataset.dir = dir.file("data");
    cfg.output_dir = dir.file("out");
    cfg.views.name_dim = 8;  // tiny rank-safe dims for 24 names
    cfg.views.time_dim = 8;
    cfg.views.structure_dim = 8;
    cfg.csls.neighborhood_k = 4;
    write_file(dir.file("ok.json"), config_to_json(cfg).dump(2) + "\n");
    ASSERT_EQ(run_cli("preprocess --config " + dir.file("ok.json")).exit_code, 0);

    cfg.backend.kind = BackendKind::Http;
    cfg.backend.base_url = "http://127.0.0.1:1/v1";
    write_file(dir.file("dead.json"), config_to_json(cfg).dump(2) + "\n");
    EXPECT_EQ(run_cli("align --config " + dir.file("dead.json")).exit_code, 2);
}

TEST(CliFallbacks, MissingNameVectorsUseHashingEncoder) {
    TempDir dir("clifallback");
    const auto pair = make_synthetic_pair({.entities = 30, .seed = 7});
    write_synthetic_dataset(pair, dir.file("data"));
    RunConfig cfg;
    cfg.dataset.dir = dir.file("data");
    cfg.dataset.name_vectors_1 = dir.file("data/does_not_exist_1.txt");
    cfg.dataset.name_vectors_2 = dir.file("data/does_not_exist_2.txt");
    cfg.output_dir = dir.file("out");
    cfg.views.name_dim = 16;
    cfg.views.time_dim = 8;
    cfg.views.structure_dim = 16;
    write_file(dir.file("cfg.json"), config_to_json(cfg).dump(2) + "\n");

    const auto res = run_cli("preprocess --config " + dir.file("cfg.json"));
    ASSERT_EQ(res.exit_code, 0) << res.output;
    EXPECT_NE(res.output.find("hashing name encoder"), std::string::npos) << res.output;
}
