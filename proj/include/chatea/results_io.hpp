#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "chatea/aligner.hpp"

namespace chatea {

// Results JSONL: one object per target, key order fixed so identical runs
// serialize to identical bytes.

inline nlohmann::ordered_json result_to_json(const AlignmentResult& r) {
    nlohmann::ordered_json judged = nlohmann::ordered_json::array();
    for (const auto& j : r.judged)
        judged.push_back({{"id", j.id},
                          {"scores", {j.scores.name_sim, j.scores.desc_sim, j.scores.struct_sim,
                                      j.scores.time_sim}},
                          {"aggregate", j.aggregate},
                          {"csls_pos", j.csls_pos}});
    return nlohmann::ordered_json{
        {"target", r.target},
        {"failed", r.failed},
        {"rounds", r.rounds_used},
        {"chosen", r.chosen},
        {"judged", judged},
        {"ranking", r.final_ranking},
        {"usage",
         {{"prompt_tokens", r.usage.prompt_tokens},
          {"completion_tokens", r.usage.completion_tokens},
          {"latency_us", r.usage.latency_us},
          {"calls", r.usage.calls},
          {"estimated", r.usage.estimated}}}};
}

inline AlignmentResult result_from_json(const nlohmann::json& j) {
    AlignmentResult r;
    r.target = j.at("target").get<EntityId>();
    r.failed = j.at("failed").get<bool>();
    r.rounds_used = j.at("rounds").get<std::size_t>();
    r.chosen = j.at("chosen").get<EntityId>();
    for (const auto& jj : j.at("judged")) {
        JudgedCandidate c;
        c.id = jj.at("id").get<EntityId>();
        const auto& s = jj.at("scores");
        c.scores = SimilarityScores{s.at(0).get<int>(), s.at(1).get<int>(), s.at(2).get<int>(),
                                    s.at(3).get<int>()};
        c.aggregate = jj.at("aggregate").get<double>();
        c.csls_pos = jj.at("csls_pos").get<std::size_t>();
        r.judged.push_back(c);
    }
    r.final_ranking = j.at("ranking").get<std::vector<EntityId>>();
    const auto& u = j.at("usage");
    r.usage.prompt_tokens = u.at("prompt_tokens").get<std::int64_t>();
    r.usage.completion_tokens = u.at("completion_tokens").get<std::int64_t>();
    r.usage.latency_us = u.at("latency_us").get<std::int64_t>();
    r.usage.calls = u.at("calls").get<std::int64_t>();
    r.usage.estimated = u.at("estimated").get<bool>();
    return r;
}

inline void write_results(const std::vector<AlignmentResult>& results, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    for (const auto& r : results) out << result_to_json(r).dump() << '\n';
}

inline std::vector<AlignmentResult> read_results(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::vector<AlignmentResult> results;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            results.push_back(result_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": bad result record: " + e.what());
        }
    }
    return results;
}

}  // namespace chatea
