#pragma once

#include <algorithm>
#include <atomic>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "chatea/backend.hpp"
#include "chatea/cards.hpp"
#include "chatea/csls.hpp"
#include "chatea/descriptions.hpp"
#include "chatea/kg.hpp"
#include "chatea/log.hpp"
#include "chatea/parse.hpp"
#include "chatea/prompts.hpp"

namespace chatea {

// Candidate-list sizes per round, default {1, 10, 20}.
struct ScopeSchedule {
    std::vector<std::size_t> scopes{1, 10, 20};

    void validate() const {
        if (scopes.empty()) throw std::invalid_argument("scope schedule must be non-empty");
        std::size_t prev = 0;
        for (std::size_t s : scopes) {
            if (s < 1 || s <= prev)
                throw std::invalid_argument("scope schedule must be strictly increasing and >= 1");
            prev = s;
        }
    }

    std::size_t max_scope() const { return scopes.back(); }
};

enum class RethinkMode { Llm, Rule };

struct AlignConfig {
    ScopeSchedule schedule;
    RethinkMode rethink_mode = RethinkMode::Llm;
    double rethink_threshold = 4.0;
    double rethink_min_gap = 1.0;
    ScoreWeights weights;
    CardOptions card_options;
    std::string model = "oracle";
    std::string reasoning_case;  // empty: built-in default for the prompt mode
    std::string rethink_examples = kDefaultRethinkExamples;
    double temperature = 0.0;
    int max_tokens = 1024;
    bool two_stage = true;        // false: judge max(schedule) candidates in one round
    std::size_t ranking_cap = 50; // stored length of the final ranking
};

struct JudgedCandidate {
    EntityId id = -1;
    SimilarityScores scores;
    double aggregate = 0.0;
    std::size_t csls_pos = 0;  // position in the full CSLS ordering
};

struct AlignmentResult {
    EntityId target = -1;
    bool failed = false;
    std::vector<JudgedCandidate> judged;    // in judging order
    std::vector<EntityId> final_ranking;    // truncated to ranking_cap
    EntityId chosen = -1;
    std::size_t rounds_used = 0;
    UsageLedger::Slice usage;
};

// Deterministic rethink: the top aggregate meets the threshold and, when more
// than one candidate has been judged, beats the runner-up by min_gap.
inline RethinkVerdict rethink_rule(const std::vector<JudgedCandidate>& judged_sorted,
                                   double threshold, double min_gap) {
    if (judged_sorted.empty()) throw std::invalid_argument("rethink_rule: judged must be non-empty");
    RethinkVerdict v;
    v.raw = "rule";
    const double top = judged_sorted.front().aggregate;
    v.satisfied = top >= threshold &&
                  (judged_sorted.size() == 1 || top - judged_sorted[1].aggregate >= min_gap);
    return v;
}

// Judged candidates by aggregate descending (CSLS order breaking ties), then
// unjudged candidates within the top max_scope of the CSLS ordering, then all
// remaining targets in CSLS order.
inline std::vector<EntityId> final_ranking(const std::vector<JudgedCandidate>& judged,
                                           const std::vector<EntityId>& csls_order,
                                           std::size_t max_scope) {
    std::vector<JudgedCandidate> sorted = judged;
    std::sort(sorted.begin(), sorted.end(), [](const JudgedCandidate& a, const JudgedCandidate& b) {
        if (a.aggregate != b.aggregate) return a.aggregate > b.aggregate;
        return a.csls_pos < b.csls_pos;
    });
    std::vector<EntityId> ranking;
    ranking.reserve(csls_order.size());
    std::vector<bool> is_judged(csls_order.size(), false);
    for (const auto& j : judged) is_judged[j.csls_pos] = true;
    for (const auto& j : sorted) ranking.push_back(j.id);
    const std::size_t cut = std::min(max_scope, csls_order.size());
    for (std::size_t pos = 0; pos < cut; ++pos)
        if (!is_judged[pos]) ranking.push_back(csls_order[pos]);
    for (std::size_t pos = cut; pos < csls_order.size(); ++pos)
        if (!is_judged[pos]) ranking.push_back(csls_order[pos]);
    return ranking;
}

inline constexpr const char* kScoreFormatReminder =
    "Your reply did not follow [Output Format]. Reply again with exactly one line: "
    "[NAME SIMILARITY] = A out of 5, "
    "[PROBABILITY OF DESCRIPTION POINTING SAME ENTITY] = B out of 5, "
    "[STRUCTURE SIMILARITY] = C out of 5, [TIME SIMILARITY] = D out of 5.";

inline constexpr const char* kVerdictFormatReminder =
    "Your reply did not follow the instruction. Just directly answer [YES] or [NO], "
    "don't give other text.";

// Everything one alignment run shares across targets.
struct AlignContext {
    const KnowledgeGraph& kg1;
    const KnowledgeGraph& kg2;
    const CslsIndex& csls;
    ChatClient& client;
    DescriptionCache& cache;
    AlignConfig cfg;
    std::string system_prompt;  // rendered once

    AlignContext(const KnowledgeGraph& kg1_, const KnowledgeGraph& kg2_, const CslsIndex& csls_,
                 ChatClient& client_, DescriptionCache& cache_, AlignConfig cfg_)
        : kg1(kg1_), kg2(kg2_), csls(csls_), client(client_), cache(cache_), cfg(std::move(cfg_)) {
        cfg.schedule.validate();
        if (cfg.reasoning_case.empty())
            cfg.reasoning_case = cfg.card_options.plain_text ? kDefaultPlainReasoningCase
                                                             : kDefaultReasoningCase;
        system_prompt = render_system_prompt(cfg.reasoning_case, cfg.card_options.plain_text);
    }
};

namespace detail {

inline ChatRequest base_request(const AlignContext& ctx) {
    ChatRequest r;
    r.model = ctx.cfg.model;
    r.temperature = ctx.cfg.temperature;
    r.max_tokens = ctx.cfg.max_tokens;
    r.messages.push_back({Role::System, ctx.system_prompt});
    return r;
}

// One reasoning call with the parse-retry protocol: on a malformed reply,
// retry once with a format reminder appended; on a second failure the
// candidate scores (1,1,1,1) and the event is logged.
inline SimilarityScores judge_candidate(const AlignContext& ctx, const EntityCard& main_card,
                                        const EntityCard& cand_card, EntityId target) {
    ChatRequest request = base_request(ctx);
    request.messages.push_back(
        {Role::User,
         render_reasoning_prompt(main_card, cand_card, ctx.cfg.card_options.plain_text)});
    ChatReply reply = ctx.client.chat(request, target);
    auto parsed = parse_scores(reply.content);
    if (!parsed) {
        request.messages.push_back({Role::Assistant, reply.content});
        request.messages.push_back({Role::User, kScoreFormatReminder});
        reply = ctx.client.chat(request, target);
        parsed = parse_scores(reply.content);
    }
    if (!parsed) {
        log_warn("reasoning reply unparseable twice for target %lld vs %s; scoring (1,1,1,1)",
                 static_cast<long long>(target), cand_card.id.c_str());
        return SimilarityScores{1, 1, 1, 1};
    }
    return parsed.value();
}

inline RethinkVerdict rethink(const AlignContext& ctx, const std::string& main_name,
                              const std::vector<JudgedCandidate>& judged_sorted, EntityId target) {
    if (ctx.cfg.rethink_mode == RethinkMode::Rule)
        return rethink_rule(judged_sorted, ctx.cfg.rethink_threshold, ctx.cfg.rethink_min_gap);

    std::vector<std::pair<std::string, double>> pairs;
    pairs.reserve(judged_sorted.size());
    for (const auto& j : judged_sorted)
        pairs.emplace_back(ctx.cfg.card_options.mask_names ? "entity_" + std::to_string(j.id)
                                                           : ctx.kg2.entity_name(j.id),
                           j.aggregate);
    ChatRequest request = base_request(ctx);
    request.messages.push_back(
        {Role::User, render_rethinking_prompt(main_name, pairs, ctx.cfg.rethink_examples)});
    ChatReply reply = ctx.client.chat(request, target);
    auto verdict = parse_verdict(reply.content);
    if (!verdict) {
        request.messages.push_back({Role::Assistant, reply.content});
        request.messages.push_back({Role::User, kVerdictFormatReminder});
        reply = ctx.client.chat(request, target);
        verdict = parse_verdict(reply.content);
    }
    if (!verdict) {
        log_warn("rethink reply unparseable twice for target %lld; falling back to rule",
                 static_cast<long long>(target));
        return rethink_rule(judged_sorted, ctx.cfg.rethink_threshold, ctx.cfg.rethink_min_gap);
    }
    return verdict.value();
}

inline std::string description_for(const AlignContext& ctx, const KnowledgeGraph& kg, EntityId e,
                                   EntityId target) {
    if (!ctx.cfg.card_options.include_description) return "";
    return generate_description(ctx.client, kg, e, ctx.cache, ctx.cfg.model, ctx.system_prompt,
                                ctx.cfg.card_options, target);
}

}  // namespace detail

// Algorithm: for each scope in the schedule, collect the top-scope CSLS
// candidates, judge the not-yet-judged ones, then rethink; stop when the
// verdict is satisfied. After the last round the best aggregate wins
// regardless.
inline AlignmentResult align_entity(EntityId target, const AlignContext& ctx) {
    AlignmentResult res;
    res.target = target;

    const std::size_t src_row = ctx.kg1.row_of(target);
    const auto scored = ctx.csls.topk(src_row, ctx.csls.num_targets());
    std::vector<EntityId> csls_order;
    csls_order.reserve(scored.size());
    for (const auto& s : scored) csls_order.push_back(ctx.kg2.sorted_ids()[s.row]);

    std::vector<std::size_t> scopes = ctx.cfg.schedule.scopes;
    if (!ctx.cfg.two_stage) scopes = {ctx.cfg.schedule.max_scope()};

    try {
        const std::string main_desc = detail::description_for(ctx, ctx.kg1, target, target);
        const EntityCard main_card = make_card(ctx.kg1, target, main_desc, ctx.cfg.card_options);

        std::vector<JudgedCandidate> judged_sorted;
        for (std::size_t scope : scopes) {
            ++res.rounds_used;
            const std::size_t upto = std::min(scope, csls_order.size());
            for (std::size_t pos = res.judged.size(); pos < upto; ++pos) {
                const EntityId cand = csls_order[pos];
                const std::string cand_desc = detail::description_for(ctx, ctx.kg2, cand, target);
                const EntityCard cand_card =
                    make_card(ctx.kg2, cand, cand_desc, ctx.cfg.card_options);
                JudgedCandidate j;
                j.id = cand;
                j.csls_pos = pos;
                j.scores = detail::judge_candidate(ctx, main_card, cand_card, target);
                j.aggregate = j.scores.aggregate(ctx.cfg.weights);
                res.judged.push_back(j);
            }
            judged_sorted = res.judged;
            std::sort(judged_sorted.begin(), judged_sorted.end(),
                      [](const JudgedCandidate& a, const JudgedCandidate& b) {
                          if (a.aggregate != b.aggregate) return a.aggregate > b.aggregate;
                          return a.csls_pos < b.csls_pos;
                      });
            if (judged_sorted.empty()) break;  // no targets at all
            if (ctx.cfg.two_stage &&
                detail::rethink(ctx, main_card.name, judged_sorted, target).satisfied)
                break;
        }
    } catch (const ChatError& e) {
        log_error("alignment failed for target %lld: %s", static_cast<long long>(target), e.what());
        res.failed = true;
    }

    auto ranking = final_ranking(res.judged, csls_order, ctx.cfg.schedule.max_scope());
    if (ranking.size() > ctx.cfg.ranking_cap) ranking.resize(ctx.cfg.ranking_cap);
    res.final_ranking = std::move(ranking);
    res.chosen = res.final_ranking.empty() ? -1 : res.final_ranking.front();
    res.usage = ctx.client.ledger() ? ctx.client.ledger()->for_target(target) : UsageLedger::Slice{};
    return res;
}

struct RoundHistogram {
    std::vector<std::size_t> counts;  // counts[r-1] = targets finishing in round r

    std::vector<double> proportions() const {
        std::size_t total = 0;
        for (auto c : counts) total += c;
        std::vector<double> p(counts.size(), 0.0);
        if (total > 0)
            for (std::size_t i = 0; i < counts.size(); ++i)
                p[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
        return p;
    }
};

struct AlignRun {
    std::vector<AlignmentResult> results;  // one per test anchor, in anchor order
    RoundHistogram histogram;
};

// Aligns every test anchor's left entity. Worker count beyond 1 trades
// bit-reproducible transcript order for throughput; results keep anchor order
// either way.
inline AlignRun align_all(const std::vector<AnchorPair>& test_anchors, const AlignContext& ctx,
                          std::size_t workers = 1) {
    AlignRun run;
    run.results.resize(test_anchors.size());
    run.histogram.counts.assign(ctx.cfg.schedule.scopes.size(), 0);
    if (test_anchors.empty()) return run;

    if (workers <= 1) {
        for (std::size_t i = 0; i < test_anchors.size(); ++i)
            run.results[i] = align_entity(test_anchors[i].left, ctx);
    } else {
        std::atomic<std::size_t> next{0};
        auto work = [&] {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= test_anchors.size()) return;
                run.results[i] = align_entity(test_anchors[i].left, ctx);
            }
        };
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < std::min(workers, test_anchors.size()); ++w)
            pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }

    for (const auto& r : run.results)
        if (r.rounds_used >= 1 && r.rounds_used <= run.histogram.counts.size())
            ++run.histogram.counts[r.rounds_used - 1];
    return run;
}

}  // namespace chatea
