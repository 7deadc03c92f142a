#pragma once

#include <regex>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "chatea/backend.hpp"
#include "chatea/kg.hpp"
#include "chatea/parse.hpp"
#include "chatea/prompts.hpp"

namespace chatea {

struct OracleConfig {
    bool perturb_low_scores = true;  // jitter non-gold scores within [1,2]
    std::uint64_t seed = 99;
    double rethink_margin = 0.5;  // top must beat the runner-up by this much
};

// Deterministic stand-in for the chat model, answering from gold labels. It
// parses entity ids back out of the rendered card literals, so renderer
// regressions surface as hard errors instead of silent misalignment.
class OracleBackend : public ChatBackend {
public:
    OracleBackend(const KnowledgeGraph& kg1, const KnowledgeGraph& kg2, const AnchorSet& gold,
                  OracleConfig cfg = {})
        : kg1_(kg1), kg2_(kg2), cfg_(cfg) {
        for (const auto& p : gold.pairs) gold_.insert(key(p.left, p.right));
    }

    ChatReply send(const ChatRequest& request) override {
        if (request.messages.empty()) throw ChatError("oracle: empty request");
        const std::string& prompt = request.messages.back().content;
        std::string content;
        if (prompt.find("- Do [Main Entity] and [Candidate Entity] align or match?") !=
            std::string::npos) {
            content = answer_reasoning(prompt);
        } else if (prompt.find("Do these entity alignments are satisfactory enough") !=
                   std::string::npos) {
            content = answer_rethinking(prompt);
        } else if (prompt.find("description of the knowledge graph entity") != std::string::npos) {
            content = answer_description(prompt);
        } else {
            throw ChatError("oracle: unrecognized prompt: " + prompt.substr(0, 120));
        }
        ChatReply reply;
        reply.content = content;
        reply.prompt_tokens = estimate_tokens(request);
        reply.completion_tokens = estimate_tokens(content);
        reply.estimated_tokens = true;
        return reply;
    }

    std::string id() const override { return "oracle"; }

private:
    static std::uint64_t key(EntityId a, EntityId b) {
        return (static_cast<std::uint64_t>(a) << 32) ^ static_cast<std::uint64_t>(b & 0xffffffff);
    }

    // Resolves a rendered display name, including the masked "entity_<id>"
    // form used by the name ablation.
    static std::optional<EntityId> resolve_name(const KnowledgeGraph& kg, const std::string& name) {
        if (auto id = kg.find_by_name(name)) return id;
        if (name.rfind("entity_", 0) == 0) {
            try {
                return std::stoll(name.substr(7));
            } catch (const std::exception&) {
                return std::nullopt;
            }
        }
        return std::nullopt;
    }

    static std::string unescape(const std::string& s) {
        std::string out;
        out.reserve(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] == '\\' && i + 1 < s.size()) ++i;
            out.push_back(s[i]);
        }
        return out;
    }

    std::string answer_reasoning(const std::string& prompt) const {
        static const std::regex card_re(R"(Entity\('((?:[^'\\]|\\.)*)', '([^']*)',)");
        static const std::regex plain_re(R"(entity name '((?:[^'\\]|\\.)*)' \(id '([^']*)'\))");
        std::vector<std::pair<std::string, std::string>> cards;  // (name, id)
        for (auto it = std::sregex_iterator(prompt.begin(), prompt.end(), card_re);
             it != std::sregex_iterator(); ++it)
            cards.emplace_back(unescape((*it)[1].str()), (*it)[2].str());
        if (cards.empty())
            for (auto it = std::sregex_iterator(prompt.begin(), prompt.end(), plain_re);
                 it != std::sregex_iterator(); ++it)
                cards.emplace_back(unescape((*it)[1].str()), (*it)[2].str());
        if (cards.size() != 2)
            throw ChatError("oracle: expected two entity cards in reasoning prompt, found " +
                            std::to_string(cards.size()));
        const EntityId main_id = std::stoll(cards[0].second);
        const EntityId cand_id = std::stoll(cards[1].second);
        if (gold_.count(key(main_id, cand_id))) return canonical_score_line(5, 5, 5, 5);
        int a = 1, b = 1, c = 1, d = 1;
        if (cfg_.perturb_low_scores) {
            std::uint64_t h = mix_seeds(cfg_.seed, key(main_id, cand_id));
            a += static_cast<int>(h & 1);
            b += static_cast<int>((h >> 1) & 1);
            c += static_cast<int>((h >> 2) & 1);
            d += static_cast<int>((h >> 3) & 1);
        }
        return canonical_score_line(a, b, c, d);
    }

    std::string answer_rethinking(const std::string& prompt) const {
        static const std::regex main_re(R"(\[Main Entity\]: (.*) -> \[)");
        static const std::regex pair_re(R"(\('((?:[^'\\]|\\.)*)', ([0-9.]+)\))");
        // Only the head of the prompt lists the real pairs; the tail holds
        // boilerplate and exemplar pairs that must not be parsed.
        const auto cut = prompt.find("\n\nPlease answer the question:");
        const std::string head = cut == std::string::npos ? prompt : prompt.substr(0, cut);
        std::smatch m;
        if (!std::regex_search(head, m, main_re))
            throw ChatError("oracle: no main entity in rethinking prompt");
        const std::string main_name = m[1].str();
        std::vector<std::pair<std::string, double>> pairs;
        for (auto it = std::sregex_iterator(head.begin(), head.end(), pair_re);
             it != std::sregex_iterator(); ++it)
            pairs.emplace_back(unescape((*it)[1].str()), std::stod((*it)[2].str()));
        if (pairs.empty()) throw ChatError("oracle: no alignment pairs in rethinking prompt");

        const auto main_id = resolve_name(kg1_, main_name);
        const auto top_id = resolve_name(kg2_, pairs[0].first);
        bool satisfied = false;
        if (main_id && top_id && gold_.count(key(*main_id, *top_id))) {
            satisfied =
                pairs.size() == 1 || pairs[0].second - pairs[1].second >= cfg_.rethink_margin;
        }
        return satisfied ? "[YES]" : "[NO]";
    }

    std::string answer_description(const std::string& prompt) const {
        static const std::regex name_re(R"(entity '((?:[^'\\]|\\.)*)'\.)");
        std::smatch m;
        if (!std::regex_search(prompt, m, name_re))
            throw ChatError("oracle: no entity name in description prompt");
        const std::string name = unescape(m[1].str());
        std::size_t tuple_count = 0;
        const auto tuples_pos = prompt.find("Tuples: [");
        if (tuples_pos != std::string::npos)
            for (std::size_t i = tuples_pos; i < prompt.size() && prompt[i] != ']'; ++i)
                if (prompt[i] == '(') ++tuple_count;
        return name + " is a knowledge graph entity with " + std::to_string(tuple_count) +
               " recorded facts.";
    }

    const KnowledgeGraph& kg1_;
    const KnowledgeGraph& kg2_;
    OracleConfig cfg_;
    std::unordered_set<std::uint64_t> gold_;
};

}  // namespace chatea
