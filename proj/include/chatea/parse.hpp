#pragma once

#include <array>
#include <cctype>
#include <regex>
#include <string>

#include "chatea/expected.hpp"

namespace chatea {

struct ScoreWeights {
    double name = 1.0;
    double description = 1.0;
    double structure = 1.0;
    double time = 1.0;
};

// The four 1-5 sub-scores parsed from a reasoning reply.
struct SimilarityScores {
    int name_sim = 0;
    int desc_sim = 0;
    int struct_sim = 0;
    int time_sim = 0;

    double aggregate(const ScoreWeights& w = {}) const {
        const double total = w.name + w.description + w.structure + w.time;
        return (w.name * name_sim + w.description * desc_sim + w.structure * struct_sim +
                w.time * time_sim) /
               total;
    }

    bool operator==(const SimilarityScores&) const = default;
};

struct RethinkVerdict {
    bool satisfied = false;
    std::string raw;
};

namespace detail {

// Last "= N out of 5" occurrence of one bracketed label, case-insensitive and
// whitespace-tolerant. Returns 0 when the label never carries a numeral.
inline int last_label_value(const std::string& reply, const char* label_pattern) {
    static const auto flags = std::regex::icase | std::regex::optimize;
    const std::regex re(std::string("\\[\\s*") + label_pattern +
                            "\\s*\\]\\s*=\\s*([0-9]+)\\s+out\\s+of\\s+5",
                        flags);
    int value = 0;
    for (auto it = std::sregex_iterator(reply.begin(), reply.end(), re);
         it != std::sregex_iterator(); ++it)
        value = std::stoi((*it)[1].str());
    return value;
}

}  // namespace detail

// Extracts the last numeric occurrence of each of the four score labels. All
// four must be present with values in [1,5]; the raw reply travels with any
// error for logging and retries.
inline Expected<SimilarityScores> parse_scores(const std::string& reply) {
    static const std::array<const char*, 4> patterns = {
        "NAME\\s+SIMILARITY",
        "PROBABILITY\\s+OF\\s+DESCRIPTION\\s+POINTING\\s+SAME\\s+ENTITY",
        "STRUCTURE\\s+SIMILARITY",
        "TIME\\s+SIMILARITY",
    };
    static const std::array<const char*, 4> names = {
        "[NAME SIMILARITY]", "[PROBABILITY OF DESCRIPTION POINTING SAME ENTITY]",
        "[STRUCTURE SIMILARITY]", "[TIME SIMILARITY]"};

    std::array<int, 4> values{};
    for (std::size_t i = 0; i < patterns.size(); ++i) {
        values[i] = detail::last_label_value(reply, patterns[i]);
        if (values[i] == 0)
            return Expected<SimilarityScores>::fail(std::string("missing score for ") + names[i] +
                                                    "; reply was: " + reply);
        if (values[i] < 1 || values[i] > 5)
            return Expected<SimilarityScores>::fail(std::string("score out of range for ") +
                                                    names[i] + "; reply was: " + reply);
    }
    SimilarityScores s;
    s.name_sim = values[0];
    s.desc_sim = values[1];
    s.struct_sim = values[2];
    s.time_sim = values[3];
    return Expected<SimilarityScores>::ok(s);
}

namespace detail {

inline bool word_boundary(const std::string& s, std::size_t pos, std::size_t len) {
    auto is_word = [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
    };
    const bool left_ok = pos == 0 || !is_word(s[pos - 1]);
    const bool right_ok = pos + len >= s.size() || !is_word(s[pos + len]);
    return left_ok && right_ok;
}

// Position just past the last standalone occurrence of token, or npos.
inline std::size_t last_token_end(const std::string& s, const std::string& token, bool bare) {
    std::size_t best = std::string::npos;
    std::size_t pos = 0;
    while ((pos = s.find(token, pos)) != std::string::npos) {
        if (!bare || word_boundary(s, pos, token.size())) best = pos + token.size();
        ++pos;
    }
    return best;
}

}  // namespace detail

// [YES] -> satisfied, [NO] -> unsatisfied; the later token wins when both
// appear. Lenient mode also accepts bare uppercase YES/NO words.
inline Expected<RethinkVerdict> parse_verdict(const std::string& reply, bool lenient = true) {
    std::size_t yes = detail::last_token_end(reply, "[YES]", false);
    std::size_t no = detail::last_token_end(reply, "[NO]", false);
    if (lenient) {
        const auto bare_yes = detail::last_token_end(reply, "YES", true);
        const auto bare_no = detail::last_token_end(reply, "NO", true);
        if (bare_yes != std::string::npos && (yes == std::string::npos || bare_yes > yes))
            yes = bare_yes;
        if (bare_no != std::string::npos && (no == std::string::npos || bare_no > no))
            no = bare_no;
    }
    if (yes == std::string::npos && no == std::string::npos)
        return Expected<RethinkVerdict>::fail("no [YES]/[NO] token; reply was: " + reply);
    RethinkVerdict v;
    v.raw = reply;
    v.satisfied = no == std::string::npos || (yes != std::string::npos && yes > no);
    return Expected<RethinkVerdict>::ok(v);
}

}  // namespace chatea
