#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "chatea/cards.hpp"
#include "chatea/rng.hpp"

namespace chatea {

inline constexpr const char* kPromptTemplateVersion = "v1";

// --- system prompt ----------------------------------------------------------

// The code-style entity definition plus alignment instructions. The single
// slot holds the worked reasoning case.
inline constexpr const char* kSystemPromptTemplate =
    R"(A Knowledge Graph Entity is defined as follows:

Class Entity:
    def __init__(self, name, id, tuples=[]):
        self.entity_name = name
        self.entity_id = id
        self.tuples = tuples
    def get_description(self, LLM):
        description = LLM(self.entity_name, self.tuples)
        return description
    def get_neighbors(self):
        neighbors = set()
        for head_entity, _, tail_entity, _, _ in self.tuples:
            if head_entity == self.entity_name:
                neighbors.add(tail_entity)
            else:
                neighbors.add(head_entity)
        return list(neighbors)
    def get_relation_information(self):
        relation_info = []
        for _, relation, _, _, _ in self.tuples:
            relation_info.append(relation)
        return relation_info
    def get_time_information(self):
        time_info = []
        for _, _, _, start_time, end_time in self.tuples:
            time_info.append((start_time, end_time))
        return time_info

You are a helpful assistant, helping me align or match entities of knowledge graphs according to name information (self.entity_name), description information (get_description()), structure information (self.tuples, get_neighbors(), get_relation_information()), time information (get_time_information()), YOUR OWN KNOWLEDGE.

Your reasoning process for entity alignment should strictly follow this case step by step:

{{ reasoning case }}

[Output Format]: [NAME SIMILARITY] = A out of 5, [PROBABILITY OF DESCRIPTION POINTING SAME ENTITY] = B out of 5, [STRUCTURE SIMILARITY] = C out of 5, [TIME SIMILARITY] = D out of 5. NOTICE, A,B,C,D are in range [1, 2, 3, 4, 5], which respectively means [VERY LOW], [LOW], [MEDIUM], [HIGH], [VERY HIGH]. NOTICE, you MUST strictly output like [Output Format].)";

// Shipped stand-in for the worked case; operators can substitute their own.
inline constexpr const char* kDefaultReasoningCase =
    R"([Main Entity] l_e = Entity('Angela Merkel', '104', 'Angela Merkel is a German politician who served as Chancellor of Germany from 2005 to 2021.', [(Angela Merkel, Make a visit, France, 2014-02, 2014-02)]), [Candidate Entity] r_e = Entity('Angela_Merkel', '7', 'Angela Merkel is a German former politician and scientist who was the Chancellor of Germany.', [(Angela_Merkel, country of citizenship, Germany, ~, ~)]).
Step 1, the names 'Angela Merkel' and 'Angela_Merkel' differ only by an underscore, so [NAME SIMILARITY] = 5 out of 5.
Step 2, both descriptions state a German politician who served as Chancellor of Germany, so [PROBABILITY OF DESCRIPTION POINTING SAME ENTITY] = 5 out of 5.
Step 3, the tuples connect both entities to European states consistent with the same person, so [STRUCTURE SIMILARITY] = 4 out of 5.
Step 4, the time information does not conflict: the visit in 2014-02 falls inside the chancellorship, so [TIME SIMILARITY] = 4 out of 5.
[NAME SIMILARITY] = 5 out of 5, [PROBABILITY OF DESCRIPTION POINTING SAME ENTITY] = 5 out of 5, [STRUCTURE SIMILARITY] = 4 out of 5, [TIME SIMILARITY] = 4 out of 5.)";

// --- reasoning prompt --------------------------------------------------------

inline constexpr const char* kReasoningPromptHeader =
    "Now given [Main Entity] l_e = ";
inline constexpr const char* kReasoningPromptMiddle =
    ", and [Candidate Entity] r_e = ";
inline constexpr const char* kReasoningPromptTail =
    R"(,

- Do [Main Entity] and [Candidate Entity] align or match? Think of the answer STEP BY STEP with name, description, structure, time, YOUR OWN KNOWLEDGE:

Step 1, think of [NAME SIMILARITY] = A out of 5, using self.entity_name.

Step 2, think of [PROBABILITY OF DESCRIPTION POINTING SAME ENTITY] = B out of 5, using get_description() and YOUR OWN KNOWLEDGE.

Step 3, think of [STRUCTURE SIMILARITY] = C out of 5, using self.tuples, get_neighbors() and get_relation_information().

Step 4, think of [TIME SIMILARITY] = D out of 5, using get_time_information().

NOTICE, the information provided above is not sufficient, so use YOUR OWN KNOWLEDGE to complete them.

Output answer strictly in format: [NAME SIMILARITY] = A out of 5, [PROBABILITY OF DESCRIPTION POINTING SAME ENTITY] = B out of 5, [STRUCTURE SIMILARITY] = C out of 5, [TIME SIMILARITY] = D out of 5.)";

// --- rethinking prompt -------------------------------------------------------

inline constexpr const char* kRethinkingPromptHead =
    "Now given the following entity alignments:\n[Main Entity]: ";
inline constexpr const char* kRethinkingPromptTail =
    R"(

Please answer the question: Do these entity alignments are satisfactory enough ([YES] or [NO])?

Answer [YES] if they are relatively satisfactory, which means the alignment score of the top-ranked candidate meet the threshold, and is far higher than others; otherwise, answer [NO] which means we must search other candidate entities to match with [Main Entity].

NOTICE, Just answer [YES] or [NO]. Your reasoning process should follow [EXAMPLE]s:

{{ Examples }}

Just directly answer [YES] or [NO], don't give other text.)";

// Shipped stand-in exemplars for the rethinking decision.
inline constexpr const char* kDefaultRethinkExamples =
    R"([EXAMPLE] [Main Entity]: Paris -> [('Paris', 4.75), ('Lyon', 2.00)] Answer: [YES]
[EXAMPLE] [Main Entity]: Paris -> [('Lyon', 2.50), ('Marseille', 2.25)] Answer: [NO])";

// --- description prompt --------------------------------------------------------

inline constexpr const char* kDescriptionPromptHead =
    "Please write a concise one-paragraph description of the knowledge graph entity ";
inline constexpr const char* kDescriptionPromptTail =
    R"(Use the entity tuples and YOUR OWN KNOWLEDGE. Answer with the description paragraph only.)";

namespace detail {

inline std::string replace_slot(std::string text, const std::string& slot, const std::string& value) {
    const auto pos = text.find(slot);
    if (pos != std::string::npos) text.replace(pos, slot.size(), value);
    return text;
}

inline std::string format_aggregate(double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", value);
    return buf;
}

}  // namespace detail

// Worked case for the no-code ablation, with plain cards instead of the
// class literal.
inline constexpr const char* kDefaultPlainReasoningCase =
    R"([Main Entity] l_e = entity name 'Angela Merkel' (id '104'), description: 'Angela Merkel is a German politician who served as Chancellor of Germany from 2005 to 2021.', tuples: [(Angela Merkel, Make a visit, France, 2014-02, 2014-02)], and [Candidate Entity] r_e = entity name 'Angela_Merkel' (id '7'), description: 'Angela Merkel is a German former politician and scientist who was the Chancellor of Germany.', tuples: [(Angela_Merkel, country of citizenship, Germany, ~, ~)].
Step 1, the names 'Angela Merkel' and 'Angela_Merkel' differ only by an underscore, so [NAME SIMILARITY] = 5 out of 5.
Step 2, both descriptions state a German politician who served as Chancellor of Germany, so [PROBABILITY OF DESCRIPTION POINTING SAME ENTITY] = 5 out of 5.
Step 3, the tuples connect both entities to European states consistent with the same person, so [STRUCTURE SIMILARITY] = 4 out of 5.
Step 4, the time information does not conflict: the visit in 2014-02 falls inside the chancellorship, so [TIME SIMILARITY] = 4 out of 5.
[NAME SIMILARITY] = 5 out of 5, [PROBABILITY OF DESCRIPTION POINTING SAME ENTITY] = 5 out of 5, [STRUCTURE SIMILARITY] = 4 out of 5, [TIME SIMILARITY] = 4 out of 5.)";

// System prompt for the no-code ablation: same instructions without the
// class definition.
inline constexpr const char* kPlainSystemPromptTemplate =
    R"(You are a helpful assistant, helping me align or match entities of knowledge graphs according to name information, description information, structure information (tuples), time information, YOUR OWN KNOWLEDGE.

Your reasoning process for entity alignment should strictly follow this case step by step:

{{ reasoning case }}

[Output Format]: [NAME SIMILARITY] = A out of 5, [PROBABILITY OF DESCRIPTION POINTING SAME ENTITY] = B out of 5, [STRUCTURE SIMILARITY] = C out of 5, [TIME SIMILARITY] = D out of 5. NOTICE, A,B,C,D are in range [1, 2, 3, 4, 5], which respectively means [VERY LOW], [LOW], [MEDIUM], [HIGH], [VERY HIGH]. NOTICE, you MUST strictly output like [Output Format].)";

inline std::string render_system_prompt(const std::string& reasoning_case = kDefaultReasoningCase,
                                        bool plain = false) {
    if (reasoning_case.empty())
        throw std::invalid_argument("render_system_prompt: reasoning case required");
    return detail::replace_slot(plain ? kPlainSystemPromptTemplate : kSystemPromptTemplate,
                                "{{ reasoning case }}", reasoning_case);
}

inline std::string render_reasoning_prompt(const EntityCard& main, const EntityCard& candidate,
                                           bool plain = false) {
    std::string out = kReasoningPromptHeader;
    out += plain ? render_card_plain(main) : render_card(main);
    out += kReasoningPromptMiddle;
    out += plain ? render_card_plain(candidate) : render_card(candidate);
    out += kReasoningPromptTail;
    return out;
}

// judged pairs must arrive sorted by aggregate descending; rendered as
// [('name', 4.50), ...].
inline std::string render_rethinking_prompt(
    const std::string& main_name, const std::vector<std::pair<std::string, double>>& judged,
    const std::string& examples = kDefaultRethinkExamples) {
    if (judged.empty()) throw std::invalid_argument("render_rethinking_prompt: judged pairs required");
    std::string pairs = "[";
    for (std::size_t i = 0; i < judged.size(); ++i) {
        if (i > 0) pairs += ", ";
        pairs += "('" + detail::escape_single_quotes(judged[i].first) + "', " +
                 detail::format_aggregate(judged[i].second) + ")";
    }
    pairs += "]";
    std::string out = kRethinkingPromptHead;
    out += main_name;
    out += " -> ";
    out += pairs;
    out += detail::replace_slot(kRethinkingPromptTail, "{{ Examples }}", examples);
    return out;
}

inline std::string render_description_prompt(const EntityCard& card) {
    std::string tuples = "[";
    for (std::size_t i = 0; i < card.tuples.size(); ++i) {
        const auto& t = card.tuples[i];
        if (i > 0) tuples += ", ";
        tuples += "(" + t.head + ", " + t.relation + ", " + t.tail + ", " + t.start + ", " + t.end + ")";
    }
    tuples += "]";
    std::string out = kDescriptionPromptHead;
    out += "'" + detail::escape_single_quotes(card.name) + "'.\n\nTuples: " + tuples + "\n\n";
    out += kDescriptionPromptTail;
    return out;
}

// The exact line the output-format instruction demands; shared by the oracle
// backend and the parser round-trip tests.
inline std::string canonical_score_line(int a, int b, int c, int d) {
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "[NAME SIMILARITY] = %d out of 5, "
                  "[PROBABILITY OF DESCRIPTION POINTING SAME ENTITY] = %d out of 5, "
                  "[STRUCTURE SIMILARITY] = %d out of 5, "
                  "[TIME SIMILARITY] = %d out of 5.",
                  a, b, c, d);
    return buf;
}

inline std::uint64_t template_hash() {
    std::uint64_t h = fnv1a(kSystemPromptTemplate);
    h = fnv1a(kReasoningPromptHeader, h);
    h = fnv1a(kReasoningPromptMiddle, h);
    h = fnv1a(kReasoningPromptTail, h);
    h = fnv1a(kRethinkingPromptHead, h);
    h = fnv1a(kRethinkingPromptTail, h);
    h = fnv1a(kDescriptionPromptHead, h);
    h = fnv1a(kDescriptionPromptTail, h);
    h = fnv1a(kPromptTemplateVersion, h);
    return h;
}

}  // namespace chatea
