#pragma once

#include <string>
#include <vector>

#include "chatea/kg.hpp"

namespace chatea {

// One rendered fact of an entity card: surface names plus serialized
// timestamps ("~" when unknown).
struct CardTuple {
    std::string head;
    std::string relation;
    std::string tail;
    std::string start;
    std::string end;

    bool operator==(const CardTuple&) const = default;
};

// The code-rendered view of one entity that is substituted into prompts.
struct EntityCard {
    std::string name;
    std::string id;
    std::string description;
    std::vector<CardTuple> tuples;

    bool operator==(const EntityCard&) const = default;
};

namespace detail {

inline std::string escape_single_quotes(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        if (c == '\'' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    return out;
}

}  // namespace detail

// Entity('<name>', '<id>', '<description>', [(h, r, t, ts, te), ...])
inline std::string render_card(const EntityCard& card) {
    std::string out = "Entity('";
    out += detail::escape_single_quotes(card.name);
    out += "', '";
    out += detail::escape_single_quotes(card.id);
    out += "', '";
    out += detail::escape_single_quotes(card.description);
    out += "', [";
    for (std::size_t i = 0; i < card.tuples.size(); ++i) {
        const auto& t = card.tuples[i];
        if (i > 0) out += ", ";
        out += "(" + t.head + ", " + t.relation + ", " + t.tail + ", " + t.start + ", " + t.end + ")";
    }
    out += "])";
    return out;
}

struct CardOptions {
    std::size_t tuple_cap = 5;
    bool include_description = true;  // off under the no-description ablation
    bool mask_names = false;          // name ablation: ids stand in for names
    bool mask_structure = false;      // structure ablation: empty tuple list
    bool mask_time = false;           // temporal ablation: all stamps render "~"
    bool plain_text = false;          // code ablation: no Entity(...) literal
};

// Non-code rendering for the no-code ablation: plain labelled fields.
inline std::string render_card_plain(const EntityCard& card) {
    std::string out = "entity name '";
    out += detail::escape_single_quotes(card.name);
    out += "' (id '";
    out += detail::escape_single_quotes(card.id);
    out += "'), description: '";
    out += detail::escape_single_quotes(card.description);
    out += "', tuples: [";
    for (std::size_t i = 0; i < card.tuples.size(); ++i) {
        const auto& t = card.tuples[i];
        if (i > 0) out += ", ";
        out += "(" + t.head + ", " + t.relation + ", " + t.tail + ", " + t.start + ", " + t.end + ")";
    }
    out += "]";
    return out;
}

// Builds the card for one entity: capped tuple selection by counterpart
// degree, surface-name rendering, and the cached description if one is given.
inline EntityCard make_card(const KnowledgeGraph& kg, EntityId e, const std::string& description,
                            const CardOptions& opts = {}) {
    EntityCard card;
    card.name = opts.mask_names ? "entity_" + std::to_string(e) : kg.entity_name(e);
    card.id = std::to_string(e);
    card.description = opts.include_description ? description : "";
    if (!opts.mask_structure) {
        auto name_of = [&](EntityId id) {
            return opts.mask_names ? "entity_" + std::to_string(id) : kg.entity_name(id);
        };
        for (const Fact& f : entity_tuples(kg, e, opts.tuple_cap)) {
            CardTuple t;
            t.head = name_of(f.head);
            t.relation = kg.relation_name(f.relation);
            t.tail = name_of(f.tail);
            t.start = opts.mask_time ? "~" : f.start.to_string();
            t.end = opts.mask_time ? "~" : f.end.to_string();
            card.tuples.push_back(std::move(t));
        }
    }
    return card;
}

}  // namespace chatea
