#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "chatea/rng.hpp"

namespace chatea {

using EntityId = std::int64_t;
using RelationId = std::int64_t;

// Calendar timestamp at month resolution ("YYYY-MM"); a day component is
// accepted on input and preserved. The unknown state is explicit, never a
// magic number, and serializes as "~".
struct Timestamp {
    bool known = false;
    int year = 0;
    int month = 1;  // 1..12
    int day = 0;    // 0 = unspecified

    static Timestamp unknown() { return {}; }

    static Timestamp of(int year, int month, int day = 0) {
        Timestamp t;
        t.known = true;
        t.year = year;
        t.month = month;
        t.day = day;
        return t;
    }

    // Fractional years: year + (month-1)/12. Day is ignored.
    double to_scalar() const { return static_cast<double>(year) + (month - 1) / 12.0; }

    std::string to_string() const {
        if (!known) return "~";
        char buf[36];
        if (day > 0)
            std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month, day);
        else
            std::snprintf(buf, sizeof buf, "%04d-%02d", year, month);
        return buf;
    }

    // Accepts "~", "YYYY", "YYYY-MM", "YYYY-MM-DD".
    static std::optional<Timestamp> parse(std::string_view s) {
        if (s == "~") return unknown();
        int y = 0, m = 1, d = 0;
        auto read_int = [](std::string_view v, int& out) {
            auto rc = std::from_chars(v.data(), v.data() + v.size(), out);
            return rc.ec == std::errc{} && rc.ptr == v.data() + v.size();
        };
        const auto dash1 = s.find('-', 1);  // offset 1 so negative years would fail cleanly
        if (dash1 == std::string_view::npos) {
            if (!read_int(s, y)) return std::nullopt;
            return of(y, 1);
        }
        if (!read_int(s.substr(0, dash1), y)) return std::nullopt;
        const auto rest = s.substr(dash1 + 1);
        const auto dash2 = rest.find('-');
        if (dash2 == std::string_view::npos) {
            if (!read_int(rest, m)) return std::nullopt;
        } else {
            if (!read_int(rest.substr(0, dash2), m)) return std::nullopt;
            if (!read_int(rest.substr(dash2 + 1), d)) return std::nullopt;
            if (d < 1 || d > 31) return std::nullopt;
        }
        if (m < 1 || m > 12) return std::nullopt;
        return of(y, m, d);
    }

    bool operator==(const Timestamp&) const = default;
};

struct Fact {
    EntityId head = 0;
    RelationId relation = 0;
    EntityId tail = 0;
    Timestamp start;
    Timestamp end;

    bool operator==(const Fact&) const = default;
};

class KnowledgeGraph {
public:
    std::string name;
    std::unordered_map<EntityId, std::string> entities;
    std::unordered_map<RelationId, std::string> relations;
    std::vector<Fact> facts;
    bool temporal = false;

    // Fact indices incident to each entity, ascending; a self-loop fact
    // appears once in its entity's list.
    const std::vector<std::size_t>& adjacency(EntityId e) const {
        auto it = adjacency_.find(e);
        if (it == adjacency_.end()) {
            if (!entities.count(e)) throw std::out_of_range("unknown entity id " + std::to_string(e));
            static const std::vector<std::size_t> empty;
            return empty;
        }
        return it->second;
    }

    std::size_t degree(EntityId e) const { return adjacency(e).size(); }

    const std::string& entity_name(EntityId e) const {
        auto it = entities.find(e);
        if (it == entities.end()) throw std::out_of_range("unknown entity id " + std::to_string(e));
        return it->second;
    }

    const std::string& relation_name(RelationId r) const {
        auto it = relations.find(r);
        if (it == relations.end()) throw std::out_of_range("unknown relation id " + std::to_string(r));
        return it->second;
    }

    // Entity ids in ascending order; embedding row i corresponds to
    // sorted_ids()[i] everywhere in the pipeline.
    const std::vector<EntityId>& sorted_ids() const { return sorted_ids_; }

    std::size_t row_of(EntityId e) const {
        auto it = row_of_.find(e);
        if (it == row_of_.end()) throw std::out_of_range("unknown entity id " + std::to_string(e));
        return it->second;
    }

    std::optional<EntityId> find_by_name(const std::string& n) const {
        auto it = id_of_name_.find(n);
        if (it == id_of_name_.end()) return std::nullopt;
        return it->second;
    }

    void rebuild_indexes() {
        adjacency_.clear();
        sorted_ids_.clear();
        row_of_.clear();
        id_of_name_.clear();
        sorted_ids_.reserve(entities.size());
        for (const auto& [id, nm] : entities) {
            sorted_ids_.push_back(id);
            id_of_name_.emplace(nm, id);
        }
        std::sort(sorted_ids_.begin(), sorted_ids_.end());
        for (std::size_t i = 0; i < sorted_ids_.size(); ++i) row_of_[sorted_ids_[i]] = i;
        temporal = false;
        for (std::size_t i = 0; i < facts.size(); ++i) {
            const Fact& f = facts[i];
            adjacency_[f.head].push_back(i);
            if (f.tail != f.head) adjacency_[f.tail].push_back(i);
            if (f.start.known || f.end.known) temporal = true;
        }
    }

    bool operator==(const KnowledgeGraph& o) const {
        return entities == o.entities && relations == o.relations && facts == o.facts;
    }

private:
    std::unordered_map<EntityId, std::vector<std::size_t>> adjacency_;
    std::vector<EntityId> sorted_ids_;
    std::unordered_map<EntityId, std::size_t> row_of_;
    std::unordered_map<std::string, EntityId> id_of_name_;
};

struct AnchorPair {
    EntityId left = 0;
    EntityId right = 0;
    bool operator==(const AnchorPair&) const = default;
};

struct AnchorSet {
    std::vector<AnchorPair> pairs;
    std::vector<AnchorPair> train;
    std::vector<AnchorPair> test;
};

class DatasetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto tab = line.find('\t', start);
        if (tab == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
}

inline std::int64_t parse_id(std::string_view s, const std::string& path, std::size_t lineno) {
    std::int64_t v = 0;
    const auto rc = std::from_chars(s.data(), s.data() + s.size(), v);
    if (rc.ec != std::errc{} || rc.ptr != s.data() + s.size() || v < 0)
        throw DatasetError(path + ":" + std::to_string(lineno) + ": bad id '" + std::string(s) + "'");
    return v;
}

inline void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace detail

// "id<TAB>name" per line. The name is everything after the first tab.
inline std::unordered_map<std::int64_t, std::string> load_id_name_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DatasetError("cannot open: " + path);
    std::unordered_map<std::int64_t, std::string> table;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        detail::strip_cr(line);
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw DatasetError(path + ":" + std::to_string(lineno) + ": expected id<TAB>name");
        const auto id = detail::parse_id(std::string_view(line).substr(0, tab), path, lineno);
        if (!table.emplace(id, line.substr(tab + 1)).second)
            throw DatasetError(path + ":" + std::to_string(lineno) + ": duplicate id " + std::to_string(id));
    }
    return table;
}

// Triple file: "h<TAB>r<TAB>t" or, when temporal, "h<TAB>r<TAB>t<TAB>ts<TAB>te"
// with "~" for unknown bounds. Relation names come from rel_names_path when
// given, otherwise a numeric placeholder is used.
inline KnowledgeGraph load_kg(const std::string& triple_path, const std::string& entity_names_path,
                              bool temporal, const std::string& rel_names_path = "",
                              const std::string& kg_label = "") {
    KnowledgeGraph kg;
    kg.name = kg_label.empty() ? triple_path : kg_label;
    {
        auto ents = load_id_name_table(entity_names_path);
        kg.entities.insert(ents.begin(), ents.end());
    }
    if (!rel_names_path.empty()) {
        auto rels = load_id_name_table(rel_names_path);
        kg.relations.insert(rels.begin(), rels.end());
    }

    std::ifstream in(triple_path);
    if (!in) throw DatasetError("cannot open: " + triple_path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        detail::strip_cr(line);
        if (line.empty()) continue;
        const auto fields = detail::split_tabs(line);
        const std::size_t expect = temporal ? 5 : 3;
        if (fields.size() != expect)
            throw DatasetError(triple_path + ":" + std::to_string(lineno) + ": expected " +
                               std::to_string(expect) + " tab-separated fields, got " +
                               std::to_string(fields.size()));
        Fact f;
        f.head = detail::parse_id(fields[0], triple_path, lineno);
        f.relation = detail::parse_id(fields[1], triple_path, lineno);
        f.tail = detail::parse_id(fields[2], triple_path, lineno);
        if (temporal) {
            const auto ts = Timestamp::parse(fields[3]);
            const auto te = Timestamp::parse(fields[4]);
            if (!ts || !te)
                throw DatasetError(triple_path + ":" + std::to_string(lineno) + ": bad timestamp");
            f.start = *ts;
            f.end = *te;
            if (f.start.known && f.end.known &&
                (f.start.year > f.end.year ||
                 (f.start.year == f.end.year && f.start.month > f.end.month)))
                throw DatasetError(triple_path + ":" + std::to_string(lineno) + ": start after end");
        }
        if (!kg.entities.count(f.head))
            throw DatasetError(triple_path + ":" + std::to_string(lineno) + ": dangling head id " +
                               std::to_string(f.head));
        if (!kg.entities.count(f.tail))
            throw DatasetError(triple_path + ":" + std::to_string(lineno) + ": dangling tail id " +
                               std::to_string(f.tail));
        if (!rel_names_path.empty() && !kg.relations.count(f.relation))
            throw DatasetError(triple_path + ":" + std::to_string(lineno) + ": dangling relation id " +
                               std::to_string(f.relation));
        if (rel_names_path.empty())
            kg.relations.emplace(f.relation, "relation_" + std::to_string(f.relation));
        kg.facts.push_back(f);
    }
    kg.rebuild_indexes();
    return kg;
}

inline void save_kg(const KnowledgeGraph& kg, const std::string& triple_path,
                    const std::string& entity_names_path, const std::string& rel_names_path,
                    bool temporal) {
    auto write_table = [](const std::unordered_map<std::int64_t, std::string>& table,
                          const std::string& path) {
        std::ofstream out(path, std::ios::trunc);
        if (!out) throw DatasetError("cannot open for write: " + path);
        std::vector<std::int64_t> ids;
        ids.reserve(table.size());
        for (const auto& [id, _] : table) ids.push_back(id);
        std::sort(ids.begin(), ids.end());
        for (auto id : ids) out << id << '\t' << table.at(id) << '\n';
    };
    write_table(kg.entities, entity_names_path);
    write_table(kg.relations, rel_names_path);

    std::ofstream out(triple_path, std::ios::trunc);
    if (!out) throw DatasetError("cannot open for write: " + triple_path);
    for (const Fact& f : kg.facts) {
        out << f.head << '\t' << f.relation << '\t' << f.tail;
        if (temporal) out << '\t' << f.start.to_string() << '\t' << f.end.to_string();
        out << '\n';
    }
}

// Deterministic seeded shuffle; the first floor(ratio*n) pairs train.
inline AnchorSet split_anchor_pairs(std::vector<AnchorPair> pairs, std::uint64_t split_seed,
                                    double train_ratio) {
    if (!(train_ratio > 0.0 && train_ratio < 1.0))
        throw std::invalid_argument("train_ratio must be in (0,1)");
    AnchorSet anchors;
    anchors.pairs = std::move(pairs);
    auto shuffled = anchors.pairs;
    Rng rng(split_seed);
    rng.shuffle(shuffled);
    const auto n_train = static_cast<std::size_t>(train_ratio * static_cast<double>(shuffled.size()));
    anchors.train.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_train));
    anchors.test.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(n_train), shuffled.end());
    return anchors;
}

// "id1<TAB>id2" per line; deterministic seeded shuffle, first floor(ratio*n)
// pairs become the training split.
inline AnchorSet load_anchors(const std::string& path, std::uint64_t split_seed, double train_ratio) {
    if (!(train_ratio > 0.0 && train_ratio < 1.0))
        throw std::invalid_argument("train_ratio must be in (0,1)");
    std::ifstream in(path);
    if (!in) throw DatasetError("cannot open: " + path);
    std::vector<AnchorPair> pairs;
    std::unordered_set<EntityId> seen_left, seen_right;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        detail::strip_cr(line);
        if (line.empty()) continue;
        const auto fields = detail::split_tabs(line);
        if (fields.size() != 2)
            throw DatasetError(path + ":" + std::to_string(lineno) + ": expected id1<TAB>id2");
        AnchorPair p;
        p.left = detail::parse_id(fields[0], path, lineno);
        p.right = detail::parse_id(fields[1], path, lineno);
        if (!seen_left.insert(p.left).second)
            throw DatasetError(path + ":" + std::to_string(lineno) + ": duplicate left id " +
                               std::to_string(p.left));
        if (!seen_right.insert(p.right).second)
            throw DatasetError(path + ":" + std::to_string(lineno) + ": duplicate right id " +
                               std::to_string(p.right));
        pairs.push_back(p);
    }
    return split_anchor_pairs(std::move(pairs), split_seed, train_ratio);
}

// --- entity accessors mirroring the prompt's Entity class -----------------

// For each incident fact: the tail if e is the head, otherwise the head.
// Sorted ascending for determinism.
inline std::vector<EntityId> neighbors(const KnowledgeGraph& kg, EntityId e) {
    std::unordered_set<EntityId> seen;
    for (std::size_t idx : kg.adjacency(e)) {
        const Fact& f = kg.facts[idx];
        seen.insert(f.head == e ? f.tail : f.head);
    }
    std::vector<EntityId> out(seen.begin(), seen.end());
    std::sort(out.begin(), out.end());
    return out;
}

// One relation name per incident fact, in fact-file order, duplicates kept.
inline std::vector<std::string> relations_of(const KnowledgeGraph& kg, EntityId e) {
    std::vector<std::string> out;
    for (std::size_t idx : kg.adjacency(e)) out.push_back(kg.relation_name(kg.facts[idx].relation));
    return out;
}

// One (start, end) pair per incident fact, in fact-file order.
inline std::vector<std::pair<Timestamp, Timestamp>> time_info(const KnowledgeGraph& kg, EntityId e) {
    std::vector<std::pair<Timestamp, Timestamp>> out;
    for (std::size_t idx : kg.adjacency(e)) out.emplace_back(kg.facts[idx].start, kg.facts[idx].end);
    return out;
}

// At most cap incident facts, by descending degree of the counterpart entity,
// ties by ascending fact index.
inline std::vector<Fact> entity_tuples(const KnowledgeGraph& kg, EntityId e, std::size_t cap = 5) {
    if (cap < 1) throw std::invalid_argument("cap must be >= 1");
    const auto& adj = kg.adjacency(e);
    std::vector<std::size_t> order(adj.begin(), adj.end());
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const Fact& fa = kg.facts[a];
        const Fact& fb = kg.facts[b];
        const EntityId ca = fa.head == e ? fa.tail : fa.head;
        const EntityId cb = fb.head == e ? fb.tail : fb.head;
        const auto da = kg.degree(ca);
        const auto db = kg.degree(cb);
        if (da != db) return da > db;
        return a < b;
    });
    if (order.size() > cap) order.resize(cap);
    std::vector<Fact> out;
    out.reserve(order.size());
    for (std::size_t idx : order) out.push_back(kg.facts[idx]);
    return out;
}

}  // namespace chatea
