#pragma once

#include <filesystem>
#include <string>
#include <unordered_set>
#include <vector>

#include "chatea/kg.hpp"
#include "chatea/rng.hpp"

namespace chatea {

// Builds a pair of isomorphic KGs whose entity names differ by small
// character perturbations: a desk-scale benchmark where the true alignment is
// a known permutation. Used by tests, demos and smoke runs.
struct SyntheticConfig {
    std::size_t entities = 100;
    std::size_t relations = 6;
    double avg_degree = 6.0;
    double temporal_fraction = 0.7;
    std::uint64_t seed = 42;
};

struct SyntheticPair {
    KnowledgeGraph kg1;
    KnowledgeGraph kg2;
    std::vector<AnchorPair> gold;  // (kg1 id, kg2 id), one per entity
};

namespace detail {

inline std::string random_name(Rng& rng) {
    static const char consonants[] = "bcdfghklmnprstvz";
    static const char vowels[] = "aeiou";
    auto word = [&](std::size_t len) {
        std::string w;
        for (std::size_t i = 0; i < len; ++i) {
            const char c = i % 2 == 0 ? consonants[rng.uniform(sizeof consonants - 1)]
                                      : vowels[rng.uniform(sizeof vowels - 1)];
            w.push_back(i == 0 ? static_cast<char>(c - 32) : c);  // capitalize first letter
        }
        return w;
    };
    std::string name = word(6 + rng.uniform(5));
    name += " ";
    name += word(6 + rng.uniform(5));
    return name;
}

// Wiki-style variant: spaces become underscores plus one small character
// edit, so names stay recognizable but never byte-equal.
inline std::string perturb_name(const std::string& name, Rng& rng) {
    std::string s = name;
    for (char& c : s)
        if (c == ' ') c = '_';
    const std::size_t pos = 1 + rng.uniform(s.size() > 2 ? s.size() - 2 : 1);
    if (rng.uniform(2) == 0) {
        if (pos + 1 < s.size() && s[pos] != '_' && s[pos + 1] != '_')
            std::swap(s[pos], s[pos + 1]);
    } else {
        s.insert(pos, 1, s[pos]);  // duplicate one character
    }
    return s;
}

}  // namespace detail

inline SyntheticPair make_synthetic_pair(const SyntheticConfig& cfg = {}) {
    Rng rng(cfg.seed);
    SyntheticPair pair;
    const std::size_t n = cfg.entities;

    pair.kg1.name = "synthetic_1";
    pair.kg2.name = "synthetic_2";

    std::unordered_set<std::string> used1, used2;
    std::vector<std::string> names1(n), names2(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::string base = detail::random_name(rng);
        while (!used1.insert(base).second) base = detail::random_name(rng);
        std::string variant = detail::perturb_name(base, rng);
        while (!used2.insert(variant).second) variant = detail::perturb_name(base, rng);
        names1[i] = base;
        names2[i] = variant;
    }

    // Random permutation: kg1 entity i corresponds to kg2 entity perm[i].
    std::vector<EntityId> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = static_cast<EntityId>(i);
    rng.shuffle(perm);

    for (std::size_t i = 0; i < n; ++i) {
        pair.kg1.entities[static_cast<EntityId>(i)] = names1[i];
        pair.kg2.entities[perm[i]] = names2[i];
        pair.gold.push_back({static_cast<EntityId>(i), perm[i]});
    }
    for (std::size_t r = 0; r < cfg.relations; ++r) {
        const std::string rel_name = "rel_" + detail::random_name(rng);
        pair.kg1.relations[static_cast<RelationId>(r)] = rel_name;
        pair.kg2.relations[static_cast<RelationId>(r)] = rel_name;
    }

    const auto n_edges = static_cast<std::size_t>(cfg.avg_degree * static_cast<double>(n) / 2.0);
    for (std::size_t e = 0; e < n_edges; ++e) {
        Fact f;
        f.head = static_cast<EntityId>(rng.uniform(n));
        f.tail = static_cast<EntityId>(rng.uniform(n));
        while (f.tail == f.head) f.tail = static_cast<EntityId>(rng.uniform(n));
        f.relation = static_cast<RelationId>(rng.uniform(cfg.relations));
        if (rng.uniform_real() < cfg.temporal_fraction) {
            const int year = 1990 + static_cast<int>(rng.uniform(31));
            const int month = 1 + static_cast<int>(rng.uniform(12));
            f.start = Timestamp::of(year, month);
            const int extra = static_cast<int>(rng.uniform(25));
            f.end = Timestamp::of(year + (month - 1 + extra) / 12, (month - 1 + extra) % 12 + 1);
        }
        pair.kg1.facts.push_back(f);
        Fact g = f;
        g.head = perm[static_cast<std::size_t>(f.head)];
        g.tail = perm[static_cast<std::size_t>(f.tail)];
        // occasional one-month drift keeps the time channel informative
        // without making it an exact fingerprint
        if (g.start.known && rng.uniform_real() < 0.25) {
            const int shifted = g.start.month + (rng.uniform(2) == 0 ? 1 : -1);
            if (shifted >= 1 && shifted <= 12 &&
                (g.start.year != g.end.year || shifted <= g.end.month))
                g.start.month = shifted;
        }
        pair.kg2.facts.push_back(g);
    }
    rng.shuffle(pair.kg2.facts);

    pair.kg1.rebuild_indexes();
    pair.kg2.rebuild_indexes();
    return pair;
}

// Writes the pair in the benchmark file layout so the CLI loaders can run on
// it: triples_N, ent_ids_N, rel_ids_N, ref_ent_ids.
inline void write_synthetic_dataset(const SyntheticPair& pair, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    save_kg(pair.kg1, dir + "/triples_1", dir + "/ent_ids_1", dir + "/rel_ids_1", true);
    save_kg(pair.kg2, dir + "/triples_2", dir + "/ent_ids_2", dir + "/rel_ids_2", true);
    std::ofstream ref(dir + "/ref_ent_ids", std::ios::trunc);
    if (!ref) throw std::runtime_error("cannot write " + dir + "/ref_ent_ids");
    for (const auto& p : pair.gold) ref << p.left << '\t' << p.right << '\n';
}

}  // namespace chatea
