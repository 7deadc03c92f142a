#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "chatea/kg.hpp"
#include "chatea/rng.hpp"

namespace chatea {

struct WalkConfig {
    std::size_t walks_per_node = 10;
    std::size_t walk_length = 40;
    double return_bias_p = 1.0;
    double inout_bias_q = 1.0;
    std::size_t window = 5;
    std::size_t negatives = 5;
    std::size_t epochs = 3;
    std::uint64_t seed = 7;

    void validate() const {
        if (walks_per_node < 1 || walk_length < 1 || window < 1 || negatives < 1 || epochs < 1)
            throw std::invalid_argument("walk config: counts must be >= 1");
        if (!(return_bias_p > 0.0) || !(inout_bias_q > 0.0))
            throw std::invalid_argument("walk config: p and q must be > 0");
    }
};

// Undirected neighbor view of a KG with parallel-fact multiplicities as edge
// weights; rows are indexed like the embedding matrices (ascending entity id).
class WalkGraph {
public:
    explicit WalkGraph(const KnowledgeGraph& kg) {
        const auto& ids = kg.sorted_ids();
        n_ = ids.size();
        neighbors_.resize(n_);
        weights_.resize(n_);
        for (std::size_t i = 0; i < n_; ++i) {
            const EntityId e = ids[i];
            std::vector<std::size_t> nbr;
            for (std::size_t idx : kg.adjacency(e)) {
                const Fact& f = kg.facts[idx];
                nbr.push_back(kg.row_of(f.head == e ? f.tail : f.head));
                if (f.head == e && f.tail == e) nbr.push_back(i);  // self-loop counts twice
            }
            std::sort(nbr.begin(), nbr.end());
            for (std::size_t k = 0; k < nbr.size();) {
                std::size_t run = 1;
                while (k + run < nbr.size() && nbr[k + run] == nbr[k]) ++run;
                neighbors_[i].push_back(nbr[k]);
                weights_[i].push_back(static_cast<double>(run));
                k += run;
            }
        }
    }

    std::size_t size() const { return n_; }
    const std::vector<std::size_t>& neighbors(std::size_t v) const { return neighbors_[v]; }
    const std::vector<double>& weights(std::size_t v) const { return weights_[v]; }

    bool adjacent(std::size_t a, std::size_t b) const {
        const auto& nb = neighbors_[a];
        return std::binary_search(nb.begin(), nb.end(), b);
    }

private:
    std::size_t n_ = 0;
    std::vector<std::vector<std::size_t>> neighbors_;
    std::vector<std::vector<double>> weights_;
};

namespace detail {

inline std::size_t weighted_pick(const std::vector<double>& w, Rng& rng) {
    double total = 0.0;
    for (double x : w) total += x;
    double r = rng.uniform_real() * total;
    for (std::size_t i = 0; i < w.size(); ++i) {
        r -= w[i];
        if (r < 0.0) return i;
    }
    return w.size() - 1;
}

}  // namespace detail

// Second-order transition weights from (prev -> cur): weight(next) = edge
// weight times 1/p when next == prev, 1 when next is adjacent to prev, and
// 1/q otherwise.
inline std::vector<double> step_weights(const WalkGraph& g, std::size_t prev, std::size_t cur,
                                        const WalkConfig& cfg) {
    const auto& nbr = g.neighbors(cur);
    const auto& ew = g.weights(cur);
    std::vector<double> w(nbr.size());
    for (std::size_t i = 0; i < nbr.size(); ++i) {
        double bias;
        if (nbr[i] == prev)
            bias = 1.0 / cfg.return_bias_p;
        else if (g.adjacent(prev, nbr[i]))
            bias = 1.0;
        else
            bias = 1.0 / cfg.inout_bias_q;
        w[i] = ew[i] * bias;
    }
    return w;
}

// Node2vec-style biased random walks: walks_per_node sequences per entity,
// each up to walk_length nodes, truncating at dead ends. Sequences hold row
// indices, not entity ids.
inline std::vector<std::vector<std::size_t>> biased_walks(const WalkGraph& g, const WalkConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    std::vector<std::vector<std::size_t>> corpus;
    corpus.reserve(g.size() * cfg.walks_per_node);
    for (std::size_t round = 0; round < cfg.walks_per_node; ++round) {
        for (std::size_t start = 0; start < g.size(); ++start) {
            std::vector<std::size_t> walk{start};
            while (walk.size() < cfg.walk_length) {
                const std::size_t cur = walk.back();
                const auto& nbr = g.neighbors(cur);
                if (nbr.empty()) break;
                std::size_t next;
                if (walk.size() == 1) {
                    next = nbr[detail::weighted_pick(g.weights(cur), rng)];
                } else {
                    const auto w = step_weights(g, walk[walk.size() - 2], cur, cfg);
                    next = nbr[detail::weighted_pick(w, rng)];
                }
                walk.push_back(next);
            }
            corpus.push_back(std::move(walk));
        }
    }
    return corpus;
}

inline std::vector<std::vector<std::size_t>> biased_walks(const KnowledgeGraph& kg,
                                                          const WalkConfig& cfg) {
    return biased_walks(WalkGraph(kg), cfg);
}

}  // namespace chatea
