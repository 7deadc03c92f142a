#pragma once

#include <algorithm>
#include <functional>
#include <queue>
#include <stdexcept>
#include <vector>

#include "chatea/log.hpp"
#include "chatea/matrix.hpp"

namespace chatea {

struct CslsConfig {
    std::size_t neighborhood_k = 10;
};

struct ScoredCandidate {
    std::size_t row = 0;  // target row index
    double score = 0.0;
};

// Cross-domain similarity local scaling between a source and a target
// embedding set:
//
//   csls(x, y) = 2*cos(x, y) - r_tgt(x) - r_src(y)
//
// where r_tgt(x) is the mean cosine from x to its k nearest targets and
// r_src(y) the mean cosine from y to its k nearest sources. Penalties are
// precomputed once so repeated queries are a single pass over the targets.
class CslsIndex {
public:
    CslsIndex(const EmbeddingMatrix& src, const EmbeddingMatrix& tgt, CslsConfig cfg = {})
        : dim_(src.dim()), cfg_(cfg) {
        if (src.dim() != tgt.dim()) throw std::invalid_argument("csls: dimension mismatch");
        if (cfg_.neighborhood_k < 1 || cfg_.neighborhood_k >= tgt.rows())
            throw std::invalid_argument("csls: need 1 <= k < |targets|");
        src_ = normalized(src);
        tgt_ = normalized(tgt);
        const std::size_t ns = src.rows();
        const std::size_t nt = tgt.rows();
        const std::size_t kt = std::min(cfg_.neighborhood_k, nt);
        const std::size_t ks = std::min(cfg_.neighborhood_k, ns);

        r_tgt_.assign(ns, 0.0);
        r_src_.assign(nt, 0.0);
        std::vector<double> cos_row(nt);
        // Bounded min-heap of the best ks cosines seen by each target.
        std::vector<std::priority_queue<double, std::vector<double>, std::greater<double>>> tops(nt);

        for (std::size_t i = 0; i < ns; ++i) {
            for (std::size_t j = 0; j < nt; ++j) {
                const double c = dot(src_.row(i), tgt_.row(j));
                cos_row[j] = c;
                auto& heap = tops[j];
                if (heap.size() < ks) {
                    heap.push(c);
                } else if (c > heap.top()) {
                    heap.pop();
                    heap.push(c);
                }
            }
            r_tgt_[i] = mean_of_top(cos_row, nt, kt);
        }
        for (std::size_t j = 0; j < nt; ++j) {
            double s = 0.0;
            std::size_t cnt = tops[j].size();
            while (!tops[j].empty()) {
                s += tops[j].top();
                tops[j].pop();
            }
            r_src_[j] = cnt > 0 ? s / static_cast<double>(cnt) : 0.0;
        }
    }

    std::size_t num_targets() const { return tgt_.rows(); }

    double score(std::size_t src_row, std::size_t tgt_row) const {
        return 2.0 * dot(src_.row(src_row), tgt_.row(tgt_row)) - r_tgt_[src_row] - r_src_[tgt_row];
    }

    // The scope best targets for one source row, score descending, ties by
    // ascending target row.
    std::vector<ScoredCandidate> topk(std::size_t src_row, std::size_t scope) const {
        if (scope < 1) throw std::invalid_argument("csls: scope must be >= 1");
        const std::size_t nt = tgt_.rows();
        std::vector<ScoredCandidate> all(nt);
        for (std::size_t j = 0; j < nt; ++j) all[j] = {j, score(src_row, j)};
        const std::size_t k = std::min(scope, nt);
        auto better = [](const ScoredCandidate& a, const ScoredCandidate& b) {
            if (a.score != b.score) return a.score > b.score;
            return a.row < b.row;
        };
        std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), better);
        all.resize(k);
        return all;
    }

    // Rank of a given target for a source row (1-based) under the same order.
    std::size_t rank_of(std::size_t src_row, std::size_t tgt_row) const {
        const double s = score(src_row, tgt_row);
        std::size_t rank = 1;
        for (std::size_t j = 0; j < tgt_.rows(); ++j) {
            if (j == tgt_row) continue;
            const double sj = score(src_row, j);
            if (sj > s || (sj == s && j < tgt_row)) ++rank;
        }
        return rank;
    }

private:
    static EmbeddingMatrix normalized(const EmbeddingMatrix& m) {
        EmbeddingMatrix out = m;
        bool warned = false;
        for (std::size_t i = 0; i < out.rows(); ++i) {
            auto r = out.row(i);
            const double n = norm(r);
            if (n == 0.0) {
                if (!warned) {
                    log_warn("csls: zero-norm embedding row %zu, treating cosine as 0", i);
                    warned = true;
                }
                continue;
            }
            for (double& x : r) x /= n;
        }
        return out;
    }

    static double mean_of_top(std::vector<double>& values, std::size_t n, std::size_t k) {
        std::partial_sort(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k),
                          values.begin() + static_cast<std::ptrdiff_t>(n), std::greater<double>());
        double s = 0.0;
        for (std::size_t i = 0; i < k; ++i) s += values[i];
        return s / static_cast<double>(k);
    }

    std::size_t dim_;
    CslsConfig cfg_;
    EmbeddingMatrix src_;
    EmbeddingMatrix tgt_;
    std::vector<double> r_tgt_;  // per source row
    std::vector<double> r_src_;  // per target row
};

inline std::vector<ScoredCandidate> csls_topk(const EmbeddingMatrix& src, const EmbeddingMatrix& tgt,
                                              std::size_t query_row, std::size_t scope,
                                              CslsConfig cfg = {}) {
    return CslsIndex(src, tgt, cfg).topk(query_row, scope);
}

}  // namespace chatea
