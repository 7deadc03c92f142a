#pragma once

#include <cmath>
#include <vector>

#include "chatea/log.hpp"
#include "chatea/matrix.hpp"
#include "chatea/rng.hpp"
#include "chatea/walks.hpp"

namespace chatea {

// Seeded uniform init in [-0.5/dim, 0.5/dim), the word2vec convention.
inline EmbeddingMatrix skipgram_init(std::size_t vocab, std::size_t dim, std::uint64_t seed) {
    EmbeddingMatrix m(vocab, dim);
    Rng rng(mix_seeds(seed, 0x5347494e49544c45ULL));
    for (double& x : m.data()) x = (rng.uniform_real() - 0.5) / static_cast<double>(dim);
    return m;
}

// Negative-sampling skip-gram over sliding windows. Single-threaded SGD with
// a linearly decaying learning rate; bit-reproducible for a fixed seed.
inline EmbeddingMatrix train_skipgram(const std::vector<std::vector<std::size_t>>& corpus,
                                      std::size_t vocab, std::size_t dim, const WalkConfig& cfg,
                                      double initial_lr = 0.025) {
    if (corpus.empty()) throw std::invalid_argument("train_skipgram: empty corpus");

    EmbeddingMatrix in = skipgram_init(vocab, dim, cfg.seed);
    EmbeddingMatrix out(vocab, dim, 0.0);

    std::vector<std::size_t> counts(vocab, 0);
    std::size_t total_tokens = 0;
    for (const auto& walk : corpus) {
        for (std::size_t v : walk) ++counts[v];
        total_tokens += walk.size();
    }

    // Unigram^0.75 negative-sampling table.
    std::vector<std::size_t> neg_table;
    {
        double z = 0.0;
        for (std::size_t v = 0; v < vocab; ++v) z += std::pow(static_cast<double>(counts[v]), 0.75);
        const std::size_t table_size = 1 << 16;
        neg_table.reserve(table_size);
        if (z > 0.0) {
            double cum = 0.0;
            std::size_t v = 0;
            double share = std::pow(static_cast<double>(counts[0]), 0.75) / z;
            for (std::size_t i = 0; i < table_size; ++i) {
                neg_table.push_back(v);
                cum += 1.0 / static_cast<double>(table_size);
                while (v + 1 < vocab && cum > share) {
                    ++v;
                    share += std::pow(static_cast<double>(counts[v]), 0.75) / z;
                }
            }
        }
    }

    Rng rng(mix_seeds(cfg.seed, 0x5347d00dULL));
    const double sigmoid_clip = 6.0;
    auto sigmoid = [&](double x) {
        if (x > sigmoid_clip) return 1.0;
        if (x < -sigmoid_clip) return 0.0;
        return 1.0 / (1.0 + std::exp(-x));
    };

    std::vector<double> grad_center(dim);
    const std::size_t total_steps = cfg.epochs * total_tokens;
    std::size_t step = 0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (const auto& walk : corpus) {
            for (std::size_t pos = 0; pos < walk.size(); ++pos, ++step) {
                const double lr = initial_lr *
                                  std::max(0.0001, 1.0 - static_cast<double>(step) /
                                                             static_cast<double>(total_steps));
                const std::size_t center = walk[pos];
                const std::size_t lo = pos >= cfg.window ? pos - cfg.window : 0;
                const std::size_t hi = std::min(walk.size() - 1, pos + cfg.window);
                for (std::size_t cpos = lo; cpos <= hi; ++cpos) {
                    if (cpos == pos) continue;
                    const std::size_t context = walk[cpos];
                    auto v_in = in.row(center);
                    std::fill(grad_center.begin(), grad_center.end(), 0.0);
                    for (std::size_t k = 0; k <= cfg.negatives; ++k) {
                        std::size_t target;
                        double label;
                        if (k == 0) {
                            target = context;
                            label = 1.0;
                        } else {
                            target = neg_table.empty()
                                         ? rng.uniform(vocab)
                                         : neg_table[rng.uniform(neg_table.size())];
                            if (target == context) continue;
                            label = 0.0;
                        }
                        auto v_out = out.row(target);
                        const double g = (label - sigmoid(dot(v_in, v_out))) * lr;
                        for (std::size_t j = 0; j < dim; ++j) {
                            grad_center[j] += g * v_out[j];
                            v_out[j] += g * v_in[j];
                        }
                    }
                    for (std::size_t j = 0; j < dim; ++j) v_in[j] += grad_center[j];
                }
            }
        }
    }

    for (std::size_t v = 0; v < vocab; ++v) {
        if (counts[v] == 0) {
            log_warn("skipgram: entity row %zu absent from corpus, zeroing", v);
            std::fill(in.row(v).begin(), in.row(v).end(), 0.0);
        }
    }
    return in;
}

}  // namespace chatea
