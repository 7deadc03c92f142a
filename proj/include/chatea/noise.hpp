#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "chatea/matrix.hpp"
#include "chatea/rng.hpp"

namespace chatea {

// Replaces floor(ratio*dim) seeded-chosen dimensions with uniform noise drawn
// from each dimension's empirical [min, max] range. Ratio 0 returns the input
// unchanged, bit for bit. The dimension choice depends only on (seed, dim), so
// two matrices noised with the same seed lose the same dimensions; the values
// additionally mix in a content hash so the two sides are not fed correlated
// noise.
inline EmbeddingMatrix inject_noise(const EmbeddingMatrix& emb, double ratio, std::uint64_t seed) {
    if (ratio < 0.0 || ratio > 1.0) throw std::invalid_argument("inject_noise: ratio must be in [0,1]");
    const std::size_t dim = emb.dim();
    const auto n_noised = static_cast<std::size_t>(ratio * static_cast<double>(dim));
    if (n_noised == 0) return emb;

    Rng pick_rng(mix_seeds(seed, 0x4e4f495345ULL));
    std::vector<std::size_t> dims(dim);
    for (std::size_t j = 0; j < dim; ++j) dims[j] = j;
    pick_rng.shuffle(dims);
    dims.resize(n_noised);

    EmbeddingMatrix out = emb;
    const std::uint64_t content =
        fnv1a(emb.data().data(), emb.data().size() * sizeof(double));
    Rng value_rng(mix_seeds(seed, content));
    for (std::size_t j : dims) {
        double lo = emb.rows() ? emb.at(0, j) : 0.0;
        double hi = lo;
        for (std::size_t i = 1; i < emb.rows(); ++i) {
            lo = std::min(lo, emb.at(i, j));
            hi = std::max(hi, emb.at(i, j));
        }
        for (std::size_t i = 0; i < emb.rows(); ++i) out.at(i, j) = value_rng.uniform_real(lo, hi);
    }
    return out;
}

}  // namespace chatea
