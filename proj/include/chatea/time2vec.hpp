#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "chatea/kg.hpp"
#include "chatea/matrix.hpp"

namespace chatea {

// Time encoding with one linear component and dim-1 sinusoidal components:
// out[0] = w0*t + p0, out[i] = sin(wi*t + pi) for i >= 1.
struct Time2VecParams {
    std::vector<double> omega;
    std::vector<double> phi;

    std::size_t dim() const { return omega.size(); }

    void validate() const {
        if (omega.empty() || omega.size() != phi.size())
            throw std::invalid_argument("time2vec: |omega| must equal |phi| and be >= 1");
    }

    // Deterministic defaults for fractional-year inputs: a linear term centred
    // near year 2000 plus sin/cos pairs with periods 1, 2, 4, ... years.
    static Time2VecParams defaults(std::size_t dim) {
        Time2VecParams p;
        p.omega.resize(dim);
        p.phi.resize(dim);
        if (dim == 0) return p;
        p.omega[0] = 0.01;
        p.phi[0] = -20.0;
        const double two_pi = 2.0 * 3.14159265358979323846;
        for (std::size_t i = 1; i < dim; ++i) {
            const double period = std::pow(2.0, static_cast<double>((i - 1) / 2));
            p.omega[i] = two_pi / period;
            p.phi[i] = (i % 2 == 0) ? two_pi / 4.0 : 0.0;  // alternate sin / cos
        }
        return p;
    }
};

inline std::vector<double> time2vec(double timestamp, const Time2VecParams& params) {
    params.validate();
    std::vector<double> out(params.dim());
    out[0] = params.omega[0] * timestamp + params.phi[0];
    for (std::size_t i = 1; i < out.size(); ++i)
        out[i] = std::sin(params.omega[i] * timestamp + params.phi[i]);
    return out;
}

// Unknown timestamps encode to the zero vector.
inline std::vector<double> time2vec(const Timestamp& t, const Time2VecParams& params) {
    params.validate();
    if (!t.known) return std::vector<double>(params.dim(), 0.0);
    return time2vec(t.to_scalar(), params);
}

// Per-entity raw time view: the mean of time2vec over every known start/end
// bound of the entity's incident facts; zero when the entity has none.
inline EmbeddingMatrix entity_time_views(const KnowledgeGraph& kg, const Time2VecParams& params) {
    params.validate();
    const auto& ids = kg.sorted_ids();
    EmbeddingMatrix m(ids.size(), params.dim());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        std::size_t count = 0;
        auto row = m.row(i);
        for (std::size_t idx : kg.adjacency(ids[i])) {
            for (const Timestamp* t : {&kg.facts[idx].start, &kg.facts[idx].end}) {
                if (!t->known) continue;
                const auto v = time2vec(t->to_scalar(), params);
                for (std::size_t j = 0; j < v.size(); ++j) row[j] += v[j];
                ++count;
            }
        }
        if (count > 0)
            for (double& x : row) x /= static_cast<double>(count);
    }
    return m;
}

}  // namespace chatea
