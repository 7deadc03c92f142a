#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "chatea/matrix.hpp"
#include "chatea/rng.hpp"

namespace chatea {

enum class FusionDistance { NegCsls, EuclideanSq };

struct TrainConfig {
    double margin = 1.0;
    double learning_rate = 0.2;
    std::size_t epochs = 80;
    std::size_t negatives_per_positive = 5;
    std::uint64_t seed = 7;
    std::size_t dim = 64;  // reference hidden size
    FusionDistance distance = FusionDistance::NegCsls;
    std::size_t csls_k = 10;

    void validate() const {
        if (!(margin > 0.0)) throw std::invalid_argument("train config: margin must be > 0");
        if (epochs < 1 || negatives_per_positive < 1)
            throw std::invalid_argument("train config: counts must be >= 1");
    }
};

// Output width of each view's linear projection; zero drops the view.
struct ViewDims {
    std::size_t name = 64;
    std::size_t time = 32;
    std::size_t structure = 64;

    std::size_t total() const { return name + time + structure; }
};

// Raw per-entity views of one KG, all row-aligned with sorted entity ids.
struct ViewSet {
    EmbeddingMatrix name;
    EmbeddingMatrix time;
    EmbeddingMatrix structure;

    std::size_t rows() const { return name.rows(); }
};

// The learned per-view projections, shared by both KGs.
struct FusionParams {
    EmbeddingMatrix name;       // name_raw_dim x dims.name
    EmbeddingMatrix time;       // time_raw_dim x dims.time
    EmbeddingMatrix structure;  // structure_raw_dim x dims.structure

    std::size_t count() const {
        return name.data().size() + time.data().size() + structure.data().size();
    }

    std::vector<double> flatten() const {
        std::vector<double> v;
        v.reserve(count());
        for (const auto* m : {&name, &time, &structure})
            v.insert(v.end(), m->data().begin(), m->data().end());
        return v;
    }

    void unflatten(const std::vector<double>& v) {
        std::size_t off = 0;
        for (auto* m : {&name, &time, &structure}) {
            std::copy(v.begin() + static_cast<std::ptrdiff_t>(off),
                      v.begin() + static_cast<std::ptrdiff_t>(off + m->data().size()),
                      m->data().begin());
            off += m->data().size();
        }
    }
};

// Identity for square projections, scaled Gaussian otherwise.
inline FusionParams initial_params(const ViewSet& views, const ViewDims& dims, std::uint64_t seed) {
    Rng rng(mix_seeds(seed, 0x46555345ULL));
    auto init_one = [&](std::size_t in_dim, std::size_t out_dim) {
        EmbeddingMatrix p(in_dim, out_dim);
        if (in_dim == out_dim) {
            for (std::size_t i = 0; i < in_dim; ++i) p.at(i, i) = 1.0;
        } else if (out_dim > 0) {
            const double scale = 1.0 / std::sqrt(static_cast<double>(in_dim));
            for (double& x : p.data()) x = rng.normal() * scale;
        }
        return p;
    };
    FusionParams p;
    p.name = init_one(views.name.dim(), dims.name);
    p.time = init_one(views.time.dim(), dims.time);
    p.structure = init_one(views.structure.dim(), dims.structure);
    return p;
}

// h_mul = [name_view * P_name | time_view * P_time | structure_view * P_structure]
inline EmbeddingMatrix fuse(const ViewSet& views, const FusionParams& params) {
    const std::size_t n = views.rows();
    const std::size_t total =
        params.name.dim() + params.time.dim() + params.structure.dim();
    EmbeddingMatrix h(n, total);
    std::size_t col = 0;
    auto apply = [&](const EmbeddingMatrix& x, const EmbeddingMatrix& p) {
        for (std::size_t i = 0; i < n; ++i) {
            auto xi = x.row(i);
            for (std::size_t o = 0; o < p.dim(); ++o) {
                double s = 0.0;
                for (std::size_t k = 0; k < p.rows(); ++k) s += xi[k] * p.at(k, o);
                h.at(i, col + o) = s;
            }
        }
        col += p.dim();
    };
    apply(views.name, params.name);
    apply(views.time, params.time);
    apply(views.structure, params.structure);
    return h;
}

// Margin-ranking loss over anchor positives and sampled negatives:
//
//   L = sum over anchors (i,j), negatives j' of max(0, margin + d(i,j) - d(i,j'))
//
// with d either squared Euclidean distance or negative CSLS. For the CSLS
// distance the k-nearest neighborhoods are recomputed from the current
// parameters and held fixed inside one evaluation; the loss is continuous and
// the fixed-set gradient is exact except on the measure-zero tie boundaries.
class MarginRankingLoss {
public:
    MarginRankingLoss(const ViewSet& views1, const ViewSet& views2,
                      std::vector<std::pair<std::size_t, std::size_t>> anchor_rows,
                      std::vector<std::vector<std::size_t>> negative_rows, TrainConfig cfg)
        : views1_(views1),
          views2_(views2),
          anchors_(std::move(anchor_rows)),
          negatives_(std::move(negative_rows)),
          cfg_(cfg) {
        if (anchors_.empty()) throw std::invalid_argument("margin loss: training anchors required");
        if (negatives_.size() != anchors_.size())
            throw std::invalid_argument("margin loss: one negative list per anchor");
    }

    double value(const FusionParams& params) const { return evaluate(params, nullptr); }

    double value_and_grad(const FusionParams& params, FusionParams& grad) const {
        grad = params;
        for (auto* m : {&grad.name, &grad.time, &grad.structure})
            std::fill(m->data().begin(), m->data().end(), 0.0);
        return evaluate(params, &grad);
    }

private:
    struct Fused {
        EmbeddingMatrix h;
        std::vector<double> norms;
    };

    static Fused fuse_with_norms(const ViewSet& views, const FusionParams& params) {
        Fused f;
        f.h = fuse(views, params);
        f.norms.resize(f.h.rows());
        for (std::size_t i = 0; i < f.h.rows(); ++i) f.norms[i] = norm(f.h.row(i));
        return f;
    }

    double cos(const Fused& a, std::size_t i, const Fused& b, std::size_t j) const {
        if (a.norms[i] == 0.0 || b.norms[j] == 0.0) return 0.0;
        return dot(a.h.row(i), b.h.row(j)) / (a.norms[i] * b.norms[j]);
    }

    // d cos(u,v)/du = v/(|u||v|) - cos * u/|u|^2, accumulated with a factor.
    static void add_cos_grad(const Fused& a, std::size_t i, const Fused& b, std::size_t j,
                             double coef, EmbeddingMatrix& ga, EmbeddingMatrix& gb) {
        const double nu = a.norms[i];
        const double nv = b.norms[j];
        if (nu == 0.0 || nv == 0.0) return;
        const auto u = a.h.row(i);
        const auto v = b.h.row(j);
        const double c = dot(u, v) / (nu * nv);
        auto gu = ga.row(i);
        auto gv = gb.row(j);
        for (std::size_t k = 0; k < u.size(); ++k) {
            gu[k] += coef * (v[k] / (nu * nv) - c * u[k] / (nu * nu));
            gv[k] += coef * (u[k] / (nu * nv) - c * v[k] / (nv * nv));
        }
    }

    // Indices of the k largest values (k-nearest by cosine), any order.
    static std::vector<std::size_t> top_k_indices(const std::vector<double>& vals, std::size_t k) {
        std::vector<std::size_t> idx(vals.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        const std::size_t kk = std::min(k, idx.size());
        std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(kk), idx.end(),
                          [&](std::size_t a, std::size_t b) {
                              if (vals[a] != vals[b]) return vals[a] > vals[b];
                              return a < b;
                          });
        idx.resize(kk);
        return idx;
    }

    double evaluate(const FusionParams& params, FusionParams* grad) const {
        const Fused f1 = fuse_with_norms(views1_, params);
        const Fused f2 = fuse_with_norms(views2_, params);
        const std::size_t n1 = f1.h.rows();
        const std::size_t n2 = f2.h.rows();
        const std::size_t dim = f1.h.dim();

        EmbeddingMatrix g1(n1, dim), g2(n2, dim);

        // CSLS penalty neighborhoods, fixed for this evaluation.
        const bool use_csls = cfg_.distance == FusionDistance::NegCsls;
        std::vector<std::vector<std::size_t>> nbr_t;  // per source row: k nearest target rows
        std::vector<std::vector<std::size_t>> nbr_s;  // per target row: k nearest source rows
        std::vector<double> r_tgt, r_src;
        if (use_csls) {
            const std::size_t kt = std::min(cfg_.csls_k, n2);
            const std::size_t ks = std::min(cfg_.csls_k, n1);
            nbr_t.resize(n1);
            nbr_s.resize(n2);
            r_tgt.assign(n1, 0.0);
            r_src.assign(n2, 0.0);
            std::vector<std::vector<double>> cos_all(n1, std::vector<double>(n2));
            for (std::size_t i = 0; i < n1; ++i)
                for (std::size_t j = 0; j < n2; ++j) cos_all[i][j] = cos(f1, i, f2, j);
            std::vector<double> col(n1);
            for (std::size_t i = 0; i < n1; ++i) {
                nbr_t[i] = top_k_indices(cos_all[i], kt);
                for (std::size_t j : nbr_t[i]) r_tgt[i] += cos_all[i][j];
                r_tgt[i] /= static_cast<double>(kt);
            }
            for (std::size_t j = 0; j < n2; ++j) {
                for (std::size_t i = 0; i < n1; ++i) col[i] = cos_all[i][j];
                nbr_s[j] = top_k_indices(col, ks);
                for (std::size_t i : nbr_s[j]) r_src[j] += col[i];
                r_src[j] /= static_cast<double>(ks);
            }
        }

        auto distance = [&](std::size_t i, std::size_t j) {
            if (use_csls) return -(2.0 * cos(f1, i, f2, j) - r_tgt[i] - r_src[j]);
            double s = 0.0;
            auto a = f1.h.row(i);
            auto b = f2.h.row(j);
            for (std::size_t k = 0; k < dim; ++k) {
                const double diff = a[k] - b[k];
                s += diff * diff;
            }
            return s;
        };

        // coef is dL/dd for one hinge term (+1 positive, -1 negative).
        auto add_distance_grad = [&](std::size_t i, std::size_t j, double coef) {
            if (use_csls) {
                add_cos_grad(f1, i, f2, j, -2.0 * coef, g1, g2);
                const double wt = coef / static_cast<double>(nbr_t[i].size());
                for (std::size_t jj : nbr_t[i]) add_cos_grad(f1, i, f2, jj, wt, g1, g2);
                const double ws = coef / static_cast<double>(nbr_s[j].size());
                for (std::size_t ii : nbr_s[j]) add_cos_grad(f1, ii, f2, j, ws, g1, g2);
            } else {
                auto a = f1.h.row(i);
                auto b = f2.h.row(j);
                auto ga = g1.row(i);
                auto gb = g2.row(j);
                for (std::size_t k = 0; k < dim; ++k) {
                    const double diff = 2.0 * coef * (a[k] - b[k]);
                    ga[k] += diff;
                    gb[k] -= diff;
                }
            }
        };

        double loss = 0.0;
        for (std::size_t a = 0; a < anchors_.size(); ++a) {
            const auto [i, j] = anchors_[a];
            const double d_pos = distance(i, j);
            for (std::size_t jn : negatives_[a]) {
                const double term = cfg_.margin + d_pos - distance(i, jn);
                if (term <= 0.0) continue;
                loss += term;
                if (grad) {
                    add_distance_grad(i, j, 1.0);
                    add_distance_grad(i, jn, -1.0);
                }
            }
        }

        if (grad) {
            // dL/dP_v = X_v^T * G columns of that view, summed over both KGs.
            std::size_t col = 0;
            auto project_back = [&](const EmbeddingMatrix& x1, const EmbeddingMatrix& x2,
                                    EmbeddingMatrix& gp) {
                for (std::size_t k = 0; k < gp.rows(); ++k)
                    for (std::size_t o = 0; o < gp.dim(); ++o) {
                        double s = 0.0;
                        for (std::size_t i = 0; i < n1; ++i) s += x1.at(i, k) * g1.at(i, col + o);
                        for (std::size_t i = 0; i < n2; ++i) s += x2.at(i, k) * g2.at(i, col + o);
                        gp.at(k, o) = s;
                    }
                col += gp.dim();
            };
            project_back(views1_.name, views2_.name, grad->name);
            project_back(views1_.time, views2_.time, grad->time);
            project_back(views1_.structure, views2_.structure, grad->structure);
        }
        return loss;
    }

    const ViewSet& views1_;
    const ViewSet& views2_;
    std::vector<std::pair<std::size_t, std::size_t>> anchors_;
    std::vector<std::vector<std::size_t>> negatives_;
    TrainConfig cfg_;
};

struct FusionResult {
    EmbeddingMatrix h1;
    EmbeddingMatrix h2;
    FusionParams params;
    std::vector<double> loss_history;
};

// Samples negatives uniformly from target rows that are not a training-anchor
// right side (falling back to all-but-positive when every row is anchored).
inline std::vector<std::vector<std::size_t>> sample_negatives(
    const std::vector<std::pair<std::size_t, std::size_t>>& anchors, std::size_t n_targets,
    std::size_t per_positive, Rng& rng) {
    std::vector<bool> anchored(n_targets, false);
    for (const auto& [_, j] : anchors) anchored[j] = true;
    std::vector<std::size_t> pool;
    for (std::size_t j = 0; j < n_targets; ++j)
        if (!anchored[j]) pool.push_back(j);

    std::vector<std::vector<std::size_t>> out(anchors.size());
    for (std::size_t a = 0; a < anchors.size(); ++a) {
        out[a].reserve(per_positive);
        for (std::size_t m = 0; m < per_positive; ++m) {
            if (!pool.empty()) {
                out[a].push_back(pool[rng.uniform(pool.size())]);
            } else {
                std::size_t j = rng.uniform(n_targets);
                while (n_targets > 1 && j == anchors[a].second) j = rng.uniform(n_targets);
                out[a].push_back(j);
            }
        }
    }
    return out;
}

// Trains the per-view projections by full-batch gradient descent, resampling
// negatives each epoch. Throws on non-finite loss.
inline FusionResult fuse_and_train(const ViewSet& views1, const ViewSet& views2,
                                   const std::vector<std::pair<std::size_t, std::size_t>>& anchor_rows,
                                   const ViewDims& dims, const TrainConfig& cfg) {
    cfg.validate();
    if (anchor_rows.empty()) throw std::invalid_argument("fuse_and_train: training anchors required");

    FusionResult res;
    res.params = initial_params(views1, dims, cfg.seed);
    Rng rng(mix_seeds(cfg.seed, 0x4e454753ULL));
    FusionParams grad = res.params;
    const double step = cfg.learning_rate / static_cast<double>(anchor_rows.size());

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        auto negs = sample_negatives(anchor_rows, views2.rows(), cfg.negatives_per_positive, rng);
        MarginRankingLoss loss(views1, views2, anchor_rows, std::move(negs), cfg);
        const double l = loss.value_and_grad(res.params, grad);
        if (!std::isfinite(l))
            throw std::runtime_error("fuse_and_train: loss diverged at epoch " +
                                     std::to_string(epoch) + " (non-finite)");
        res.loss_history.push_back(l);
        auto step_one = [&](EmbeddingMatrix& p, const EmbeddingMatrix& g) {
            for (std::size_t k = 0; k < p.data().size(); ++k) p.data()[k] -= step * g.data()[k];
        };
        step_one(res.params.name, grad.name);
        step_one(res.params.time, grad.time);
        step_one(res.params.structure, grad.structure);
    }

    res.h1 = fuse(views1, res.params);
    res.h2 = fuse(views2, res.params);
    return res;
}

}  // namespace chatea
