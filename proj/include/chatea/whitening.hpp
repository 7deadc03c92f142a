#pragma once

#include <Eigen/Dense>
#include <stdexcept>

#include "chatea/log.hpp"
#include "chatea/matrix.hpp"

namespace chatea {

// PCA whitening: center, rotate onto the covariance eigenbasis (eigenvalues
// descending), rescale to unit variance, truncate to keep_dim. The sample
// covariance of the output is the identity on the kept dimensions.
inline EmbeddingMatrix whiten(const EmbeddingMatrix& input, std::size_t keep_dim) {
    const std::size_t n = input.rows();
    const std::size_t d = input.dim();
    if (keep_dim < 1 || n < keep_dim)
        throw std::invalid_argument("whiten: need n >= keep_dim >= 1");
    if (!input.all_finite()) throw std::invalid_argument("whiten: non-finite input");

    Eigen::MatrixXd x(n, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = input.at(i, j);

    const Eigen::RowVectorXd mean = x.colwise().mean();
    x.rowwise() -= mean;
    const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n - 1);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success) throw std::runtime_error("whiten: eigendecomposition failed");

    // Eigen returns eigenvalues ascending; walk from the back for descending.
    const auto& evals = eig.eigenvalues();
    const auto& evecs = eig.eigenvectors();
    const double lambda_max = evals(evals.size() - 1);
    const double tol = std::max(lambda_max, 0.0) * 1e-12;

    std::size_t rank = 0;
    for (Eigen::Index i = evals.size() - 1; i >= 0; --i)
        if (evals(i) > tol) ++rank;

    if (rank < d)
        log_warn("whiten: covariance rank %zu < dim %zu, dropping zero-variance directions", rank, d);
    if (keep_dim > rank)
        throw std::runtime_error("whiten: keep_dim " + std::to_string(keep_dim) +
                                 " exceeds covariance rank " + std::to_string(rank));

    Eigen::MatrixXd w(d, keep_dim);
    for (std::size_t k = 0; k < keep_dim; ++k) {
        const Eigen::Index src = evals.size() - 1 - static_cast<Eigen::Index>(k);
        w.col(static_cast<Eigen::Index>(k)) = evecs.col(src) / std::sqrt(evals(src));
    }

    const Eigen::MatrixXd y = x * w;
    EmbeddingMatrix out(n, keep_dim);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < keep_dim; ++j)
            out.at(i, j) = y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    return out;
}

}  // namespace chatea
