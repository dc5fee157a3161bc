#pragma once

#include "atcsim/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace atcsim
{
    /// Full-covariance Gaussian mixture over score vectors.
    struct ScoreGMM
    {
        std::vector<double> weights;
        std::vector<Eigen::VectorXd> means;
        std::vector<Eigen::MatrixXd> covariances;

        int components() const noexcept { return static_cast<int>(weights.size()); }
        Eigen::Index dimension() const noexcept { return means.empty() ? 0 : means.front().size(); }

        /// Throws DefinitionError when weights are off the simplex or a covariance is not SPD.
        void validate() const;

        /// sum_k w_k mu_k
        Eigen::VectorXd mixture_mean() const;
        /// sum_k w_k (Sigma_k + mu_k mu_k^T) - mean mean^T
        Eigen::MatrixXd mixture_covariance() const;

        Eigen::VectorXd sample(Rng &rng) const;
        /// Mean log-likelihood per row.
        double mean_log_likelihood(const Eigen::MatrixXd &data) const;
    };

    struct GmmFitOptions
    {
        int components = 1;
        std::uint64_t seed = 0;
        int max_iterations = 500;
        double tolerance = 1e-6;
        double collapse_regularisation = 1e-6;
    };

    struct GmmFitResult
    {
        ScoreGMM gmm;
        int iterations = 0;
        bool converged = false;
        bool regularised = false;
    };

    /// EM with seeded k-means++ initialisation. Rows of `data` are observations.
    GmmFitResult fit_gmm(const Eigen::MatrixXd &data, const GmmFitOptions &options);
}
