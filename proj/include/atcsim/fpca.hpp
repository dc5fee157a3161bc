#pragma once

#include <Eigen/Dense>

#include <vector>

namespace atcsim
{
    /// Mean curve plus K orthonormal eigenfunctions on a shared FL grid.
    struct FunctionalBasis
    {
        std::vector<double> fl_grid;
        Eigen::VectorXd mean_curve;
        Eigen::MatrixXd eigenfunctions; // columns, |grid| x K
        Eigen::VectorXd eigenvalues;    // descending, non-negative
        /// Trace of the discrete covariance the basis was extracted from.
        double total_variance = 0.0;

        Eigen::Index components() const noexcept { return eigenfunctions.cols(); }
        Eigen::VectorXd project(const Eigen::VectorXd &curve) const;
        Eigen::VectorXd reconstruct(const Eigen::VectorXd &scores) const;
        double explained_variance_ratio() const;
    };

    /// Discrete FPCA of curves stored as rows (N x |grid|). The covariance uses the 1/N normalisation.
    /// `k` = 0 picks the smallest K explaining `variance_target` of the trace (at least 1).
    FunctionalBasis fit_fpca(const Eigen::MatrixXd &curves, std::vector<double> fl_grid, int k,
                             double variance_target = 0.95);

    /// Linear interpolation of a grid curve, clamped at the ends.
    double interpolate_on_grid(const std::vector<double> &grid, const Eigen::VectorXd &values, double x);
    double interpolate_on_grid(const std::vector<double> &grid, const std::vector<double> &values, double x);
}
