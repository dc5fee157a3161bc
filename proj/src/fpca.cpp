#include "atcsim/fpca.hpp"

#include "atcsim/errors.hpp"

#include <algorithm>

namespace atcsim
{
    namespace
    {
        template <class Values>
        double interp(const std::vector<double> &grid, const Values &values, double x)
        {
            const std::size_t n = grid.size();
            if (n == 0)
            {
                return 0.0;
            }
            if (n == 1 || x <= grid.front())
            {
                return values[0];
            }
            if (x >= grid.back())
            {
                return values[static_cast<Eigen::Index>(n - 1)];
            }
            const auto it = std::upper_bound(grid.begin(), grid.end(), x);
            const auto i = static_cast<std::size_t>(it - grid.begin());
            const double f = (x - grid[i - 1]) / (grid[i] - grid[i - 1]);
            const double a = values[static_cast<Eigen::Index>(i - 1)];
            const double b = values[static_cast<Eigen::Index>(i)];
            return a + f * (b - a);
        }
    }

    double interpolate_on_grid(const std::vector<double> &grid, const Eigen::VectorXd &values, double x)
    {
        return interp(grid, values, x);
    }

    double interpolate_on_grid(const std::vector<double> &grid, const std::vector<double> &values, double x)
    {
        return interp(grid, values, x);
    }

    Eigen::VectorXd FunctionalBasis::project(const Eigen::VectorXd &curve) const
    {
        return eigenfunctions.transpose() * (curve - mean_curve);
    }

    Eigen::VectorXd FunctionalBasis::reconstruct(const Eigen::VectorXd &scores) const
    {
        return mean_curve + eigenfunctions * scores;
    }

    double FunctionalBasis::explained_variance_ratio() const
    {
        if (total_variance <= 0.0)
        {
            return 1.0;
        }
        return eigenvalues.sum() / total_variance;
    }

    FunctionalBasis fit_fpca(const Eigen::MatrixXd &curves, std::vector<double> fl_grid, int k,
                             double variance_target)
    {
        const Eigen::Index n = curves.rows();
        const Eigen::Index m = curves.cols();
        if (n == 0 || m == 0 || static_cast<std::size_t>(m) != fl_grid.size())
        {
            throw FitError("fpca: curve matrix does not match the FL grid");
        }
        FunctionalBasis basis;
        basis.fl_grid = std::move(fl_grid);
        basis.mean_curve = curves.colwise().mean().transpose();
        const Eigen::MatrixXd centred = curves.rowwise() - basis.mean_curve.transpose();
        const Eigen::MatrixXd cov = (centred.transpose() * centred) / static_cast<double>(n);
        basis.total_variance = cov.trace();

        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
        if (solver.info() != Eigen::Success)
        {
            throw FitError("fpca: eigendecomposition failed");
        }
        // Eigen returns ascending order.
        Eigen::VectorXd values = solver.eigenvalues().reverse().cwiseMax(0.0);
        Eigen::MatrixXd vectors = solver.eigenvectors().rowwise().reverse();

        Eigen::Index keep = k;
        if (k <= 0)
        {
            keep = 1;
            if (basis.total_variance > 0.0)
            {
                double acc = 0.0;
                for (Eigen::Index i = 0; i < m; ++i)
                {
                    acc += values[i];
                    if (acc >= variance_target * basis.total_variance)
                    {
                        keep = i + 1;
                        break;
                    }
                }
            }
        }
        keep = std::clamp<Eigen::Index>(keep, 1, m);
        // Deterministic sign: the largest-magnitude entry of each eigenfunction is positive.
        for (Eigen::Index c = 0; c < keep; ++c)
        {
            Eigen::Index arg = 0;
            vectors.col(c).cwiseAbs().maxCoeff(&arg);
            if (vectors(arg, c) < 0.0)
            {
                vectors.col(c) *= -1.0;
            }
        }
        basis.eigenvalues = values.head(keep);
        basis.eigenfunctions = vectors.leftCols(keep);
        return basis;
    }
}
