#include "atcsim/errors.hpp"
#include "atcsim/fpca.hpp"
#include "atcsim/gmm.hpp"
#include "atcsim/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace atcsim;

namespace
{
    std::vector<double> grid(int m)
    {
        std::vector<double> g;
        for (int i = 0; i < m; ++i)
        {
            g.push_back(100.0 + 250.0 * i / (m - 1));
        }
        return g;
    }

    Eigen::VectorXd unit(Eigen::VectorXd v) { return v / v.norm(); }

    ScoreGMM two_blobs()
    {
        ScoreGMM g;
        g.weights = {0.3, 0.7};
        g.means = {Eigen::Vector2d(-4.0, 1.0), Eigen::Vector2d(3.0, -2.0)};
        Eigen::Matrix2d c0;
        c0 << 1.0, 0.3, 0.3, 0.5;
        Eigen::Matrix2d c1;
        c1 << 0.6, -0.2, -0.2, 1.2;
        g.covariances = {c0, c1};
        g.validate();
        return g;
    }

    Eigen::MatrixXd draw(const ScoreGMM &g, int n, std::uint64_t seed)
    {
        Rng rng(seed);
        Eigen::MatrixXd data(n, g.dimension());
        for (int i = 0; i < n; ++i)
        {
            data.row(i) = g.sample(rng).transpose();
        }
        return data;
    }
}

TEST(Fpca, ZeroVarianceCorpus)
{
    const int m = 21;
    Eigen::VectorXd curve(m);
    for (int i = 0; i < m; ++i)
    {
        curve(i) = std::sin(0.3 * i) * 10.0;
    }
    Eigen::MatrixXd curves = curve.transpose().replicate(50, 1);
    const auto b = fit_fpca(curves, grid(m), 0);
    EXPECT_NEAR(b.total_variance, 0.0, 1e-20);
    EXPECT_LT(b.eigenvalues.cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((b.reconstruct(b.project(curve)) - curve).norm(), 1e-9);
    EXPECT_LT((b.mean_curve - curve).norm(), 1e-9);
}

TEST(Fpca, RecoversKnownBasis)
{
    const int m = 31;
    Eigen::VectorXd p1(m), p2(m), mu(m);
    for (int i = 0; i < m; ++i)
    {
        const double x = i / double(m - 1);
        p1(i) = std::sin(3.14159265358979 * x);
        p2(i) = std::cos(3.14159265358979 * x);
        mu(i) = 5.0 - 3.0 * x;
    }
    p1 = unit(p1);
    p2 = unit(p2 - p2.dot(p1) * p1);
    Rng rng(21);
    const int n = 5000;
    Eigen::MatrixXd curves(n, m);
    for (int r = 0; r < n; ++r)
    {
        curves.row(r) = (mu + 3.0 * rng.normal() * p1 + 1.0 * rng.normal() * p2).transpose();
    }
    const auto b = fit_fpca(curves, grid(m), 0, 0.95);
    ASSERT_EQ(b.components(), 2);
    EXPECT_NEAR(b.eigenvalues(0), 9.0, 0.5);
    EXPECT_NEAR(b.eigenvalues(1), 1.0, 0.08);
    EXPECT_GT(std::abs(b.eigenfunctions.col(0).dot(p1)), 0.999);
    EXPECT_GT(std::abs(b.eigenfunctions.col(1).dot(p2)), 0.999);
    EXPECT_NEAR(b.explained_variance_ratio(), 1.0, 1e-9);
    // Orthonormal columns.
    const Eigen::MatrixXd gram = b.eigenfunctions.transpose() * b.eigenfunctions;
    EXPECT_LT((gram - Eigen::MatrixXd::Identity(2, 2)).norm(), 1e-9);

    const auto one = fit_fpca(curves, grid(m), 1);
    EXPECT_EQ(one.components(), 1);
    EXPECT_NEAR(one.explained_variance_ratio(), 0.9, 0.01);
}

TEST(Fpca, InterpolationClampsAtEnds)
{
    const std::vector<double> g{0.0, 10.0, 20.0};
    const std::vector<double> v{1.0, 3.0, -1.0};
    EXPECT_EQ(interpolate_on_grid(g, v, -5.0), 1.0);
    EXPECT_EQ(interpolate_on_grid(g, v, 25.0), -1.0);
    EXPECT_DOUBLE_EQ(interpolate_on_grid(g, v, 5.0), 2.0);
    EXPECT_DOUBLE_EQ(interpolate_on_grid(g, v, 15.0), 1.0);
}

TEST(Gmm, MomentsFollowMixtureFormulas)
{
    const ScoreGMM g = two_blobs();
    const Eigen::MatrixXd data = draw(g, 10000, 4);
    const Eigen::VectorXd mean = data.colwise().mean().transpose();
    const Eigen::MatrixXd centred = data.rowwise() - mean.transpose();
    const Eigen::MatrixXd cov = centred.transpose() * centred / double(data.rows());
    const Eigen::MatrixXd implied = g.mixture_covariance();
    EXPECT_LT((cov - implied).norm() / implied.norm(), 0.10);
    EXPECT_LT((mean - g.mixture_mean()).norm(), 0.1);
    EXPECT_NEAR(g.mixture_mean()(0), 0.3 * -4.0 + 0.7 * 3.0, 1e-12);
}

TEST(Gmm, EmRecoversComponents)
{
    const ScoreGMM truth = two_blobs();
    const Eigen::MatrixXd data = draw(truth, 2000, 17);
    GmmFitOptions opt;
    opt.components = 2;
    opt.seed = 3;
    const auto fit = fit_gmm(data, opt);
    EXPECT_TRUE(fit.converged);
    const ScoreGMM &g = fit.gmm;
    // Align by the first coordinate of the means.
    const int a = g.means[0](0) < g.means[1](0) ? 0 : 1;
    const int b = 1 - a;
    EXPECT_LT((g.means[a] - truth.means[0]).norm(), 0.1 * truth.means[0].norm());
    EXPECT_LT((g.means[b] - truth.means[1]).norm(), 0.1 * truth.means[1].norm());
    EXPECT_NEAR(g.weights[a], 0.3, 0.03);
    EXPECT_NEAR(g.weights[b], 0.7, 0.03);
    EXPECT_GT(fit.gmm.mean_log_likelihood(data), -5.0);

    const auto again = fit_gmm(data, opt);
    EXPECT_EQ(again.gmm.means[0], g.means[0]);
    EXPECT_EQ(again.gmm.weights, g.weights);
}

TEST(Gmm, CollapsedComponentIsRegularised)
{
    Eigen::MatrixXd data = Eigen::MatrixXd::Constant(40, 2, 1.5);
    GmmFitOptions opt;
    opt.components = 1;
    const auto fit = fit_gmm(data, opt);
    EXPECT_TRUE(fit.regularised);
    EXPECT_NEAR(fit.gmm.means[0](0), 1.5, 1e-12);
    EXPECT_NO_THROW(fit.gmm.validate());
}

TEST(Gmm, ValidationRejectsBadParameters)
{
    ScoreGMM g = two_blobs();
    g.weights = {0.5, 0.6};
    EXPECT_THROW(g.validate(), DefinitionError);
    g = two_blobs();
    g.covariances[1] << 1.0, 2.0, 2.0, 1.0;
    EXPECT_THROW(g.validate(), DefinitionError);
    Eigen::MatrixXd tiny(1, 2);
    tiny << 0.0, 0.0;
    GmmFitOptions opt;
    opt.components = 2;
    EXPECT_THROW(fit_gmm(tiny, opt), FitError);
}

TEST(Gmm, SamplingIsSeeded)
{
    const ScoreGMM g = two_blobs();
    EXPECT_EQ(draw(g, 20, 5), draw(g, 20, 5));
    EXPECT_NE(draw(g, 20, 5), draw(g, 20, 6));
}
