#include "atcsim/gmm.hpp"

#include "atcsim/errors.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace atcsim
{
    namespace
    {
        struct Component
        {
            Eigen::LLT<Eigen::MatrixXd> llt;
            double log_norm = 0.0; // -0.5 (d log 2pi + log det)
        };

        bool factorise(const Eigen::MatrixXd &cov, Component &out)
        {
            out.llt.compute(cov);
            if (out.llt.info() != Eigen::Success)
            {
                return false;
            }
            const Eigen::MatrixXd &l = out.llt.matrixL();
            double log_det = 0.0;
            for (Eigen::Index i = 0; i < l.rows(); ++i)
            {
                if (!(l(i, i) > 0.0))
                {
                    return false;
                }
                log_det += 2.0 * std::log(l(i, i));
            }
            const double d = static_cast<double>(cov.rows());
            out.log_norm = -0.5 * (d * std::log(2.0 * std::numbers::pi) + log_det);
            return std::isfinite(out.log_norm);
        }

        double log_density(const Component &c, const Eigen::VectorXd &mean, const Eigen::VectorXd &x)
        {
            const Eigen::VectorXd z = c.llt.matrixL().solve(x - mean);
            return c.log_norm - 0.5 * z.squaredNorm();
        }

        double log_sum_exp(const Eigen::VectorXd &v)
        {
            const double m = v.maxCoeff();
            if (!std::isfinite(m))
            {
                return m;
            }
            return m + std::log((v.array() - m).exp().sum());
        }

        std::vector<Component> factorise_all(ScoreGMM &g, const GmmFitOptions &opt, bool &regularised)
        {
            std::vector<Component> comps(g.covariances.size());
            for (std::size_t k = 0; k < g.covariances.size(); ++k)
            {
                if (factorise(g.covariances[k], comps[k]))
                {
                    continue;
                }
                const auto d = g.covariances[k].rows();
                g.covariances[k] += opt.collapse_regularisation * Eigen::MatrixXd::Identity(d, d);
                regularised = true;
                if (!factorise(g.covariances[k], comps[k]))
                {
                    throw FitError("gmm: covariance of component " + std::to_string(k) +
                                   " collapsed and regularisation did not recover it");
                }
            }
            return comps;
        }

        // Seeded k-means++ followed by a few Lloyd iterations.
        std::vector<int> kmeans_assign(const Eigen::MatrixXd &x, int k, Rng &rng)
        {
            const Eigen::Index n = x.rows();
            std::vector<Eigen::VectorXd> centres;
            centres.push_back(x.row(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)))).transpose());
            Eigen::VectorXd d2(n);
            while (static_cast<int>(centres.size()) < k)
            {
                for (Eigen::Index i = 0; i < n; ++i)
                {
                    double best = std::numeric_limits<double>::infinity();
                    for (const auto &c : centres)
                    {
                        best = std::min(best, (x.row(i).transpose() - c).squaredNorm());
                    }
                    d2[i] = best;
                }
                const double total = d2.sum();
                Eigen::Index pick = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
                if (total > 0.0)
                {
                    double r = rng.uniform01() * total;
                    for (Eigen::Index i = 0; i < n; ++i)
                    {
                        r -= d2[i];
                        if (r < 0.0)
                        {
                            pick = i;
                            break;
                        }
                    }
                }
                centres.push_back(x.row(pick).transpose());
            }
            std::vector<int> assign(static_cast<std::size_t>(n), 0);
            for (int iter = 0; iter < 50; ++iter)
            {
                bool changed = false;
                for (Eigen::Index i = 0; i < n; ++i)
                {
                    int best_k = 0;
                    double best = std::numeric_limits<double>::infinity();
                    for (int c = 0; c < k; ++c)
                    {
                        const double d = (x.row(i).transpose() - centres[static_cast<std::size_t>(c)]).squaredNorm();
                        if (d < best)
                        {
                            best = d;
                            best_k = c;
                        }
                    }
                    if (assign[static_cast<std::size_t>(i)] != best_k)
                    {
                        assign[static_cast<std::size_t>(i)] = best_k;
                        changed = true;
                    }
                }
                for (int c = 0; c < k; ++c)
                {
                    Eigen::VectorXd sum = Eigen::VectorXd::Zero(x.cols());
                    int count = 0;
                    for (Eigen::Index i = 0; i < n; ++i)
                    {
                        if (assign[static_cast<std::size_t>(i)] == c)
                        {
                            sum += x.row(i).transpose();
                            ++count;
                        }
                    }
                    if (count > 0)
                    {
                        centres[static_cast<std::size_t>(c)] = sum / count;
                    }
                }
                if (!changed && iter > 0)
                {
                    break;
                }
            }
            return assign;
        }
    }

    void ScoreGMM::validate() const
    {
        if (weights.empty() || means.size() != weights.size() || covariances.size() != weights.size())
        {
            throw DefinitionError("gmm: inconsistent component arrays");
        }
        double sum = 0.0;
        for (double w : weights)
        {
            if (!(w >= 0.0))
            {
                throw DefinitionError("gmm: negative weight");
            }
            sum += w;
        }
        if (std::abs(sum - 1.0) > 1e-12)
        {
            throw DefinitionError("gmm: weights do not sum to 1");
        }
        const Eigen::Index d = dimension();
        for (std::size_t k = 0; k < weights.size(); ++k)
        {
            if (means[k].size() != d || covariances[k].rows() != d || covariances[k].cols() != d)
            {
                throw DefinitionError("gmm: component " + std::to_string(k) + " has the wrong dimension");
            }
            if (!covariances[k].isApprox(covariances[k].transpose(), 1e-9))
            {
                throw DefinitionError("gmm: covariance " + std::to_string(k) + " is not symmetric");
            }
            Eigen::LLT<Eigen::MatrixXd> llt(covariances[k]);
            if (llt.info() != Eigen::Success)
            {
                throw DefinitionError("gmm: covariance " + std::to_string(k) + " is not positive definite");
            }
        }
    }

    Eigen::VectorXd ScoreGMM::mixture_mean() const
    {
        Eigen::VectorXd m = Eigen::VectorXd::Zero(dimension());
        for (std::size_t k = 0; k < weights.size(); ++k)
        {
            m += weights[k] * means[k];
        }
        return m;
    }

    Eigen::MatrixXd ScoreGMM::mixture_covariance() const
    {
        const Eigen::VectorXd mu = mixture_mean();
        Eigen::MatrixXd c = Eigen::MatrixXd::Zero(dimension(), dimension());
        for (std::size_t k = 0; k < weights.size(); ++k)
        {
            c += weights[k] * (covariances[k] + means[k] * means[k].transpose());
        }
        return c - mu * mu.transpose();
    }

    Eigen::VectorXd ScoreGMM::sample(Rng &rng) const
    {
        const double u = rng.uniform01();
        std::size_t k = weights.size() - 1;
        double acc = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i)
        {
            acc += weights[i];
            if (u < acc)
            {
                k = i;
                break;
            }
        }
        Eigen::VectorXd z(dimension());
        for (Eigen::Index i = 0; i < z.size(); ++i)
        {
            z[i] = rng.normal();
        }
        const Eigen::LLT<Eigen::MatrixXd> llt(covariances[k]);
        return means[k] + llt.matrixL() * z;
    }

    double ScoreGMM::mean_log_likelihood(const Eigen::MatrixXd &data) const
    {
        std::vector<Component> comps(weights.size());
        for (std::size_t k = 0; k < weights.size(); ++k)
        {
            if (!factorise(covariances[k], comps[k]))
            {
                throw DefinitionError("gmm: covariance not positive definite");
            }
        }
        double total = 0.0;
        Eigen::VectorXd lp(static_cast<Eigen::Index>(weights.size()));
        for (Eigen::Index i = 0; i < data.rows(); ++i)
        {
            const Eigen::VectorXd x = data.row(i).transpose();
            for (std::size_t k = 0; k < weights.size(); ++k)
            {
                lp[static_cast<Eigen::Index>(k)] = std::log(weights[k]) + log_density(comps[k], means[k], x);
            }
            total += log_sum_exp(lp);
        }
        return total / static_cast<double>(data.rows());
    }

    GmmFitResult fit_gmm(const Eigen::MatrixXd &x, const GmmFitOptions &opt)
    {
        const Eigen::Index n = x.rows();
        const Eigen::Index d = x.cols();
        const int k = opt.components;
        if (k < 1 || n < k || d < 1)
        {
            throw FitError("gmm: need at least as many observations as components");
        }
        Rng rng(opt.seed);
        const std::vector<int> assign = kmeans_assign(x, k, rng);

        GmmFitResult result;
        ScoreGMM &g = result.gmm;
        const Eigen::VectorXd global_mean = x.colwise().mean().transpose();
        const Eigen::MatrixXd xc = x.rowwise() - global_mean.transpose();
        const Eigen::MatrixXd global_cov = xc.transpose() * xc / static_cast<double>(n);
        for (int c = 0; c < k; ++c)
        {
            Eigen::VectorXd sum = Eigen::VectorXd::Zero(d);
            int count = 0;
            for (Eigen::Index i = 0; i < n; ++i)
            {
                if (assign[static_cast<std::size_t>(i)] == c)
                {
                    sum += x.row(i).transpose();
                    ++count;
                }
            }
            if (count == 0)
            {
                g.means.push_back(global_mean);
                g.covariances.push_back(global_cov);
                g.weights.push_back(1.0);
                continue;
            }
            const Eigen::VectorXd mu = sum / count;
            Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
            for (Eigen::Index i = 0; i < n; ++i)
            {
                if (assign[static_cast<std::size_t>(i)] == c)
                {
                    const Eigen::VectorXd r = x.row(i).transpose() - mu;
                    cov += r * r.transpose();
                }
            }
            g.means.push_back(mu);
            g.covariances.push_back(count > 1 ? Eigen::MatrixXd(cov / count) : global_cov);
            g.weights.push_back(static_cast<double>(count));
        }
        double wsum = 0.0;
        for (double w : g.weights)
        {
            wsum += w;
        }
        for (double &w : g.weights)
        {
            w /= wsum;
        }

        Eigen::MatrixXd resp(n, k);
        double prev_ll = -std::numeric_limits<double>::infinity();
        for (int iter = 0; iter < opt.max_iterations; ++iter)
        {
            const std::vector<Component> comps = factorise_all(g, opt, result.regularised);
            // E-step
            double ll = 0.0;
            Eigen::VectorXd lp(k);
            for (Eigen::Index i = 0; i < n; ++i)
            {
                const Eigen::VectorXd xi = x.row(i).transpose();
                for (int c = 0; c < k; ++c)
                {
                    const auto cc = static_cast<std::size_t>(c);
                    lp[c] = std::log(g.weights[cc]) + log_density(comps[cc], g.means[cc], xi);
                }
                const double lse = log_sum_exp(lp);
                ll += lse;
                resp.row(i) = (lp.array() - lse).exp().transpose();
            }
            ll /= static_cast<double>(n);
            result.iterations = iter + 1;
            if (!std::isfinite(ll))
            {
                throw FitError("gmm: non-finite log-likelihood");
            }
            // M-step
            for (int c = 0; c < k; ++c)
            {
                const auto cc = static_cast<std::size_t>(c);
                const double nk = resp.col(c).sum();
                if (!(nk > 1e-12))
                {
                    throw FitError("gmm: component " + std::to_string(c) + " lost all responsibility");
                }
                const Eigen::VectorXd mu = (resp.col(c).transpose() * x).transpose() / nk;
                const Eigen::MatrixXd r = x.rowwise() - mu.transpose();
                Eigen::MatrixXd cov = (r.transpose() * resp.col(c).asDiagonal() * r) / nk;
                cov = 0.5 * (cov + cov.transpose());
                g.means[cc] = mu;
                g.covariances[cc] = cov;
                g.weights[cc] = nk / static_cast<double>(n);
            }
            if (std::abs(ll - prev_ll) < opt.tolerance)
            {
                result.converged = true;
                break;
            }
            prev_ll = ll;
        }
        factorise_all(g, opt, result.regularised);
        double s = 0.0;
        for (double w : g.weights)
        {
            s += w;
        }
        for (double &w : g.weights)
        {
            w /= s;
        }
        return result;
    }
}
