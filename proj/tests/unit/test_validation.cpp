#include "atcsim/rng.hpp"
#include "atcsim/synthetic.hpp"
#include "atcsim/validation.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace atcsim;

namespace
{
    std::vector<double> normal_sample(Rng &rng, std::size_t n, double mu, double sd)
    {
        std::vector<double> v(n);
        for (auto &x : v)
        {
            x = mu + sd * rng.normal();
        }
        return v;
    }

    double ecdf_at(const std::vector<double> &s, double x)
    {
        return static_cast<double>(std::count_if(s.begin(), s.end(), [&](double v) { return v <= x; })) /
               static_cast<double>(s.size());
    }

    // sup |F_a - F_b| evaluated at every sample point.
    double ks_oracle(const std::vector<double> &a, const std::vector<double> &b)
    {
        double d = 0.0;
        for (const auto *s : {&a, &b})
        {
            for (double x : *s)
            {
                d = std::max(d, std::abs(ecdf_at(a, x) - ecdf_at(b, x)));
            }
        }
        return d;
    }

    double quantile(std::vector<double> sorted, double u)
    {
        const std::size_t n = sorted.size();
        const auto i = std::min(n - 1, static_cast<std::size_t>(std::ceil(u * static_cast<double>(n))) - 1);
        return sorted[i];
    }

    // Integral over u of |Q_a(u) - Q_b(u)| on a midpoint grid.
    double w1_oracle(std::vector<double> a, std::vector<double> b, int steps)
    {
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        double sum = 0.0;
        for (int i = 0; i < steps; ++i)
        {
            const double u = (i + 0.5) / steps;
            sum += std::abs(quantile(a, u) - quantile(b, u));
        }
        return sum / steps;
    }

    Trajectory descent_profile()
    {
        Trajectory t;
        t.phase = Phase::descent;
        t.cleared_fl = 200.0;
        for (int i = 0; i <= 20; ++i)
        {
            TrajectoryPoint p;
            p.t = i;
            p.fl = std::max(200.0, 300.0 - 10.0 * i);
            p.cas_kt = 280.0 - i;
            p.rocd_fpm = p.fl > 200.0 ? -1000.0 : 0.0;
            t.points.push_back(p);
        }
        return t;
    }
}

TEST(Ks, TrivialCases)
{
    const std::vector<double> a{1.0, 2.0, 3.0};
    EXPECT_EQ(ks_distance(a, a), 0.0);
    EXPECT_EQ(ks_distance(a, {10.0, 11.0}), 1.0);
    EXPECT_THROW(ks_distance({}, a), std::invalid_argument);
}

TEST(Ks, MatchesQuadraticOracle)
{
    Rng rng(1);
    for (int k = 0; k < 20; ++k)
    {
        auto a = normal_sample(rng, 100, 0.0, 1.0);
        auto b = normal_sample(rng, 100, 0.3, 1.2);
        // Ties across samples.
        b[0] = a[0];
        b[1] = a[5];
        EXPECT_NEAR(ks_distance(a, b), ks_oracle(a, b), 1e-12);
    }
    auto a = normal_sample(rng, 37, 0.0, 1.0);
    auto b = normal_sample(rng, 113, 0.5, 1.0);
    EXPECT_NEAR(ks_distance(a, b), ks_oracle(a, b), 1e-12);
}

TEST(Wasserstein, TrivialCases)
{
    Rng rng(2);
    const auto a = normal_sample(rng, 200, 5.0, 2.0);
    EXPECT_EQ(wasserstein_1d(a, a), 0.0);
    std::vector<double> shifted = a;
    for (auto &x : shifted)
    {
        x += 3.25;
    }
    EXPECT_NEAR(wasserstein_1d(a, shifted), 3.25, 1e-12);
    EXPECT_THROW(wasserstein_1d(a, {}), std::invalid_argument);
}

TEST(Wasserstein, MatchesQuantileGridOracle)
{
    Rng rng(3);
    for (int k = 0; k < 5; ++k)
    {
        const auto a = normal_sample(rng, 50 + 17 * k, 0.0, 1.0);
        const auto b = normal_sample(rng, 31 + 5 * k, 0.7, 2.0);
        EXPECT_NEAR(wasserstein_1d(a, b), w1_oracle(a, b, 1000000), 1e-4);
    }
}

TEST(Ecdf, StepsAndIqr)
{
    const Ecdf e = ecdf({3.0, 1.0, 2.0, 2.0});
    ASSERT_EQ(e.x.size(), e.f.size());
    EXPECT_EQ(e.x.front(), 1.0);
    EXPECT_EQ(e.f.back(), 1.0);
    std::vector<double> v;
    for (int i = 1; i <= 100; ++i)
    {
        v.push_back(i);
    }
    EXPECT_NEAR(iqr(v), 49.5, 1e-12);
}

TEST(Quantities, Extractors)
{
    const Trajectory t = descent_profile();
    const auto ttl = time_to_level(t);
    ASSERT_TRUE(ttl.has_value());
    EXPECT_EQ(*ttl, 10.0);
    const auto cas = cas_at_fl(t, 255.0);
    ASSERT_TRUE(cas.has_value());
    EXPECT_NEAR(*cas, 275.5, 1e-12);
    EXPECT_FALSE(cas_at_fl(t, 150.0).has_value());
    EXPECT_NEAR(*rocd_at_fl(t, 250.0), -1000.0, 1e-12);
}

TEST(Quantities, ExcludedTrajectoriesAreCounted)
{
    Trajectory shallow = descent_profile();
    for (auto &p : shallow.points)
    {
        p.fl = std::max(p.fl, 260.0);
    }
    const auto report = compare_distributions({descent_profile(), shallow}, {descent_profile()},
                                              standard_quantities({250.0}));
    const QuantityReport *q = report.find("cas_kt_at_fl250");
    ASSERT_NE(q, nullptr);
    EXPECT_EQ(q->n_reference, 1u);
    EXPECT_EQ(q->excluded_reference, 1u);
    EXPECT_EQ(q->ks, 0.0);
}

TEST(Mae, SelfComparisonRatioIsOne)
{
    const auto corpus = synthetic_corpus(planted_cas_bias_truth(15.0), 60, 4);
    FitOptions o;
    o.seed = 1;
    const TrajectoryModel model = fit_model(corpus, builtin_perf("B738"), Phase::descent, o);
    const MaeReport r = mean_mode_mae_experiment(corpus, model, builtin_perf("B738"), &model);
    ASSERT_NE(r.find("cas_kt"), nullptr);
    EXPECT_EQ(r.find("cas_kt")->ratio, 1.0);
    EXPECT_EQ(r.find("rocd_fpm")->ratio, 1.0);
    EXPECT_GT(r.find("cas_kt")->trajectories, 0u);
    EXPECT_EQ(r.find("cas_kt")->trajectories + r.find("cas_kt")->excluded, 60u);
}

TEST(Replication, SelfReplicationAndInvalidRuns)
{
    ExerciseOptions opt;
    opt.duration_s = 600.0;
    ReplicationRun good = synthetic_exercise(11, opt);
    ReplicationRun bad = good;
    bad.name = "bad";
    bad.scenario.actions.push_back({60.0, "GHOST", "ctl", FlyHeading{90.0}});
    const ReplicationReport r = replication_experiment({good, bad}, {});
    ASSERT_EQ(r.runs.size(), 2u);
    EXPECT_TRUE(r.runs[0].valid);
    EXPECT_GT(r.runs[0].samples, 0u);
    EXPECT_EQ(r.runs[0].mean_lateral_nmi, 0.0);
    EXPECT_EQ(r.runs[0].mean_vertical_fl, 0.0);
    EXPECT_FALSE(r.runs[1].valid);
    EXPECT_NE(r.runs[1].reason.find("GHOST"), std::string::npos);
    EXPECT_TRUE(r.pass);
    EXPECT_NE(replication_csv(r).find(good.name), std::string::npos);
}
