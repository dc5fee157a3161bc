#include "atcsim/errors.hpp"
#include "atcsim/json_io.hpp"
#include "atcsim/synthetic.hpp"
#include "atcsim/tem.hpp"
#include "atcsim/trajectory_model.hpp"
#include "atcsim/validation.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

using namespace atcsim;

namespace
{
    const PerfCoefficients &b738() { return builtin_perf("B738"); }

    TruthSpec constant_truth()
    {
        TruthSpec t;
        t.components = {{1.0, 8.0, 0.0, -4.0, 0.0, 0.05, 0.0, -0.03, 0.0}};
        return t;
    }

    const TrajectoryModel &mixture_model()
    {
        static const TrajectoryModel m = [] {
            FitOptions o;
            o.seed = 2;
            return fit_model(synthetic_corpus(two_component_descent_truth(), 200, 31), b738(), Phase::descent, o);
        }();
        return m;
    }

    AircraftState descent_start(const TrajectoryModel &model)
    {
        TrajectoryPoint p;
        p.fl = 350.0;
        p.position = {52.0, -1.0};
        p.heading_deg = 90.0;
        p.tas_kt = cas_to_tas(b738().base_cas_at(350.0), 350.0);
        AircraftState s = profile_initial_state(p, 100.0, "T1");
        s.plan.aircraft_type = model.aircraft_type;
        put_on_schedule(s, {}, b738());
        return s;
    }
}

TEST(TrajectoryModel, CorpusTooSmall)
{
    const auto corpus = synthetic_corpus(two_component_descent_truth(), 10, 1);
    EXPECT_THROW(fit_model(corpus, b738(), Phase::descent, {}), FitError);
}

TEST(TrajectoryModel, ZeroVarianceModelReproducesTheProfile)
{
    const auto corpus = synthetic_corpus(constant_truth(), 40, 3);
    const TrajectoryModel model = fit_model(corpus, b738(), Phase::descent, {});
    EXPECT_EQ(model.score_scale.cwiseAbs().maxCoeff(), 0.0);

    const CorrectionSample mean = mean_mode_correction(model, &b738());
    EXPECT_EQ(sample_correction(model, 1, &b738()).delta_cas, mean.delta_cas);
    EXPECT_EQ(sample_correction(model, 99, &b738()).thrust_mult, mean.thrust_mult);
    // Thrust and drag are not separately identifiable from one energy residual, so only the CAS
    // offset is compared pointwise, and only below the crossover where the CAS schedule governs.
    // The profile comparison below covers the rest.
    const double crossover = crossover_fl(b738().base_cas_at(330.0) + 6.0, b738().base_mach);
    std::size_t compared = 0;
    for (std::size_t i = 0; i < mean.fl_grid.size(); ++i)
    {
        if (mean.fl_grid[i] > crossover - 10.0)
        {
            continue;
        }
        ++compared;
        EXPECT_NEAR(mean.delta_cas[i], 8.0 - 4.0 * (mean.fl_grid[i] - 250.0) / 250.0, 0.05) << mean.fl_grid[i];
    }
    EXPECT_GT(compared, 20u);

    const AircraftState s0 = descent_start(model);
    PredictOptions po;
    po.mode = PredictMode::mean;
    const Trajectory ref = predict_profile(s0, &model, b738(), nullptr, po);
    po.mode = PredictMode::sampled;
    for (std::uint64_t seed = 0; seed < 500; ++seed)
    {
        po.seed = seed;
        const Trajectory t = predict_profile(s0, &model, b738(), nullptr, po);
        ASSERT_EQ(t.points.size(), ref.points.size());
        ASSERT_EQ(t.points.back().fl, ref.points.back().fl);
        ASSERT_EQ(t.points.back().cas_kt, ref.points.back().cas_kt);
    }

    // Sampled profile against its single-profile corpus.
    const auto report = compare_distributions(corpus, {ref}, standard_quantities({300.0, 200.0}));
    const QuantityReport *q = report.find("time_to_level_s");
    ASSERT_NE(q, nullptr);
    EXPECT_LE(q->wasserstein, 2.0);
}

TEST(TrajectoryModel, MixtureMeansRecoveredFromKnownScores)
{
    const int m = 41;
    const int n = 2000;
    ResampledCorpus rc;
    Eigen::VectorXd mu(m), b1(m), b2(m);
    for (int i = 0; i < m; ++i)
    {
        const double x = i / double(m - 1);
        rc.fl_grid.push_back(100.0 + 250.0 * x);
        mu(i) = 2.0 + 4.0 * x;
        b1(i) = 1.0;
        b2(i) = x - 0.5;
    }
    b1.normalize();
    b2 = (b2 - b2.dot(b1) * b1).normalized();
    const Eigen::Vector2d truth_means[2] = {{-40.0, 10.0}, {30.0, -15.0}};
    const double truth_weights[2] = {0.4, 0.6};

    Rng rng(77);
    rc.delta_cas.resize(n, m);
    rc.thrust_dev.resize(n, m);
    rc.drag_dev.resize(n, m);
    for (int r = 0; r < n; ++r)
    {
        const int c = rng.uniform01() < truth_weights[0] ? 0 : 1;
        const Eigen::Vector2d s = truth_means[c] + Eigen::Vector2d(4.0 * rng.normal(), 3.0 * rng.normal());
        rc.delta_cas.row(r) = (mu + s(0) * b1 + s(1) * b2).transpose();
        rc.thrust_dev.row(r) = Eigen::RowVectorXd::Constant(m, 0.02 * rng.normal());
        rc.drag_dev.row(r) = Eigen::RowVectorXd::Constant(m, 0.02 * rng.normal());
        rc.cruise.push_back({280.0, 0.78});
    }
    FitOptions o;
    o.seed = 5;
    const TrajectoryModel model = fit_model_from_curves(rc, "B738", Phase::descent, o);
    ASSERT_EQ(model.score_gmm.components(), 2);

    // Component mean curves, reconstructed from the fitted mixture, against the generating ones.
    std::vector<Eigen::VectorXd> fitted;
    for (int k = 0; k < 2; ++k)
    {
        const Eigen::VectorXd raw = model.score_scale.cwiseProduct(model.score_gmm.means[k]);
        fitted.push_back(model.cas.reconstruct(raw.head(model.cas.components())));
    }
    const Eigen::VectorXd overall = mu + (truth_weights[0] * truth_means[0](0) + truth_weights[1] * truth_means[1](0)) * b1 +
                                    (truth_weights[0] * truth_means[0](1) + truth_weights[1] * truth_means[1](1)) * b2;
    double best = 1e300;
    for (int perm = 0; perm < 2; ++perm)
    {
        double worst = 0.0;
        for (int c = 0; c < 2; ++c)
        {
            const Eigen::VectorXd truth = mu + truth_means[c](0) * b1 + truth_means[c](1) * b2;
            const int k = perm == 0 ? c : 1 - c;
            worst = std::max(worst, (fitted[k] - truth).norm() / (truth - overall).norm());
        }
        best = std::min(best, worst);
    }
    EXPECT_LT(best, 0.10);
    ASSERT_EQ(model.cruise_pmf.size(), 1u);
    EXPECT_EQ(model.cruise_pmf[0].probability, 1.0);
}

TEST(TrajectoryModel, SamplingIsSeeded)
{
    const auto &model = mixture_model();
    EXPECT_EQ(sample_correction(model, 12, &b738()), sample_correction(model, 12, &b738()));
    EXPECT_NE(sample_correction(model, 12, &b738()).delta_cas, sample_correction(model, 13, &b738()).delta_cas);
}

TEST(TrajectoryModel, MeanModeScores)
{
    TrajectoryModel model = mixture_model();
    const Eigen::Index d = model.score_dimension();
    Eigen::VectorXd m = Eigen::VectorXd::LinSpaced(d, 0.5, 1.5);

    model.score_gmm.weights = {1.0};
    model.score_gmm.means = {m};
    model.score_gmm.covariances = {Eigen::MatrixXd::Identity(d, d)};
    const auto single = mean_mode_correction(model);
    const auto expected = model.correction_from_scores(model.score_scale.cwiseProduct(m), 0);
    EXPECT_EQ(single.delta_cas, expected.delta_cas);

    model.score_gmm.weights = {0.5, 0.5};
    model.score_gmm.means = {m, -m};
    model.score_gmm.covariances = {Eigen::MatrixXd::Identity(d, d), Eigen::MatrixXd::Identity(d, d)};
    const auto symmetric = mean_mode_correction(model);
    for (std::size_t i = 0; i < symmetric.fl_grid.size(); ++i)
    {
        EXPECT_NEAR(symmetric.delta_cas[i], model.cas.mean_curve(static_cast<Eigen::Index>(i)), 1e-12);
    }
}

TEST(TrajectoryModel, CruisePmf)
{
    TrajectoryModel model = mixture_model();
    model.cruise_pmf = {{{270.0, 0.76}, 0.5}, {{280.0, 0.78}, 0.3}, {{290.0, 0.80}, 0.2}};
    int counts[3] = {0, 0, 0};
    const int n = 10000;
    for (int i = 0; i < n; ++i)
    {
        const auto d = sample_cruise_speed(model, static_cast<std::uint64_t>(i), b738());
        ASSERT_FALSE(d.fallback);
        counts[static_cast<int>((d.speed.cas_kt - 270.0) / 10.0 + 0.5)]++;
    }
    EXPECT_NEAR(counts[0] / double(n), 0.5, 0.02);
    EXPECT_NEAR(counts[1] / double(n), 0.3, 0.02);
    EXPECT_NEAR(counts[2] / double(n), 0.2, 0.02);
    EXPECT_EQ(sample_cruise_speed(model, 4, b738()).speed, sample_cruise_speed(model, 4, b738()).speed);

    model.cruise_pmf = {{{301.0, 0.79}, 1.0}};
    for (int i = 0; i < 50; ++i)
    {
        EXPECT_EQ(sample_cruise_speed(model, static_cast<std::uint64_t>(i), b738()).speed, (CruiseSpeed{301.0, 0.79}));
    }

    model.cruise_pmf.clear();
    const auto fb = sample_cruise_speed(model, 1, b738());
    EXPECT_TRUE(fb.fallback);
    EXPECT_EQ(fb.speed.cas_kt, b738().base_cas_at(350.0));
    EXPECT_EQ(fb.speed.mach, b738().base_mach);
}

TEST(TrajectoryModel, SaveLoadRoundTrip)
{
    const auto path = std::filesystem::temp_directory_path() / "atcsim_model_roundtrip.json";
    save_model(path.string(), mixture_model());
    const TrajectoryModel back = load_model(path.string());
    std::filesystem::remove(path);
    EXPECT_EQ(to_json(back).dump(), to_json(mixture_model()).dump());
    EXPECT_EQ(sample_correction(back, 8, &b738()), sample_correction(mixture_model(), 8, &b738()));
}

TEST(TrajectoryModel, SmallSampleMatchesLargeReference)
{
    const auto &model = mixture_model();
    const AircraftState s0 = descent_start(model);
    PredictOptions po;
    po.mode = PredictMode::sampled;
    auto sample = [&](std::uint64_t base, int n) {
        std::vector<double> out;
        for (int i = 0; i < n; ++i)
        {
            po.seed = derive_seed(base, std::to_string(i));
            if (auto v = time_to_level(predict_profile(s0, &model, b738(), nullptr, po)))
            {
                out.push_back(*v);
            }
        }
        return out;
    };
    const auto small = sample(1, 500);
    const auto large = sample(2, 20000);
    EXPECT_EQ(small.size(), 500u);
    EXPECT_LT(ks_distance(small, large), 0.08);
}
