#pragma once

#include "atcsim/perf.hpp"
#include "atcsim/synthetic.hpp"
#include "atcsim/trajectory.hpp"
#include "atcsim/trajectory_model.hpp"
#include "atcsim/world.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace atcsim
{
    /// Two-sample Kolmogorov-Smirnov statistic (exact sort-merge). Throws std::invalid_argument on an empty sample.
    double ks_distance(std::vector<double> a, std::vector<double> b);

    /// 1-D Wasserstein-1 distance: the integral of |F_a - F_b|.
    double wasserstein_1d(std::vector<double> a, std::vector<double> b);

    struct Ecdf
    {
        std::vector<double> x;
        std::vector<double> f;
    };

    Ecdf ecdf(std::vector<double> sample);

    /// Interquartile range (linear interpolation between order statistics).
    double iqr(std::vector<double> sample);

    /// Seconds from the first point to the first of three consecutive points within 1 FL of the cleared level
    /// with |ROCD| < 300 ft/min. Bottom of descent or top of climb depending on the phase.
    std::optional<double> time_to_level(const Trajectory &t);

    /// Value of a point field where the profile first crosses `fl` (linear interpolation).
    std::optional<double> cas_at_fl(const Trajectory &t, double fl);
    std::optional<double> rocd_at_fl(const Trajectory &t, double fl);

    struct Quantity
    {
        std::string name;
        std::function<std::optional<double>(const Trajectory &)> extract;
    };

    /// time_to_level plus CAS and ROCD at each probe FL.
    std::vector<Quantity> standard_quantities(const std::vector<double> &probe_fls);

    struct QuantityReport
    {
        std::string name;
        double ks = 0.0;
        double wasserstein = 0.0;
        std::size_t n_reference = 0;
        std::size_t n_model = 0;
        std::size_t excluded_reference = 0;
        std::size_t excluded_model = 0;
        double reference_iqr = 0.0;
        Ecdf ecdf_reference;
        Ecdf ecdf_model;
    };

    struct DistributionReport
    {
        std::vector<QuantityReport> quantities;
        const QuantityReport *find(const std::string &name) const;
    };

    DistributionReport compare_distributions(const std::vector<Trajectory> &reference,
                                             const std::vector<Trajectory> &model, const std::vector<Quantity> &quantities);

    struct FidelityOptions
    {
        std::size_t samples = 0; // 0: one per held-out trajectory
        std::uint64_t seed = 0;
        std::vector<double> probe_fls{300.0, 200.0, 150.0};
    };

    /// Samples profiles from `model`, each starting from a held-out trajectory's initial point on its own
    /// sampled schedule, and compares them with the held-out set.
    DistributionReport fidelity_experiment(const TrajectoryModel &model, const PerfCoefficients &perf,
                                           const std::vector<Trajectory> &held_out, const FidelityOptions &options,
                                           std::vector<Trajectory> *sampled = nullptr);

    /// ECDF curves of one quantity for both samples (long format).
    std::string ecdf_csv(const QuantityReport &q);
    std::string distribution_summary_csv(const DistributionReport &r);

    struct MaeRow
    {
        std::string aircraft_type;
        Phase phase = Phase::descent;
        std::string quantity;
        double mae_model = 0.0;
        double mae_baseline = 0.0;
        double ratio = 0.0;
        std::size_t trajectories = 0;
        std::size_t excluded = 0;
    };

    struct MaeReport
    {
        std::vector<MaeRow> rows;
        const MaeRow *find(const std::string &quantity) const;
    };

    inline constexpr double kMinFutureS = 60.0;

    /// Initializes from each recorded trajectory's first point, rolls out the model's mean mode and the
    /// baseline (uncorrected, or `baseline_model`'s mean mode when given) under the recorded cleared level,
    /// and averages |error| in CAS and ROCD over every recorded second.
    MaeReport mean_mode_mae_experiment(const std::vector<Trajectory> &recorded, const TrajectoryModel &model,
                                       const PerfCoefficients &perf, const TrajectoryModel *baseline_model = nullptr);

    std::string mae_csv(const MaeReport &r);

    inline constexpr double kReplicationLateralNmi = 2.5;
    inline constexpr double kReplicationVerticalFl = 5.0;

    struct ReplicationResult
    {
        std::string name;
        bool valid = true;
        std::string reason;
        double mean_lateral_nmi = 0.0;
        double mean_vertical_fl = 0.0;
        std::size_t samples = 0;
        bool pass = false;
    };

    struct ReplicationReport
    {
        std::vector<ReplicationResult> runs;
        double mean_lateral_nmi = 0.0;
        double mean_vertical_fl = 0.0;
        bool pass = false;
    };

    /// Re-simulates each run with its logged clearances and compares against the reference at every
    /// reference sample time.
    ReplicationReport replication_experiment(const std::vector<ReplicationRun> &runs, const ModelLibrary &models,
                                             const WorldConfig &config = {});

    /// One row per exercise: mean lateral and vertical error against the pass thresholds.
    std::string replication_csv(const ReplicationReport &r);

    /// Reference values reported for licensed operational data (descending B738). Informational only:
    /// they cannot be reproduced on synthetic fixtures and are never asserted.
    struct OperationalReference
    {
        static constexpr double ks_time_to_bottom = 0.158;
        static constexpr double w1_time_to_bottom_s = 31.8;
        static constexpr double mae_ratio_cas = 0.73;
        static constexpr double mae_ratio_rocd = 0.56;
    };
}
