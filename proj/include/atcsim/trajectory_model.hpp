#pragma once

#include "atcsim/airspace.hpp"
#include "atcsim/fpca.hpp"
#include "atcsim/gmm.hpp"
#include "atcsim/perf.hpp"
#include "atcsim/trajectory.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace atcsim
{
    /// Data-driven correction applied on top of the base performance terms along one climb or descent.
    /// Force corrections are stored as deviations d; the applied factor is 1 + d.
    struct CorrectionSample
    {
        std::vector<double> fl_grid;
        std::vector<double> delta_cas;  // kt
        std::vector<double> thrust_mult;
        std::vector<double> drag_mult;
        std::uint64_t seed_tag = 0;

        bool empty() const noexcept { return fl_grid.empty(); }
        double delta_cas_at(double fl) const;
        double thrust_factor_at(double fl) const;
        double drag_factor_at(double fl) const;

        friend bool operator==(const CorrectionSample &, const CorrectionSample &) = default;
    };

    inline constexpr double kMinForceFactor = 0.2;
    inline constexpr double kMaxForceFactor = 3.0;
    inline constexpr double kMinCasKt = 120.0;
    inline constexpr double kMaxCasKt = 370.0;

    struct CruisePmfEntry
    {
        CruiseSpeed speed;
        double probability = 0.0;
    };

    struct FitMetadata
    {
        std::size_t corpus_size = 0;
        std::uint64_t seed = 0;
        int gmm_iterations = 0;
        bool gmm_converged = false;
        bool gmm_regularised = false;
    };

    /// Generative correction model for one (aircraft type, phase).
    ///
    /// The three bases share an FL grid. The mixture is fitted to scores divided by
    /// `score_scale` (the square root of each FPCA eigenvalue, or 0 for a zero-variance
    /// direction), so raw scores are score_scale (elementwise) times a mixture draw.
    struct TrajectoryModel
    {
        std::string aircraft_type;
        Phase phase = Phase::descent;
        FunctionalBasis cas;
        FunctionalBasis thrust;
        FunctionalBasis drag;
        Eigen::VectorXd score_scale;
        ScoreGMM score_gmm;
        std::vector<CruisePmfEntry> cruise_pmf;
        FitMetadata metadata;

        void validate() const;
        Eigen::Index score_dimension() const noexcept { return cas.components() + thrust.components() + drag.components(); }

        /// Mixture mean / covariance expressed in raw score units.
        Eigen::VectorXd raw_score_mean() const;
        Eigen::MatrixXd raw_score_covariance() const;

        /// Reconstructs and clips the three curves from a raw score vector.
        CorrectionSample correction_from_scores(const Eigen::VectorXd &raw_scores, std::uint64_t seed_tag,
                                                const PerfCoefficients *coeffs = nullptr) const;
    };

    struct FitOptions
    {
        /// Retained components per quantity; 0 selects the smallest K explaining 95% of variance.
        int k_components = 0;
        int gmm_components = 2;
        std::uint64_t seed = 0;
        int grid_points = 41;
        std::size_t min_corpus = 30;
        double min_span_fl = 50.0;
    };

    /// Corpus curves resampled onto a common FL grid, one row per trajectory.
    struct ResampledCorpus
    {
        std::vector<double> fl_grid;
        Eigen::MatrixXd delta_cas;
        Eigen::MatrixXd thrust_dev;
        Eigen::MatrixXd drag_dev;
        std::vector<CruiseSpeed> cruise;
    };

    /// Extracts CAS deltas and implied thrust/drag deviations (from the energy balance) on a common grid.
    ResampledCorpus resample_corpus(const std::vector<Trajectory> &corpus, const PerfCoefficients &coeffs,
                                    Phase phase, const FitOptions &options);

    TrajectoryModel fit_model_from_curves(const ResampledCorpus &curves, const std::string &aircraft_type, Phase phase,
                                          const FitOptions &options);

    TrajectoryModel fit_model(const std::vector<Trajectory> &corpus, const PerfCoefficients &coeffs, Phase phase,
                              const FitOptions &options);

    CorrectionSample sample_correction(const TrajectoryModel &model, std::uint64_t seed,
                                       const PerfCoefficients *coeffs = nullptr);
    CorrectionSample mean_mode_correction(const TrajectoryModel &model, const PerfCoefficients *coeffs = nullptr);

    struct CruiseDraw
    {
        CruiseSpeed speed;
        bool fallback = false;
    };

    /// Categorical draw from the cruise PMF; falls back to (base CAS at FL350, base Mach) when empty.
    CruiseDraw sample_cruise_speed(const TrajectoryModel &model, std::uint64_t seed, const PerfCoefficients &coeffs);

    void save_model(const std::string &path, const TrajectoryModel &model);
    TrajectoryModel load_model(const std::string &path);
}
