#pragma once

#include "atcsim/perf.hpp"
#include "atcsim/scenario.hpp"
#include "atcsim/trajectory.hpp"
#include "atcsim/trajectory_model.hpp"
#include "atcsim/world.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace atcsim
{
    /// One mixture component of the known-truth correction generator. Per trajectory:
    /// delta_cas(fl) = offset + slope * (fl - 250) / 250, constant thrust and drag deviations,
    /// each parameter drawn independently from a normal.
    struct TruthComponent
    {
        double weight = 1.0;
        double cas_offset_mean = 0.0;
        double cas_offset_sd = 0.0;
        double cas_slope_mean = 0.0;
        double cas_slope_sd = 0.0;
        double thrust_dev_mean = 0.0;
        double thrust_dev_sd = 0.0;
        double drag_dev_mean = 0.0;
        double drag_dev_sd = 0.0;
    };

    struct TruthSpec
    {
        std::string aircraft_type = "B738";
        Phase phase = Phase::descent;
        double start_fl = 350.0;
        double end_fl = 100.0;
        LatLon start{52.0, -1.0};
        double heading_deg = 90.0;
        std::vector<TruthComponent> components;
    };

    /// Two well-separated descent populations (the known mixture of the self-consistency experiment).
    TruthSpec two_component_descent_truth();

    /// Baseline descents flown `bias_kt` above the base CAS schedule with small per-flight scatter.
    TruthSpec planted_cas_bias_truth(double bias_kt = 15.0);

    /// Draws the per-flight correction for trajectory `index`.
    CorrectionSample truth_correction(const TruthSpec &spec, std::uint64_t seed, std::size_t index);

    /// Integrates `count` profiles (1 s samples) starting on their own schedule at start_fl.
    std::vector<Trajectory> synthetic_corpus(const TruthSpec &spec, std::size_t count, std::uint64_t seed,
                                             const PerfCoefficients *perf = nullptr);

    /// Recorded positions per callsign, one sample per snapshot record.
    std::map<std::string, std::vector<TrackSample>> tracks_from_log(const EventLog &log);

    /// A replication exercise: a scenario with its clearance stream and the reference positions at radar cadence.
    struct ReplicationRun
    {
        std::string name;
        ScenarioSpec scenario;
        std::map<std::string, std::vector<TrackSample>> reference;
    };

    struct ExerciseOptions
    {
        double duration_s = 1200.0;
        double density_per_10min = 3.0;
        int clearances_per_flight = 3;
        /// Sub-step of the kernel that produces the reference tracks.
        double reference_substep_s = 1.0;
        PredictMode correction_mode = PredictMode::sampled;
    };

    /// Generated traffic plus a random clearance stream; the reference comes from running the kernel.
    ReplicationRun synthetic_exercise(std::uint64_t seed, const ExerciseOptions &options, const ModelLibrary &models = {});
}
