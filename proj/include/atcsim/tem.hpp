#pragma once

#include "atcsim/aircraft.hpp"
#include "atcsim/atmosphere.hpp"
#include "atcsim/perf.hpp"
#include "atcsim/trajectory.hpp"
#include "atcsim/trajectory_model.hpp"

#include <stdexcept>

namespace atcsim
{
    /// A step produced a non-finite state component; carries the state before the step.
    class IntegrationFault : public std::runtime_error
    {
    public:
        IntegrationFault(const std::string &what, AircraftState pre_step)
            : std::runtime_error(what), m_pre_step(std::move(pre_step))
        {
        }
        const AircraftState &pre_step() const noexcept { return m_pre_step; }

    private:
        AircraftState m_pre_step;
    };

    inline constexpr double kMaxLongitudinalAccel = 0.6096; // m/s^2 (2 ft/s^2)
    inline constexpr double kOnScheduleToleranceKt = 0.5;
    inline constexpr double kStandardTurnRate = 3.0; // deg/s
    inline constexpr double kMaxBankDeg = 25.0;
    inline constexpr double kCommandedRocdEsf = 0.3;

    struct StepDiagnostics
    {
        /// ROCD opposed the vertical mode (e.g. a climb with T < D).
        bool performance_limited = false;
        bool levelled_off = false;
        /// Mean thrust over the step, N. Energy-inverted for level and commanded-ROCD flight.
        double thrust_n = 0.0;
        int substeps = 0;
    };

    struct SpeedTarget
    {
        double cas_kt = 0.0;
        double mach = 0.0;
        bool mach_governed = false;

        double tas_ms(double altitude_m) const;
    };

    /// Speed the aircraft is tracking at `fl` given its intent and correction.
    SpeedTarget speed_target(const AircraftState &s, const CorrectionSample &correction, const PerfCoefficients &p,
                             double fl);

    /// Closed-form energy share factors used as references for the schedule-derived ESF.
    double esf_constant_cas(double mach, double altitude_m);
    double esf_constant_mach(double mach, double altitude_m);

    /// Turn rate (deg/s) at a given TAS: standard rate, capped by the bank limit.
    double turn_rate_deg_s(double tas_kt);

    /// One explicit-Euler step of the total-energy model. `wind` may be null (calm).
    AircraftState tem_step(const AircraftState &s, const CorrectionSample &correction, const PerfCoefficients &p,
                           const WindGrid *wind, double dt, StepDiagnostics *diag = nullptr);

    enum class PredictMode
    {
        baseline,
        mean,
        sampled,
    };

    struct PredictOptions
    {
        PredictMode mode = PredictMode::mean;
        std::uint64_t seed = 0;
        double dt = 1.0;
        double horizon_s = 3600.0;
        /// Time kept after level-off.
        double post_level_s = 30.0;
    };

    /// Integrates the vertical profile of `initial` (intent already applied) until level-off or the horizon,
    /// sampled every second. `model` may be null only for the baseline mode.
    Trajectory predict_profile(const AircraftState &initial, const TrajectoryModel *model, const PerfCoefficients &p,
                               const WindGrid *wind, const PredictOptions &options);

    /// predict_profile with an explicit correction.
    Trajectory rollout_profile(const AircraftState &initial, const CorrectionSample &correction, const PerfCoefficients &p,
                               const WindGrid *wind, const PredictOptions &options);

    /// Heading-hold state at a trajectory point, climbing or descending toward cleared_fl (level when equal).
    AircraftState profile_initial_state(const TrajectoryPoint &point, double cleared_fl, const std::string &callsign = "");

    /// Sets the speeds to the scheduled target for the state's intent and correction.
    void put_on_schedule(AircraftState &s, const CorrectionSample &correction, const PerfCoefficients &p);

    CorrectionSample correction_for(const TrajectoryModel *model, const PerfCoefficients &p, PredictMode mode,
                                    std::uint64_t seed);

    TrajectoryPoint to_point(const AircraftState &s, double t);
}
