#pragma once

#include "atcsim/aircraft.hpp"
#include "atcsim/event_log.hpp"
#include "atcsim/metrics.hpp"
#include "atcsim/rng.hpp"
#include "atcsim/scenario.hpp"
#include "atcsim/tem.hpp"
#include "atcsim/trajectory_model.hpp"

#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace atcsim
{
    /// Fitted correction models keyed by (aircraft type, phase).
    class ModelLibrary
    {
    public:
        void add(TrajectoryModel model);
        const TrajectoryModel *find(const std::string &aircraft_type, Phase phase) const;
        bool empty() const noexcept { return m_models.empty(); }
        std::size_t size() const noexcept { return m_models.size(); }

    private:
        std::map<std::pair<std::string, Phase>, TrajectoryModel> m_models;
    };

    /// Loads every model referenced by the scenario; relative paths resolve against base_dir.
    ModelLibrary load_models(const ScenarioSpec &spec, const std::string &base_dir);

    struct WorldConfig
    {
        double tick_s = 6.0;
        double substep_s = 1.0;
        double coordination_fl_tolerance = 3.0;
        double coordination_nmi_tolerance = 5.0;
        RewardWeights reward;
        /// How simulated aircraft draw their per-flight corrections.
        PredictMode correction_mode = PredictMode::sampled;
        /// Issue the scenario's scripted actions automatically.
        bool run_script = true;
        /// Write a "snapshot" record every tick.
        bool log_snapshots = true;
    };

    nlohmann::json to_json(const WorldConfig &c);
    WorldConfig world_config_from_json(const nlohmann::json &j);

    struct IssueResult
    {
        bool accepted = false;
        std::string reason;
        double execute_at = 0.0;
        std::uint64_t seq = 0;
    };

    enum class CoordinationStatus
    {
        standing,
        tactical,
        satisfied,
        violated,
    };

    std::string to_string(CoordinationStatus s);

    struct CoordinationState
    {
        CoordinationSpec spec;
        CoordinationStatus status = CoordinationStatus::standing;
        double fl_deviation = 0.0;
        std::optional<double> point_distance_nmi;
    };

    /// Satisfied iff the crossing level is within fl_tolerance of the agreed level and, when a transfer
    /// point is agreed, the crossing lies within nmi_tolerance of it.
    bool coordination_satisfied(const CoordinationSpec &c, double fl, LatLon position, const AirspaceDefinition &airspace,
                                double fl_tolerance, double nmi_tolerance);

    struct AircraftRecord
    {
        AircraftState state;
        const PerfCoefficients *perf = nullptr;
        CorrectionSample climb;
        CorrectionSample descent;
        bool quarantined = false;
        /// Has been inside the airspace at least once.
        bool entered = false;
        Rng latency_rng{0};
        AircraftMetrics metrics;
        /// Recorded track driving a replay aircraft; null once converted or for scenario flights.
        const RecordedTrack *track = nullptr;
        std::size_t next_transfer = 0;
        std::vector<LatLon> plan_polyline;
        double last_route_position = 0.0;
    };

    /// Everything a pilot step needs besides the aircraft itself.
    struct PilotContext
    {
        const AirspaceDefinition *airspace = nullptr;
        const PerfCoefficients *perf = nullptr;
        const CorrectionSample *climb = nullptr;
        const CorrectionSample *descent = nullptr;
        const WindGrid *wind = nullptr;
        double substep_s = 1.0;
    };

    struct PilotEvents
    {
        bool top_of_descent = false;
        std::vector<std::string> sequenced;
        StepDiagnostics diagnostics;
    };

    /// Pilot agent plus one integrator step: waypoint sequencing, wind-corrected heading, the when-ready
    /// descent trigger, then tem_step with the phase's correction.
    AircraftState pilot_step(const AircraftState &s, const PilotContext &ctx, double dt, PilotEvents *events = nullptr);

    /// Along-route distance from the aircraft to the point at or abeam `waypoint`. Negative once passed.
    /// Abeam is the foot of the perpendicular from the waypoint onto the leg being flown (or onto the
    /// held heading).
    double distance_to_abeam(const AircraftState &s, const AirspaceDefinition &airspace, const std::string &waypoint);

    struct TopOfDescent
    {
        bool feasible = false;
        /// Start descent once distance_to_abeam falls to this value.
        double start_distance_nmi = 0.0;
        /// Distance remaining at level-off with an immediate descent start.
        double immediate_margin_nmi = 0.0;
        LatLon position;
    };

    inline constexpr double kTodToleranceNmi = 0.1;

    /// Latest descent start (bisection on the start distance) such that the rollout levels at target_fl at
    /// or before the abeam point of `waypoint`. `s` carries the current lateral and speed intent.
    TopOfDescent compute_top_of_descent(const AircraftState &s, double target_fl, const std::string &waypoint,
                                        const PilotContext &ctx);

    /// Remaining distance to the abeam point at level-off for a descent that starts at `start_distance_nmi`
    /// (infinity means now). Negative infinity when the rollout never levels.
    double descent_level_margin(const AircraftState &s, double target_fl, const std::string &waypoint,
                                double start_distance_nmi, const PilotContext &ctx, LatLon *start_position = nullptr);

    class World
    {
    public:
        World(ScenarioSpec spec, ModelLibrary models = {}, WorldConfig config = {});

        World(const World &) = delete;
        World &operator=(const World &) = delete;

        double time() const noexcept { return static_cast<double>(m_tick) * m_config.tick_s; }
        std::int64_t tick_index() const noexcept { return m_tick; }
        bool done() const noexcept { return time() >= m_spec.duration_s - 1e-9; }
        bool finished() const noexcept { return m_finished; }

        const ScenarioSpec &scenario() const noexcept { return m_spec; }
        const WorldConfig &config() const noexcept { return m_config; }
        const EventLog &log() const noexcept { return m_log; }
        const std::map<std::string, AircraftRecord> &aircraft() const noexcept { return m_aircraft; }
        const AircraftRecord *find(const std::string &callsign) const;
        const std::vector<CoordinationState> &coordinations() const noexcept { return m_coordinations; }
        const WindField &forecast_wind() const noexcept { return m_forecast; }
        const BandboxConfig &active_bandbox() const { return m_spec.airspace.bandbox_at(time()); }

        /// Validates now and enqueues with the pilot latency. Every attempt is logged.
        IssueResult issue_clearance(const std::string &callsign, const Clearance &clearance, const std::string &issuer);

        /// Advances one radar interval.
        void tick();
        /// Closes open events and appends the metrics summary. Idempotent.
        void finish();

        /// Appends an externally originated record (gateway audit entries) at the current time.
        std::uint64_t annotate(const std::string &type, EventLog::Record fields);

        /// Hash of every aircraft's dynamic state, pending queue and the clock.
        std::uint64_t state_hash() const;

        std::vector<TrafficPoint> traffic() const;
        const MetricsReport &report() const noexcept { return m_report; }
        const SeparationMonitor &separation() const noexcept { return m_monitor; }
        double last_reward() const noexcept { return m_report.reward_trace.empty() ? 0.0 : m_report.reward_trace.back(); }

    private:
        IssueResult reject(const std::string &callsign, const Clearance &c, const std::string &issuer,
                           const std::string &reason, const std::string &origin);
        IssueResult issue(const std::string &callsign, const Clearance &c, const std::string &issuer,
                          const std::string &origin);
        void spawn_due();
        void execute_due(AircraftRecord &a, double t);
        void execute(AircraftRecord &a, const PendingClearance &p, double t);
        void handover(AircraftRecord &a, const std::string &group, double t);
        void convert_to_simulated(AircraftRecord &a, double t);
        void advance_replay(AircraftRecord &a, double t1);
        void advance_simulated(AircraftRecord &a, double t0);
        void update_groups(double t);
        void run_metrics(double t);
        void remove(const std::string &callsign, double t, const std::string &reason);
        void finalise_efficiency(const AircraftRecord &a);
        PilotContext context_for(const AircraftRecord &a, double t) const;
        const PerfCoefficients &perf_for(const std::string &type) const;
        AircraftRecord make_record(const std::string &callsign, const FlightPlan &plan);
        void sample_corrections(AircraftRecord &a);
        nlohmann::ordered_json snapshot_json() const;

        ScenarioSpec m_spec;
        ModelLibrary m_models;
        WorldConfig m_config;
        WindField m_forecast;
        WindField m_truth;
        EventLog m_log;
        std::int64_t m_tick = 0;
        bool m_finished = false;
        std::uint64_t m_next_clearance_seq = 0;
        std::map<std::string, AircraftRecord> m_aircraft;
        std::vector<bool> m_flight_spawned;
        std::vector<bool> m_track_spawned;
        std::size_t m_next_action = 0;
        std::vector<CoordinationState> m_coordinations;
        SeparationMonitor m_monitor;
        MetricsReport m_report;
        double m_3di_sum = 0.0;
        int m_3di_count = 0;
        int m_clearances_this_tick = 0;
        int m_coordinations_this_tick = 0;
    };

    struct RunStats
    {
        std::int64_t ticks = 0;
        double sim_seconds = 0.0;
        double wall_seconds = 0.0;
        /// Ticks whose compute overran the pacing budget (diagnostic only, never in the EventLog).
        std::vector<std::pair<std::int64_t, double>> lag;

        double speedup() const { return wall_seconds > 0.0 ? sim_seconds / wall_seconds : 0.0; }
    };

    /// Ticks to the scenario end. speed_factor <= 0 runs unpaced; otherwise each tick is paced to
    /// tick_s / speed_factor of wall time.
    RunStats run(World &world, double speed_factor = 0.0);

    /// Re-runs a scenario while re-issuing the externally issued clearances recorded in `log`
    /// at their logged tick times. The result should equal `log` record for record.
    EventLog replay_log(const ScenarioSpec &spec, const ModelLibrary &models, const EventLog &log);
}
