#pragma once

#include "atcsim/airspace.hpp"
#include "atcsim/atmosphere.hpp"
#include "atcsim/clearance.hpp"
#include "atcsim/perf.hpp"
#include "atcsim/trajectory.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace atcsim
{
    inline constexpr const char *kScenarioSchema = "atcsim-scenario";
    inline constexpr int kScenarioVersion = 1;

    enum class ScenarioErrorCode
    {
        parse,     // E_PARSE: not JSON
        schema,    // E_SCHEMA: wrong schema tag or version
        field,     // E_FIELD: missing / mistyped / out-of-range field
        reference, // E_REF: unresolved waypoint, group, type, file
        invariant, // E_INVARIANT: cross-field invariant violated
        generation // E_GENERATION: template impossible in the sector
    };

    std::string to_string(ScenarioErrorCode code);

    /// Rejection with a machine-readable code and a location (JSON pointer, or "line N" for parse errors).
    class ScenarioError : public std::runtime_error
    {
    public:
        ScenarioError(ScenarioErrorCode code, std::string location, const std::string &message);
        ScenarioErrorCode code() const noexcept { return m_code; }
        const std::string &location() const noexcept { return m_location; }

    private:
        ScenarioErrorCode m_code;
        std::string m_location;
    };

    enum class LatencyKind
    {
        uniform,
        heavy_tailed,
    };

    /// Pilot response delay: max(0, mean + jitter * u), u ~ U[-1, 1]. The heavy-tailed variant adds an
    /// exponential excess (mean tail_mean_s) with probability tail_probability.
    struct LatencyModel
    {
        double mean_s = 8.0;
        double jitter_s = 4.0;
        LatencyKind kind = LatencyKind::uniform;
        double tail_probability = 0.05;
        double tail_mean_s = 30.0;
    };

    /// A simulated flight entering the world at entry_time_s.
    struct FlightEntry
    {
        FlightPlan plan;
        double entry_time_s = 0.0;
        LatLon position;
        double fl = 0.0;
        /// Defaults to the course to the first route waypoint.
        std::optional<double> heading_deg;
        /// Defaults to fl (level).
        std::optional<double> cleared_fl;
    };

    struct TrackSample
    {
        double t = 0.0;
        LatLon position;
        double fl = 0.0;
        double ground_speed_kt = 0.0;
        double heading_deg = 0.0;

        friend bool operator==(const TrackSample &, const TrackSample &) = default;
    };

    enum class TrackFlagKind
    {
        gap,
        fl_jump,
    };

    /// Quality mark on the interval between samples[index - 1] and samples[index].
    struct TrackFlag
    {
        TrackFlagKind kind = TrackFlagKind::gap;
        std::size_t index = 0;
        double magnitude = 0.0;

        friend bool operator==(const TrackFlag &, const TrackFlag &) = default;
    };

    struct TransferEvent
    {
        double t = 0.0;
        std::string to_group;
    };

    struct RecordedTrack
    {
        std::string callsign;
        std::vector<TrackSample> samples;
        FlightPlan plan;
        std::vector<TransferEvent> transfers;
        std::vector<TrackFlag> flags;
    };

    enum class CoordinationKind
    {
        standing,
        tactical,
    };

    struct CoordinationSpec
    {
        std::string callsign;
        std::string from_group;
        std::string to_group;
        double transfer_fl = 0.0;
        std::optional<std::string> transfer_point;
        double estimate_s = 0.0;
        CoordinationKind kind = CoordinationKind::standing;
    };

    /// A clearance issued at a fixed sim-time (recorded clearance stream or test script).
    struct ScriptedAction
    {
        double t = 0.0;
        std::string callsign;
        std::string issuer;
        Clearance clearance;
    };

    struct ModelRef
    {
        std::string aircraft_type;
        Phase phase = Phase::descent;
        std::string file;
    };

    enum class ConflictGeometry
    {
        crossing,
        head_on,
        overtaking,
        vertical,
        mixed,
    };

    std::string to_string(ConflictGeometry g);
    ConflictGeometry conflict_geometry_from_string(const std::string &s);

    struct GenerationParams
    {
        std::uint64_t seed = 0;
        double duration_s = 3600.0;
        double density_per_10min = 6.0;
        ConflictGeometry geometry = ConflictGeometry::crossing;
        double entry_fl_min = 300.0;
        double entry_fl_max = 380.0;
        std::vector<std::pair<std::string, double>> type_mix{{"B738", 0.4}, {"A320", 0.3}, {"E190", 0.2}, {"A333", 0.1}};
        LatLon centre{52.0, -1.0};
        double sector_half_width_nmi = 50.0;
        /// Route end points sit on a circle of this radius around the central fix.
        double route_radius_nmi = 90.0;
        /// Number of parallel routes; head-on and overtaking need one shared route, crossing needs two.
        int routes = 2;
    };

    struct ScenarioSpec
    {
        std::uint64_t seed = 0;
        double duration_s = 1800.0;
        AirspaceDefinition airspace;
        /// When set, the airspace was loaded from this path (relative paths resolve against the scenario).
        std::optional<std::string> airspace_file;
        std::vector<std::string> simulated_groups;
        std::vector<FlightEntry> flights;
        std::vector<RecordedTrack> recorded;
        std::vector<WindGrid> forecast_wind;
        std::vector<WindGrid> truth_wind;
        LatencyModel latency;
        std::vector<CoordinationSpec> coordinations;
        std::vector<ScriptedAction> actions;
        std::vector<ModelRef> models;
        std::optional<std::string> perf_file;
        /// Tables loaded from perf_file (not serialised); they extend the builtin set.
        std::vector<PerfCoefficients> perf_tables;
        std::optional<GenerationParams> generation;
    };

    /// Parses and fully validates. `base_dir` resolves airspace_file; empty disables file references.
    ScenarioSpec parse_scenario(const std::string &text, const std::string &base_dir = "");
    ScenarioSpec load_scenario(const std::string &path);

    nlohmann::json scenario_to_json(const ScenarioSpec &s);
    /// One entry of the scenario's "recorded" list.
    nlohmann::json to_json(const RecordedTrack &t);
    /// Canonical text: sorted keys, two-space indent, trailing newline.
    std::string serialize_scenario(const ScenarioSpec &s);
    void save_scenario(const std::string &path, const ScenarioSpec &s);

    /// Cross-reference and invariant checks shared by the loader and the generator.
    void validate_scenario(const ScenarioSpec &s);

    /// Seeded parametric scenario over a square artificial sector.
    ScenarioSpec generate_scenario(const GenerationParams &params);

    struct ImportError
    {
        std::size_t line = 0;
        std::string message;
    };

    struct ImportResult
    {
        std::vector<RecordedTrack> tracks;
        std::vector<ImportError> errors;
    };

    inline constexpr double kTrackGapS = 60.0;
    inline constexpr double kTrackJumpFl = 20.0;

    /// Reads CSV with a header naming callsign,t,lat,lon,fl,gs,hdg (any column order, extra columns ignored).
    ImportResult import_tracks_csv(const std::string &text);

    /// Sorts samples by time and recomputes the gap / jump flags.
    void flag_track(RecordedTrack &track);
}
