#pragma once

#include "atcsim/geo.hpp"

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace atcsim
{
    inline constexpr double kLateralMinimumNmi = 5.0;
    inline constexpr double kVerticalMinimumFl = 10.0;
    inline constexpr double kProximityRangeNmi = 10.0;
    inline constexpr double kMarginCap = 2.0;

    struct TrafficPoint
    {
        std::string callsign;
        LatLon position;
        double fl = 0.0;
    };

    /// A pair currently infringing both minima; `a` < `b` lexicographically.
    struct PairConflict
    {
        std::string a;
        std::string b;
        double lateral_nmi = 0.0;
        double vertical_fl = 0.0;

        friend bool operator==(const PairConflict &, const PairConflict &) = default;
    };

    /// All pairs with lateral < 5 NMI and vertical < 10 FL, sorted by (a, b). A latitude-sorted sweep skips
    /// only pairs whose meridional separation alone already exceeds the lateral minimum.
    std::vector<PairConflict> scan_separation(const std::vector<TrafficPoint> &snapshot);

    /// Pairs with |dFL| < 10 and lateral < 10 NMI (the proximity-shaping neighbourhood), sorted.
    std::vector<PairConflict> scan_proximity(const std::vector<TrafficPoint> &snapshot);

    /// Minimum over pairs of max(lateral / 5 NMI, vertical / 10 FL), capped at 2. 2 when fewer than two aircraft.
    double assured_margin(const std::vector<TrafficPoint> &snapshot);

    struct SeparationEvent
    {
        std::string a;
        std::string b;
        double start = 0.0;
        double end = 0.0;
        double min_lateral_nmi = 0.0;
        double min_vertical_fl = 0.0;
        double severity = 0.0;
        bool open = true;
    };

    struct SeparationTransitions
    {
        std::vector<SeparationEvent> opened;
        std::vector<SeparationEvent> closed;
    };

    /// Opens, extends and closes LoS events from successive conflict scans.
    class SeparationMonitor
    {
    public:
        SeparationTransitions update(double t, const std::vector<PairConflict> &conflicts);
        /// Closes every open event at time t (end of run or aircraft removal).
        SeparationTransitions close_all(double t);
        /// Closes events involving `callsign`.
        SeparationTransitions close_involving(double t, const std::string &callsign);

        const std::map<std::pair<std::string, std::string>, SeparationEvent> &open_events() const noexcept
        {
            return m_open;
        }
        const std::vector<SeparationEvent> &closed_events() const noexcept { return m_closed; }

    private:
        std::map<std::pair<std::string, std::string>, SeparationEvent> m_open;
        std::vector<SeparationEvent> m_closed;
    };

    struct RewardWeights
    {
        double los = 1.0;
        double proximity = 0.5;
        double clearance = 0.05;
        double progress_per_nmi = 0.01;
        double coordination = 0.5;
    };

    struct RewardInputs
    {
        std::vector<TrafficPoint> snapshot;
        int clearances_issued = 0;
        double progress_nmi = 0.0;
        int coordinations_satisfied = 0;
    };

    /// (1 - d/10)^2 for d < 10 NMI, else 0.
    double proximity_term(double lateral_nmi);
    double proximity_term_derivative(double lateral_nmi);

    double compose_reward(const RewardInputs &in, const RewardWeights &w);

    struct EfficiencyInput
    {
        /// Along-route reference distance between the projected start and end points, or the great-circle
        /// distance between them when there is no plan.
        double reference_nmi = 0.0;
        double flown_nmi = 0.0;
        double cruise_time_s = 0.0;
        double cruise_below_requested_s = 0.0;
        bool has_plan = true;
    };

    /// Along-route distance (NMI) from the start of a polyline to the projection of p onto its nearest leg.
    double route_position_nmi(const std::vector<LatLon> &route, LatLon p);

    /// Plan reference distance between two points: the along-route span of their projections, or the
    /// great-circle distance when the route has fewer than two points or the span is not positive.
    double plan_reference_nmi(const std::vector<LatLon> &route, LatLon start, LatLon end);

    /// Non-certified 3Di proxy: 0.5 * max(0, flown/reference - 1) + 0.5 * fraction of cruise time below
    /// the requested level. Without a plan only the track-extension term contributes.
    double inefficiency_3di_proxy(const EfficiencyInput &in);

    /// Per-aircraft online accumulators.
    struct AircraftMetrics
    {
        double fuel_kg = 0.0;
        double flown_nmi = 0.0;
        double cruise_time_s = 0.0;
        double cruise_below_requested_s = 0.0;
        int clearance_count = 0;
        LatLon start;
        LatLon last;
    };

    struct MetricsReport
    {
        int los_count = 0;
        double min_assured_margin = kMarginCap;
        std::vector<double> assured_margin_trace;
        double fuel_proxy_kg = 0.0;
        double mean_3di_proxy = 0.0;
        std::map<std::string, double> fuel_by_aircraft;
        std::map<std::string, double> inefficiency_by_aircraft;
        std::map<std::string, int> clearance_count;
        int coordinations_satisfied = 0;
        int coordinations_violated = 0;
        std::vector<double> reward_trace;
        std::vector<double> tick_times;

        double coordination_compliance() const;
    };

    std::string metrics_csv(const MetricsReport &r);
}
