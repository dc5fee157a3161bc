#pragma once

#include "atcsim/airspace.hpp"
#include "atcsim/atmosphere.hpp"
#include "atcsim/clearance.hpp"
#include "atcsim/geo.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace atcsim
{
    enum class LateralMode
    {
        route_following,
        heading_hold,
    };

    struct LateralIntent
    {
        LateralMode mode = LateralMode::heading_hold;
        /// Active route (idents); starts as the filed route and is rewritten by direct-to.
        std::vector<std::string> route;
        std::size_t next_index = 0;
        double hold_heading_deg = 0.0;
        /// Forced turn direction for the current heading change, cleared once established.
        std::optional<TurnDirection> turn_direction;
        /// Heading command consumed by the integrator; maintained by the pilot agent.
        double target_heading_deg = 0.0;
    };

    enum class VerticalMode
    {
        level,
        climbing,
        descending,
    };

    struct LevelConstraint
    {
        double fl = 0.0;
        std::string waypoint;
    };

    struct VerticalIntent
    {
        VerticalMode mode = VerticalMode::level;
        double target_fl = 0.0;
        std::optional<LevelConstraint> constraint;
        /// Descent starts once the along-route distance to the constraint point falls to this value.
        std::optional<double> tod_distance_nmi;
        std::optional<LatLon> top_of_descent;
        /// False while a when-ready descent is waiting for its top of descent.
        bool started = true;
        std::optional<double> commanded_rocd_fpm; // magnitude
    };

    struct SpeedIntent
    {
        std::optional<double> cas_kt;
        std::optional<double> mach;
        /// Level-flight speeds (from the plan or sampled from the cruise PMF).
        CruiseSpeed cruise;
    };

    struct PendingClearance
    {
        Clearance clearance;
        double execute_at = 0.0;
        std::uint64_t seq = 0;
        std::string issuer;
    };

    struct Intent
    {
        LateralIntent lateral;
        VerticalIntent vertical;
        SpeedIntent speed;
        /// Ordered by (execute_at, seq).
        std::vector<PendingClearance> pending;
    };

    enum class Source
    {
        replay,
        simulated,
    };

    struct AircraftState
    {
        std::string callsign;
        LatLon position;
        double fl = 0.0;
        double heading_deg = 0.0;
        SpeedState speed;
        double rocd_fpm = 0.0;
        double ground_speed_kt = 0.0;
        double track_deg = 0.0;
        Intent intent;
        std::string controlling_group;
        std::string comms_group;
        Source source = Source::simulated;
        FlightPlan plan;
        std::optional<double> selected_fl;

        bool vertically_active() const noexcept
        {
            return intent.vertical.mode == VerticalMode::climbing ||
                   (intent.vertical.mode == VerticalMode::descending && intent.vertical.started);
        }
    };

    std::string to_string(Source s);
    std::string to_string(VerticalMode m);
}
