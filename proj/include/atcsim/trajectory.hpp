#pragma once

#include "atcsim/geo.hpp"

#include <string>
#include <vector>

namespace atcsim
{
    enum class Phase
    {
        climb,
        descent,
    };

    std::string to_string(Phase p);
    Phase phase_from_string(const std::string &s);

    struct TrajectoryPoint
    {
        double t = 0.0;
        LatLon position;
        double fl = 0.0;
        double heading_deg = 0.0;
        double cas_kt = 0.0;
        double tas_kt = 0.0;
        double mach = 0.0;
        double rocd_fpm = 0.0;
        double ground_speed_kt = 0.0;
    };

    struct Trajectory
    {
        std::string callsign;
        std::string aircraft_type;
        Phase phase = Phase::descent;
        double cleared_fl = 0.0;
        std::vector<TrajectoryPoint> points;
    };
}
