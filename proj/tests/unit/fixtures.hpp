#pragma once

#include "atcsim/scenario.hpp"
#include "atcsim/world.hpp"

#include <string>
#include <vector>

namespace atcsim::testing
{
    // One square sector S1 (lat 51..53, lon -3..1), group G1, waypoints along the 52N parallel
    // and a north-south pair through the centre.
    inline AirspaceDefinition square_airspace()
    {
        AirspaceDefinition a;
        a.airac_date = "2401";
        a.sectors.push_back({"S1", 0.0, 600.0, {{51.0, -3.0}, {53.0, -3.0}, {53.0, 1.0}, {51.0, 1.0}}});
        a.bandbox_schedule.push_back({{{"G1", {"S1"}}}, 0.0});
        a.waypoints = {
            {"WEST", {52.0, -4.0}}, {"CTR", {52.0, -1.0}}, {"EAST", {52.0, 2.0}},
            {"NTH", {53.5, -1.0}},  {"STH", {50.5, -1.0}}, {"FAR", {52.0, 6.0}},
        };
        return a;
    }

    inline FlightEntry flight(const std::string &callsign, const std::string &type, std::vector<std::string> route,
                              LatLon position, double fl, double entry_time_s = 0.0)
    {
        FlightEntry f;
        f.plan.callsign = callsign;
        f.plan.aircraft_type = type;
        f.plan.departure = "ZZZZ";
        f.plan.destination = "ZZZZ";
        f.plan.route = std::move(route);
        f.plan.requested_fl = fl;
        f.entry_time_s = entry_time_s;
        f.position = position;
        f.fl = fl;
        return f;
    }

    inline ScenarioSpec base_scenario(double duration_s = 1200.0, std::uint64_t seed = 7)
    {
        ScenarioSpec s;
        s.seed = seed;
        s.duration_s = duration_s;
        s.airspace = square_airspace();
        s.simulated_groups = {"G1"};
        return s;
    }

    inline LatLon east_entry() { return {52.0, -2.9}; }

    inline WorldConfig quiet_config()
    {
        WorldConfig c;
        c.correction_mode = PredictMode::baseline;
        return c;
    }
}
