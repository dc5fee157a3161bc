#pragma once

#include "atcsim/geo.hpp"

#include <optional>
#include <string>
#include <vector>

namespace atcsim
{
    struct Waypoint
    {
        std::string ident;
        LatLon pos;
    };

    /// A polygon prism: floor <= fl < ceiling over a simple lateral polygon.
    struct Sector
    {
        std::string id;
        double floor_fl = 0.0;
        double ceiling_fl = 0.0;
        std::vector<LatLon> boundary;
    };

    struct BandboxGroup
    {
        std::string id;
        std::vector<std::string> sectors;
    };

    struct BandboxConfig
    {
        std::vector<BandboxGroup> groups;
        double active_from_s = 0.0;

        const BandboxGroup *find_group(const std::string &id) const;
        /// Group owning a base sector, or nullptr.
        const BandboxGroup *group_of_sector(const std::string &sector_id) const;
    };

    struct CruiseSpeed
    {
        double cas_kt = 0.0;
        double mach = 0.0;

        friend bool operator==(const CruiseSpeed &, const CruiseSpeed &) = default;
    };

    struct FlightPlan
    {
        std::string callsign;
        std::string aircraft_type;
        std::string departure;
        std::string destination;
        std::vector<std::string> route;
        double requested_fl = 0.0;
        std::optional<CruiseSpeed> requested_cruise;
    };

    struct RouteLeg
    {
        Waypoint from;
        Waypoint to;
        double course_deg = 0.0;
        double length_nmi = 0.0;
    };

    enum class Containment
    {
        outside,
        boundary,
        inside,
    };

    class AirspaceDefinition
    {
    public:
        std::string airac_date;
        std::vector<Sector> sectors;
        std::vector<Waypoint> waypoints;
        /// Bandbox configurations ordered by active_from_s; the first is active from t = 0.
        std::vector<BandboxConfig> bandbox_schedule;

        /// Checks every invariant; throws DefinitionError naming the offending element.
        void validate() const;

        const Waypoint *find_waypoint(const std::string &ident) const;
        const Sector *find_sector(const std::string &id) const;
        const BandboxConfig &default_bandbox() const { return bandbox_schedule.front(); }
        const BandboxConfig &bandbox_at(double t) const;
        /// All group ids across every configuration in the schedule.
        bool has_group(const std::string &group_id) const;
    };

    /// Lateral classification of a point against a polygon, even-odd rule, edges count as boundary.
    Containment classify_lateral(double lat, double lon, const std::vector<LatLon> &polygon);

    bool point_in_sector(double lat, double lon, double fl, const Sector &sector);

    /// The group whose base sector covers the point, or nullopt when uncovered.
    /// Throws DefinitionError when two sectors contain the point in their interiors.
    std::optional<std::string> controlling_group(double lat, double lon, double fl, const BandboxConfig &config,
                                                 const AirspaceDefinition &airspace);

    /// Id of the unique base sector covering the point (boundary ties go to the lower band, then id order).
    std::optional<std::string> covering_sector(double lat, double lon, double fl, const AirspaceDefinition &airspace);

    std::vector<RouteLeg> route_legs(const FlightPlan &plan, const AirspaceDefinition &airspace);

    bool is_valid_waypoint_ident(const std::string &ident);
}
