#include "atcsim/airspace.hpp"

#include "atcsim/errors.hpp"
#include "atcsim/units.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace atcsim
{
    namespace
    {
        constexpr double kEdgeEps = 1e-12;

        double cross(LatLon o, LatLon a, LatLon b)
        {
            return (a.lon - o.lon) * (b.lat - o.lat) - (a.lat - o.lat) * (b.lon - o.lon);
        }

        bool on_segment(LatLon p, LatLon a, LatLon b)
        {
            const double len = std::hypot(b.lon - a.lon, b.lat - a.lat);
            if (std::abs(cross(a, b, p)) > kEdgeEps * std::max(1.0, len))
            {
                return false;
            }
            return p.lon >= std::min(a.lon, b.lon) - kEdgeEps && p.lon <= std::max(a.lon, b.lon) + kEdgeEps &&
                   p.lat >= std::min(a.lat, b.lat) - kEdgeEps && p.lat <= std::max(a.lat, b.lat) + kEdgeEps;
        }

        int orientation(LatLon a, LatLon b, LatLon c)
        {
            const double v = cross(a, b, c);
            if (std::abs(v) < 1e-15)
            {
                return 0;
            }
            return v > 0 ? 1 : -1;
        }

        bool segments_intersect(LatLon p1, LatLon p2, LatLon q1, LatLon q2)
        {
            const int o1 = orientation(p1, p2, q1);
            const int o2 = orientation(p1, p2, q2);
            const int o3 = orientation(q1, q2, p1);
            const int o4 = orientation(q1, q2, p2);
            if (o1 != o2 && o3 != o4)
            {
                return true;
            }
            return (o1 == 0 && on_segment(q1, p1, p2)) || (o2 == 0 && on_segment(q2, p1, p2)) ||
                   (o3 == 0 && on_segment(p1, q1, q2)) || (o4 == 0 && on_segment(p2, q1, q2));
        }

        void validate_polygon(const Sector &s)
        {
            const auto &poly = s.boundary;
            const std::size_t n = poly.size();
            if (n < 3)
            {
                throw DefinitionError("sector " + s.id + ": boundary needs at least 3 vertices");
            }
            double area2 = 0.0;
            for (std::size_t i = 0; i < n; ++i)
            {
                const LatLon a = poly[i];
                const LatLon b = poly[(i + 1) % n];
                if (a.lat < -90.0 || a.lat > 90.0 || a.lon < -180.0 || a.lon >= 180.0)
                {
                    throw DefinitionError("sector " + s.id + ": vertex " + std::to_string(i) + " out of range");
                }
                area2 += a.lon * b.lat - b.lon * a.lat;
            }
            if (std::abs(area2) < 1e-12)
            {
                throw DefinitionError("sector " + s.id + ": boundary has zero area");
            }
            for (std::size_t i = 0; i < n; ++i)
            {
                for (std::size_t j = i + 1; j < n; ++j)
                {
                    const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
                    if (adjacent)
                    {
                        continue;
                    }
                    if (segments_intersect(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n]))
                    {
                        throw DefinitionError("sector " + s.id + ": boundary self-intersects (edges " +
                                              std::to_string(i) + " and " + std::to_string(j) + ")");
                    }
                }
            }
        }

        bool vertical_contains(double fl, const Sector &s) { return s.floor_fl <= fl && fl < s.ceiling_fl; }
    }

    const BandboxGroup *BandboxConfig::find_group(const std::string &id) const
    {
        for (const auto &g : groups)
        {
            if (g.id == id)
            {
                return &g;
            }
        }
        return nullptr;
    }

    const BandboxGroup *BandboxConfig::group_of_sector(const std::string &sector_id) const
    {
        for (const auto &g : groups)
        {
            if (std::find(g.sectors.begin(), g.sectors.end(), sector_id) != g.sectors.end())
            {
                return &g;
            }
        }
        return nullptr;
    }

    bool is_valid_waypoint_ident(const std::string &ident)
    {
        if (ident.size() < 2 || ident.size() > 5)
        {
            return false;
        }
        return std::all_of(ident.begin(), ident.end(),
                           [](char c) { return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9'); });
    }

    void AirspaceDefinition::validate() const
    {
        std::set<std::string> wp_ids;
        for (const auto &w : waypoints)
        {
            if (!is_valid_waypoint_ident(w.ident))
            {
                throw DefinitionError("waypoint '" + w.ident + "': ident must be 2-5 uppercase characters");
            }
            if (!wp_ids.insert(w.ident).second)
            {
                throw DefinitionError("waypoint '" + w.ident + "': duplicate ident");
            }
            if (w.pos.lat < -90.0 || w.pos.lat > 90.0 || w.pos.lon < -180.0 || w.pos.lon >= 180.0)
            {
                throw DefinitionError("waypoint '" + w.ident + "': coordinates out of range");
            }
        }
        std::set<std::string> sector_ids;
        for (const auto &s : sectors)
        {
            if (!sector_ids.insert(s.id).second)
            {
                throw DefinitionError("sector " + s.id + ": duplicate id");
            }
            if (!(s.floor_fl < s.ceiling_fl))
            {
                throw DefinitionError("sector " + s.id + ": floor must be below ceiling");
            }
            validate_polygon(s);
        }
        if (bandbox_schedule.empty())
        {
            throw DefinitionError("airspace: no bandbox configuration");
        }
        double last_from = -1.0;
        for (const auto &cfg : bandbox_schedule)
        {
            if (cfg.active_from_s <= last_from)
            {
                throw DefinitionError("bandbox schedule: active_from times must strictly increase");
            }
            last_from = cfg.active_from_s;
            if (cfg.groups.empty() || cfg.groups.size() > sectors.size())
            {
                throw DefinitionError("bandbox: group count must be within [1, number of sectors]");
            }
            std::set<std::string> covered;
            std::set<std::string> group_ids;
            for (const auto &g : cfg.groups)
            {
                if (!group_ids.insert(g.id).second)
                {
                    throw DefinitionError("bandbox: duplicate group id " + g.id);
                }
                if (g.sectors.empty())
                {
                    throw DefinitionError("bandbox group " + g.id + ": empty");
                }
                for (const auto &sid : g.sectors)
                {
                    if (!sector_ids.count(sid))
                    {
                        throw DefinitionError("bandbox group " + g.id + ": unknown sector " + sid);
                    }
                    if (!covered.insert(sid).second)
                    {
                        throw DefinitionError("bandbox: sector " + sid + " assigned to more than one group");
                    }
                }
            }
            if (covered.size() != sectors.size())
            {
                throw DefinitionError("bandbox: groups do not cover every base sector");
            }
        }
        if (bandbox_schedule.front().active_from_s != 0.0)
        {
            throw DefinitionError("bandbox schedule: first configuration must be active from 0");
        }
    }

    const Waypoint *AirspaceDefinition::find_waypoint(const std::string &ident) const
    {
        for (const auto &w : waypoints)
        {
            if (w.ident == ident)
            {
                return &w;
            }
        }
        return nullptr;
    }

    const Sector *AirspaceDefinition::find_sector(const std::string &id) const
    {
        for (const auto &s : sectors)
        {
            if (s.id == id)
            {
                return &s;
            }
        }
        return nullptr;
    }

    const BandboxConfig &AirspaceDefinition::bandbox_at(double t) const
    {
        const BandboxConfig *active = &bandbox_schedule.front();
        for (const auto &cfg : bandbox_schedule)
        {
            if (cfg.active_from_s <= t)
            {
                active = &cfg;
            }
        }
        return *active;
    }

    bool AirspaceDefinition::has_group(const std::string &group_id) const
    {
        return std::any_of(bandbox_schedule.begin(), bandbox_schedule.end(),
                           [&](const BandboxConfig &c) { return c.find_group(group_id) != nullptr; });
    }

    Containment classify_lateral(double lat, double lon, const std::vector<LatLon> &polygon)
    {
        const LatLon p{lat, lon};
        const std::size_t n = polygon.size();
        bool inside = false;
        for (std::size_t i = 0, j = n - 1; i < n; j = i++)
        {
            const LatLon a = polygon[i];
            const LatLon b = polygon[j];
            if (on_segment(p, a, b))
            {
                return Containment::boundary;
            }
            if ((a.lat > lat) != (b.lat > lat))
            {
                const double x = a.lon + (lat - a.lat) * (b.lon - a.lon) / (b.lat - a.lat);
                if (lon < x)
                {
                    inside = !inside;
                }
            }
        }
        return inside ? Containment::inside : Containment::outside;
    }

    bool point_in_sector(double lat, double lon, double fl, const Sector &sector)
    {
        return vertical_contains(fl, sector) && classify_lateral(lat, lon, sector.boundary) != Containment::outside;
    }

    std::optional<std::string> covering_sector(double lat, double lon, double fl, const AirspaceDefinition &airspace)
    {
        const Sector *interior = nullptr;
        const Sector *edge = nullptr;
        for (const auto &s : airspace.sectors)
        {
            if (!vertical_contains(fl, s))
            {
                continue;
            }
            const Containment c = classify_lateral(lat, lon, s.boundary);
            if (c == Containment::inside)
            {
                if (interior != nullptr)
                {
                    throw DefinitionError("sectors " + interior->id + " and " + s.id + " overlap");
                }
                interior = &s;
            }
            else if (c == Containment::boundary)
            {
                if (edge == nullptr || s.floor_fl < edge->floor_fl ||
                    (s.floor_fl == edge->floor_fl && s.id < edge->id))
                {
                    edge = &s;
                }
            }
        }
        if (interior != nullptr)
        {
            return interior->id;
        }
        if (edge != nullptr)
        {
            return edge->id;
        }
        return std::nullopt;
    }

    std::optional<std::string> controlling_group(double lat, double lon, double fl, const BandboxConfig &config,
                                                 const AirspaceDefinition &airspace)
    {
        const auto sector = covering_sector(lat, lon, fl, airspace);
        if (!sector)
        {
            return std::nullopt;
        }
        const BandboxGroup *g = config.group_of_sector(*sector);
        if (g == nullptr)
        {
            throw DefinitionError("sector " + *sector + " is not assigned to any bandbox group");
        }
        return g->id;
    }

    std::vector<RouteLeg> route_legs(const FlightPlan &plan, const AirspaceDefinition &airspace)
    {
        std::vector<const Waypoint *> points;
        points.reserve(plan.route.size());
        for (const auto &ident : plan.route)
        {
            const Waypoint *w = airspace.find_waypoint(ident);
            if (w == nullptr)
            {
                throw DefinitionError("flight " + plan.callsign + ": unknown waypoint " + ident);
            }
            points.push_back(w);
        }
        std::vector<RouteLeg> legs;
        double prev_course = 0.0;
        for (std::size_t i = 1; i < points.size(); ++i)
        {
            RouteLeg leg{*points[i - 1], *points[i], prev_course, 0.0};
            leg.length_nmi = distance_nmi(leg.from.pos, leg.to.pos);
            if (!(leg.from.pos == leg.to.pos))
            {
                leg.course_deg = initial_course_deg(leg.from.pos, leg.to.pos);
            }
            prev_course = leg.course_deg;
            legs.push_back(std::move(leg));
        }
        return legs;
    }
}
