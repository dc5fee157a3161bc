#include "atcsim/airspace.hpp"
#include "atcsim/errors.hpp"
#include "atcsim/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace atcsim;

namespace
{
    // Winding-number test in the (lon, lat) plane; agrees with even-odd for simple polygons.
    bool oracle_inside(double lat, double lon, const std::vector<LatLon> &poly)
    {
        int winding = 0;
        const std::size_t n = poly.size();
        for (std::size_t i = 0; i < n; ++i)
        {
            const LatLon a = poly[i];
            const LatLon b = poly[(i + 1) % n];
            const double side = (b.lon - a.lon) * (lat - a.lat) - (lon - a.lon) * (b.lat - a.lat);
            if (a.lat <= lat)
            {
                if (b.lat > lat && side > 0.0)
                {
                    ++winding;
                }
            }
            else if (b.lat <= lat && side < 0.0)
            {
                --winding;
            }
        }
        return winding != 0;
    }

    std::vector<LatLon> star_polygon()
    {
        // Concave 10-vertex star around (52, -1).
        std::vector<LatLon> p;
        for (int i = 0; i < 10; ++i)
        {
            const double r = i % 2 == 0 ? 1.0 : 0.4;
            const double a = i * 36.0 * 3.14159265358979 / 180.0;
            p.push_back({52.0 + r * std::cos(a), -1.0 + r * std::sin(a)});
        }
        return p;
    }

    AirspaceDefinition three_sectors()
    {
        AirspaceDefinition a;
        a.airac_date = "2401";
        a.sectors.push_back({"S1", 0.0, 300.0, {{50.0, -2.0}, {52.0, -2.0}, {52.0, 0.0}, {50.0, 0.0}}});
        a.sectors.push_back({"S2", 0.0, 300.0, {{50.0, 0.0}, {52.0, 0.0}, {51.0, 2.0}}});
        a.sectors.push_back({"S3", 300.0, 500.0, {{50.0, -2.0}, {52.0, -2.0}, {52.0, 2.0}, {50.0, 2.0}}});
        a.bandbox_schedule.push_back({{{"G1", {"S1", "S2"}}, {"G2", {"S3"}}}, 0.0});
        a.bandbox_schedule.push_back({{{"GA", {"S1"}}, {"GB", {"S2"}}, {"GC", {"S3"}}}, 600.0});
        return a;
    }
}

TEST(Airspace, SquareCentroidAndExterior)
{
    const std::vector<LatLon> sq{{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}};
    const Sector s{"S1", 100.0, 300.0, sq};
    EXPECT_TRUE(point_in_sector(0.5, 0.5, 200.0, s));
    EXPECT_FALSE(point_in_sector(2.5, 0.5, 200.0, s));
    EXPECT_FALSE(point_in_sector(0.5, 0.5, 300.0, s));
    EXPECT_TRUE(point_in_sector(0.5, 0.5, 100.0, s));
    EXPECT_EQ(classify_lateral(0.0, 0.5, sq), Containment::boundary);
    EXPECT_EQ(classify_lateral(1.0, 1.0, sq), Containment::boundary);
}

TEST(Airspace, RandomPointsMatchWindingOracle)
{
    const auto poly = star_polygon();
    Rng rng(11);
    int inside = 0;
    for (int i = 0; i < 1000; ++i)
    {
        const double lat = rng.uniform(50.8, 53.2);
        const double lon = rng.uniform(-2.2, 0.2);
        const Containment c = classify_lateral(lat, lon, poly);
        ASSERT_NE(c, Containment::boundary);
        const bool expected = oracle_inside(lat, lon, poly);
        EXPECT_EQ(c == Containment::inside, expected) << lat << " " << lon;
        inside += expected;
    }
    EXPECT_GT(inside, 100);
    EXPECT_LT(inside, 900);
}

TEST(Airspace, ControllingGroupBasics)
{
    const auto a = three_sectors();
    a.validate();
    EXPECT_EQ(controlling_group(51.0, -1.0, 200.0, a.default_bandbox(), a), std::optional<std::string>("G1"));
    EXPECT_EQ(controlling_group(51.0, -1.0, 400.0, a.default_bandbox(), a), std::optional<std::string>("G2"));
    EXPECT_EQ(controlling_group(51.0, -1.0, 550.0, a.default_bandbox(), a), std::nullopt);
    EXPECT_EQ(controlling_group(51.0, -1.0, 200.0, a.bandbox_at(700.0), a), std::optional<std::string>("GA"));
    // Shared edge between S1 and S2 at equal floors: the lower id wins.
    EXPECT_EQ(covering_sector(51.0, 0.0, 100.0, a), std::optional<std::string>("S1"));
}

TEST(Airspace, GridScanMatchesPerSectorOracle)
{
    const auto a = three_sectors();
    const auto &cfg = a.default_bandbox();
    for (int i = 0; i < 50; ++i)
    {
        for (int j = 0; j < 50; ++j)
        {
            for (int k = 0; k < 10; ++k)
            {
                const double lat = 49.9 + 2.2 * i / 49.0;
                const double lon = -2.1 + 4.2 * j / 49.0;
                const double fl = 60.0 * k;
                const Sector *best = nullptr;
                for (const auto &s : a.sectors)
                {
                    if (point_in_sector(lat, lon, fl, s) &&
                        (best == nullptr || s.floor_fl < best->floor_fl ||
                         (s.floor_fl == best->floor_fl && s.id < best->id)))
                    {
                        best = &s;
                    }
                }
                std::optional<std::string> expected;
                if (best != nullptr)
                {
                    expected = cfg.group_of_sector(best->id)->id;
                }
                ASSERT_EQ(controlling_group(lat, lon, fl, cfg, a), expected) << lat << " " << lon << " " << fl;
            }
        }
    }
}

TEST(Airspace, OverlapReportsBothSectors)
{
    auto a = three_sectors();
    a.sectors[1].boundary = {{50.0, -1.0}, {52.0, -1.0}, {51.0, 2.0}};
    try
    {
        covering_sector(51.0, -0.5, 100.0, a);
        FAIL() << "expected overlap";
    }
    catch (const DefinitionError &e)
    {
        const std::string what = e.what();
        EXPECT_NE(what.find("S1"), std::string::npos);
        EXPECT_NE(what.find("S2"), std::string::npos);
    }
}

TEST(Airspace, MalformedDefinitionsRejectedAtLoad)
{
    auto bow = three_sectors();
    bow.sectors[0].boundary = {{50.0, -2.0}, {52.0, 0.0}, {52.0, -2.0}, {50.0, 0.0}};
    EXPECT_THROW(bow.validate(), DefinitionError);

    auto flat = three_sectors();
    flat.sectors[0].floor_fl = 300.0;
    flat.sectors[0].ceiling_fl = 300.0;
    EXPECT_THROW(flat.validate(), DefinitionError);

    auto uncovered = three_sectors();
    uncovered.bandbox_schedule[0].groups.pop_back();
    EXPECT_THROW(uncovered.validate(), DefinitionError);

    auto ident = three_sectors();
    ident.waypoints.push_back({"lower", {51.0, 0.0}});
    EXPECT_THROW(ident.validate(), DefinitionError);
}
