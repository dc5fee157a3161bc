#include "atcsim/airspace.hpp"
#include "atcsim/errors.hpp"
#include "atcsim/geo.hpp"
#include "atcsim/rng.hpp"
#include "atcsim/units.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace atcsim;

namespace
{
    // Written independently of src/geo.cpp: vector form on the unit sphere.
    struct Vec3
    {
        double x, y, z;
    };

    Vec3 to_vec(LatLon p)
    {
        const double la = p.lat * kDegToRad;
        const double lo = p.lon * kDegToRad;
        return {std::cos(la) * std::cos(lo), std::cos(la) * std::sin(lo), std::sin(la)};
    }

    Vec3 cross(Vec3 a, Vec3 b) { return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x}; }
    double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
    double norm(Vec3 a) { return std::sqrt(dot(a, a)); }

    double oracle_distance(LatLon a, LatLon b)
    {
        const Vec3 va = to_vec(a);
        const Vec3 vb = to_vec(b);
        return std::atan2(norm(cross(va, vb)), dot(va, vb)) * kEarthRadiusNmi;
    }

    double oracle_course(LatLon a, LatLon b)
    {
        const double p1 = a.lat * kDegToRad;
        const double p2 = b.lat * kDegToRad;
        const double dl = (b.lon - a.lon) * kDegToRad;
        const double y = std::sin(dl) * std::cos(p2);
        const double x = std::cos(p1) * std::sin(p2) - std::sin(p1) * std::cos(p2) * std::cos(dl);
        double c = std::atan2(y, x) * kRadToDeg;
        return c < 0.0 ? c + 360.0 : c;
    }

    double angle_diff(double a, double b) { return std::abs(heading_delta(a, b)); }
}

TEST(Geo, MeridianLegIsSixtyMiles)
{
    AirspaceDefinition a;
    a.waypoints = {{"AAA", {50.0, 1.0}}, {"BBB", {51.0, 1.0}}};
    FlightPlan p;
    p.callsign = "T1";
    p.route = {"AAA", "BBB", "AAA"};
    const auto legs = route_legs(p, a);
    ASSERT_EQ(legs.size(), 2u);
    EXPECT_NEAR(legs[0].length_nmi, 60.0, 0.1);
    EXPECT_NEAR(legs[0].course_deg, 0.0, 1e-9);
    EXPECT_NEAR(legs[1].course_deg, 180.0, 1e-9);
}

TEST(Geo, DegenerateLegKeepsPreviousCourse)
{
    AirspaceDefinition a;
    a.waypoints = {{"AAA", {50.0, 1.0}}, {"BBB", {50.0, 2.0}}};
    FlightPlan p;
    p.callsign = "T1";
    p.route = {"AAA", "AAA", "BBB", "BBB"};
    const auto legs = route_legs(p, a);
    ASSERT_EQ(legs.size(), 3u);
    EXPECT_EQ(legs[0].length_nmi, 0.0);
    EXPECT_EQ(legs[0].course_deg, 0.0);
    EXPECT_EQ(legs[2].length_nmi, 0.0);
    EXPECT_EQ(legs[2].course_deg, legs[1].course_deg);
}

TEST(Geo, UnknownIdentNamesIt)
{
    AirspaceDefinition a;
    a.waypoints = {{"AAA", {50.0, 1.0}}};
    FlightPlan p;
    p.callsign = "T1";
    p.route = {"AAA", "NOPE"};
    try
    {
        route_legs(p, a);
        FAIL() << "expected a definition error";
    }
    catch (const DefinitionError &e)
    {
        EXPECT_NE(std::string(e.what()).find("NOPE"), std::string::npos);
    }
}

TEST(Geo, RandomPairsMatchVectorOracle)
{
    Rng rng(42);
    for (int i = 0; i < 20; ++i)
    {
        const LatLon a{rng.uniform(-70.0, 70.0), rng.uniform(-180.0, 180.0)};
        const LatLon b{rng.uniform(-70.0, 70.0), rng.uniform(-180.0, 180.0)};
        EXPECT_NEAR(distance_nmi(a, b), oracle_distance(a, b), 0.01);
        EXPECT_LT(angle_diff(initial_course_deg(a, b), oracle_course(a, b)), 0.01);
    }
}

TEST(Geo, DestinationInvertsDistanceAndCourse)
{
    Rng rng(3);
    for (int i = 0; i < 50; ++i)
    {
        const LatLon a{rng.uniform(-60.0, 60.0), rng.uniform(-170.0, 170.0)};
        const double course = rng.uniform(0.0, 360.0);
        const double d = rng.uniform(1.0, 500.0);
        const LatLon b = destination(a, course, d);
        EXPECT_NEAR(distance_nmi(a, b), d, 1e-6);
        EXPECT_LT(angle_diff(initial_course_deg(a, b), course), 1e-6);
    }
}

TEST(Geo, CrossAndAlongTrack)
{
    const LatLon a{0.0, 0.0};
    const LatLon b{0.0, 10.0};
    const LatLon north = destination(destination(a, 90.0, 120.0), 0.0, 7.0);
    EXPECT_NEAR(cross_track_nmi(a, b, north), -7.0, 1e-6);
    EXPECT_NEAR(along_track_nmi(a, b, north), 120.0, 1e-3);
    const LatLon south = destination(destination(a, 90.0, 30.0), 180.0, 4.0);
    EXPECT_NEAR(cross_track_nmi(a, b, south), 4.0, 1e-6);
    const LatLon behind = destination(a, 270.0, 15.0);
    EXPECT_NEAR(along_track_nmi(a, b, behind), -15.0, 1e-6);
}
