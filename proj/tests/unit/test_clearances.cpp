#include "fixtures.hpp"

#include "atcsim/json_io.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace atcsim;
using namespace atcsim::testing;

namespace
{
    ScenarioSpec one_flight(double fl, LatLon position = east_entry())
    {
        ScenarioSpec s = base_scenario();
        s.latency = {0.0, 0.0};
        s.flights.push_back(flight("BAW1", "B738", {"CTR", "EAST"}, position, fl));
        return s;
    }

    const AircraftState &state(const World &w, const std::string &cs)
    {
        const auto *a = w.find(cs);
        if (a == nullptr)
        {
            throw std::runtime_error(cs + " is not in the world");
        }
        return a->state;
    }

    // Long east-west corridor so descents finish inside the sector.
    ScenarioSpec corridor(double fl)
    {
        ScenarioSpec s = base_scenario(3600.0);
        s.airspace.sectors[0].boundary = {{51.0, -3.0}, {53.0, -3.0}, {53.0, 9.0}, {51.0, 9.0}};
        s.latency = {0.0, 0.0};
        s.flights.push_back(flight("BAW1", "B738", {"CTR", "EAST", "FAR"}, east_entry(), fl));
        return s;
    }
}

TEST(Clearance, WireNamesRoundTrip)
{
    const std::vector<Clearance> all{DirectTo{"CTR"},
                                     FlyHeading{271.5},
                                     TurnBy{TurnDirection::right, 30.0},
                                     MaintainPresentHeading{},
                                     ClimbDescendNow{350.0},
                                     DescendWhenReadyLevelBy{150.0, "FAR"},
                                     DescendNowLevelBy{150.0, "FAR"},
                                     ChangeCas{280.0},
                                     ChangeMach{0.78},
                                     ChangeRocd{1500.0},
                                     ContactFrequency{"G1"}};
    ASSERT_EQ(all.size(), kClearanceKinds);
    std::set<std::string> names;
    for (const auto &c : all)
    {
        names.insert(clearance_name(c));
        const Clearance back = clearance_from_json(to_json(c));
        EXPECT_EQ(to_json(back), to_json(c));
        EXPECT_EQ(back.index(), c.index());
        EXPECT_TRUE(check_clearance_attributes(c).empty()) << clearance_name(c);
    }
    EXPECT_EQ(names.size(), kClearanceKinds);
    EXPECT_EQ(clearance_name(ClimbDescendNow{}), "climb_descend_now");
    EXPECT_EQ(clearance_axis(ChangeRocd{}), ClearanceAxis::rocd);
}

TEST(Clearance, AttributeRangeChecks)
{
    EXPECT_FALSE(check_clearance_attributes(FlyHeading{370.0}).empty());
    EXPECT_FALSE(check_clearance_attributes(ClimbDescendNow{700.0}).empty());
    EXPECT_FALSE(check_clearance_attributes(ChangeMach{1.5}).empty());
    EXPECT_FALSE(check_clearance_attributes(ChangeCas{-10.0}).empty());
}

TEST(Clearance, MaintainPresentHeadingHoldsCurrentHeading)
{
    World w(one_flight(330.0), {}, quiet_config());
    w.tick();
    ASSERT_TRUE(w.issue_clearance("BAW1", FlyHeading{137.4}, "test").accepted);
    for (int i = 0; i < 10; ++i)
    {
        w.tick();
    }
    ASSERT_NEAR(state(w, "BAW1").heading_deg, 137.4, 1e-9);
    ASSERT_TRUE(w.issue_clearance("BAW1", MaintainPresentHeading{}, "test").accepted);
    w.tick();
    const auto &lat = state(w, "BAW1").intent.lateral;
    EXPECT_EQ(lat.mode, LateralMode::heading_hold);
    EXPECT_NEAR(lat.hold_heading_deg, 137.4, 1e-9);
    w.tick();
    EXPECT_NEAR(state(w, "BAW1").heading_deg, 137.4, 1e-9);
}

TEST(Clearance, ClimbNowClimbsWithinOneTick)
{
    World w(one_flight(310.0), {}, quiet_config());
    w.tick();
    ASSERT_EQ(state(w, "BAW1").rocd_fpm, 0.0);
    const IssueResult r = w.issue_clearance("BAW1", ClimbDescendNow{350.0}, "test");
    ASSERT_TRUE(r.accepted);
    EXPECT_EQ(r.execute_at, w.time());
    w.tick();
    const auto &s = state(w, "BAW1");
    EXPECT_EQ(s.intent.vertical.mode, VerticalMode::climbing);
    EXPECT_EQ(s.intent.vertical.target_fl, 350.0);
    EXPECT_GT(s.rocd_fpm, 0.0);
    EXPECT_GT(s.fl, 310.0);
}

TEST(Clearance, Rejections)
{
    // About 20 NMI short of CTR.
    ScenarioSpec spec = one_flight(330.0, {52.0, -1.55});
    World w(spec, {}, quiet_config());
    w.tick();
    EXPECT_EQ(w.issue_clearance("NOPE", FlyHeading{90.0}, "t").reason, "unknown callsign");
    EXPECT_EQ(w.issue_clearance("BAW1", ChangeRocd{1000.0}, "t").reason, "not climbing or descending");
    EXPECT_FALSE(w.issue_clearance("BAW1", FlyHeading{370.0}, "t").accepted);
    EXPECT_EQ(w.issue_clearance("BAW1", DescendWhenReadyLevelBy{330.0, "EAST"}, "t").reason,
              "target level not below current level");
    EXPECT_FALSE(w.issue_clearance("BAW1", DirectTo{"ZZZZZ"}, "t").accepted);
    EXPECT_FALSE(w.issue_clearance("BAW1", ContactFrequency{"G9"}, "t").accepted);
    // 23,000 ft of descent does not fit in 20 NMI.
    const auto before = state(w, "BAW1").intent.vertical;
    EXPECT_EQ(w.issue_clearance("BAW1", DescendNowLevelBy{100.0, "CTR"}, "t").reason, "constraint unachievable");
    EXPECT_EQ(state(w, "BAW1").intent.vertical.target_fl, before.target_fl);
    EXPECT_TRUE(state(w, "BAW1").intent.pending.empty());
    EXPECT_EQ(w.log().of_type("clearance").size(), 7u);
}

TEST(Clearance, LatencyDelaysExecution)
{
    ScenarioSpec spec = one_flight(310.0);
    spec.latency = {20.0, 0.0};
    World w(spec, {}, quiet_config());
    w.tick();
    const IssueResult r = w.issue_clearance("BAW1", ClimbDescendNow{350.0}, "test");
    EXPECT_EQ(r.execute_at, w.time() + 20.0);
    w.tick();
    w.tick();
    EXPECT_EQ(state(w, "BAW1").intent.vertical.mode, VerticalMode::level);
    EXPECT_EQ(state(w, "BAW1").intent.pending.size(), 1u);
    w.tick();
    w.tick();
    EXPECT_EQ(state(w, "BAW1").intent.vertical.mode, VerticalMode::climbing);
}

TEST(Clearance, DescendNowAndWhenReadyBothMeetTheConstraint)
{
    for (const bool now : {true, false})
    {
        ScenarioSpec spec = corridor(350.0);
        WorldConfig cfg = quiet_config();
        cfg.correction_mode = PredictMode::mean;
        World w(spec, {}, cfg);
        w.tick();
        const LatLon start = state(w, "BAW1").position;
        const Clearance c = now ? Clearance(DescendNowLevelBy{150.0, "FAR"}) : Clearance(DescendWhenReadyLevelBy{150.0, "FAR"});
        ASSERT_TRUE(w.issue_clearance("BAW1", c, "test").accepted);
        w.tick();
        if (now)
        {
            EXPECT_LT(state(w, "BAW1").rocd_fpm, 0.0);
        }
        else
        {
            EXPECT_EQ(state(w, "BAW1").rocd_fpm, 0.0);
            EXPECT_FALSE(state(w, "BAW1").intent.vertical.started);
        }
        const auto &airspace = w.scenario().airspace;
        double fl_at_abeam = -1.0;
        while (!w.done() && w.find("BAW1") != nullptr)
        {
            const double before = distance_to_abeam(state(w, "BAW1"), airspace, "FAR");
            const double fl_before = state(w, "BAW1").fl;
            w.tick();
            if (w.find("BAW1") == nullptr)
            {
                break;
            }
            const double after = distance_to_abeam(state(w, "BAW1"), airspace, "FAR");
            if (before > 0.0 && after <= 0.0)
            {
                // Level at the abeam point, interpolated within the tick.
                const double f = before / (before - after);
                fl_at_abeam = fl_before + f * (state(w, "BAW1").fl - fl_before);
                break;
            }
        }
        EXPECT_NEAR(fl_at_abeam, 150.0, 0.5) << (now ? "descend now" : "when ready");
        if (!now)
        {
            const auto tod = w.log().of_type("top_of_descent");
            ASSERT_EQ(tod.size(), 1u);
            const double lon = (*tod[0])["lon"].get<double>();
            EXPECT_GT(lon, start.lon);
            EXPECT_LT(lon, airspace.find_waypoint("FAR")->pos.lon);
        }
    }
}
