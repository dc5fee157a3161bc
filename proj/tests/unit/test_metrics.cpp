#include "atcsim/geo.hpp"
#include "atcsim/metrics.hpp"
#include "atcsim/rng.hpp"
#include "atcsim/units.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace atcsim;

namespace
{
    std::vector<TrafficPoint> random_snapshot(Rng &rng, int n)
    {
        std::vector<TrafficPoint> s;
        for (int i = 0; i < n; ++i)
        {
            // Dense box so a good share of pairs are close.
            s.push_back({"AC" + std::to_string(100 + rng.below(900)) + "_" + std::to_string(i),
                         {52.0 + rng.uniform(-0.4, 0.4), -1.0 + rng.uniform(-0.6, 0.6)},
                         300.0 + 10.0 * static_cast<double>(rng.below(4)) + rng.uniform(-4.0, 4.0)});
        }
        return s;
    }

    std::vector<PairConflict> all_pairs(const std::vector<TrafficPoint> &s, double lateral, double vertical)
    {
        std::vector<PairConflict> out;
        for (std::size_t i = 0; i < s.size(); ++i)
        {
            for (std::size_t j = i + 1; j < s.size(); ++j)
            {
                const double d = distance_nmi(s[i].position, s[j].position);
                const double v = std::abs(s[i].fl - s[j].fl);
                if (d < lateral && v < vertical)
                {
                    const bool swap = s[j].callsign < s[i].callsign;
                    out.push_back({swap ? s[j].callsign : s[i].callsign, swap ? s[i].callsign : s[j].callsign, d, v});
                }
            }
        }
        std::sort(out.begin(), out.end(), [](const auto &x, const auto &y) { return std::tie(x.a, x.b) < std::tie(y.a, y.b); });
        return out;
    }

    // Great-circle distance by the spherical law of cosines, for hand-style geometry.
    // Same pairs in the same order; distances agree to rounding.
    void expect_same(const std::vector<PairConflict> &got, const std::vector<PairConflict> &want)
    {
        ASSERT_EQ(got.size(), want.size());
        for (std::size_t i = 0; i < got.size(); ++i)
        {
            EXPECT_EQ(got[i].a, want[i].a);
            EXPECT_EQ(got[i].b, want[i].b);
            EXPECT_NEAR(got[i].lateral_nmi, want[i].lateral_nmi, 1e-9);
            EXPECT_EQ(got[i].vertical_fl, want[i].vertical_fl);
        }
    }

    double cosine_rule_nmi(LatLon a, LatLon b)
    {
        const double p1 = a.lat * kDegToRad, p2 = b.lat * kDegToRad, dl = (b.lon - a.lon) * kDegToRad;
        return std::acos(std::sin(p1) * std::sin(p2) + std::cos(p1) * std::cos(p2) * std::cos(dl)) * kEarthRadiusNmi;
    }
}

TEST(Separation, MatchesAllPairsOracle)
{
    Rng rng(2024);
    std::size_t conflicts = 0;
    for (int k = 0; k < 300; ++k)
    {
        const auto snap = random_snapshot(rng, 1 + static_cast<int>(rng.below(50)));
        const auto expected = all_pairs(snap, kLateralMinimumNmi, kVerticalMinimumFl);
        expect_same(scan_separation(snap), expected);
        expect_same(scan_proximity(snap), all_pairs(snap, kProximityRangeNmi, kVerticalMinimumFl));
        conflicts += expected.size();
    }
    EXPECT_GT(conflicts, 100u);
}

TEST(Separation, VerticalSeparationHolds)
{
    const std::vector<TrafficPoint> s{{"A", {52.0, -1.0}, 300.0}, {"B", {52.0, -1.0}, 320.0}};
    EXPECT_TRUE(scan_separation(s).empty());
    EXPECT_NEAR(assured_margin(s), 2.0, 1e-12);
}

TEST(Separation, AssuredMarginOracle)
{
    Rng rng(6);
    for (int k = 0; k < 100; ++k)
    {
        const auto snap = random_snapshot(rng, 2 + static_cast<int>(rng.below(20)));
        double expected = kMarginCap;
        for (std::size_t i = 0; i < snap.size(); ++i)
        {
            for (std::size_t j = i + 1; j < snap.size(); ++j)
            {
                const double m = std::max(distance_nmi(snap[i].position, snap[j].position) / 5.0,
                                          std::abs(snap[i].fl - snap[j].fl) / 10.0);
                expected = std::min(expected, m);
            }
        }
        EXPECT_NEAR(assured_margin(snap), expected, 1e-12);
    }
    EXPECT_EQ(assured_margin({}), kMarginCap);
}

TEST(Separation, MonitorEventLifecycle)
{
    SeparationMonitor m;
    const PairConflict c{"A", "B", 4.9, 5.0};
    EXPECT_EQ(m.update(0.0, {c}).opened.size(), 1u);
    EXPECT_TRUE(m.update(6.0, {c}).opened.empty());
    EXPECT_TRUE(m.update(12.0, {c}).closed.empty());
    const auto t = m.update(18.0, {});
    ASSERT_EQ(t.closed.size(), 1u);
    const SeparationEvent &e = t.closed[0];
    EXPECT_EQ(e.end - e.start, 18.0);
    EXPECT_EQ(e.min_lateral_nmi, 4.9);
    EXPECT_EQ(e.min_vertical_fl, 5.0);
    EXPECT_FALSE(e.open);
    EXPECT_EQ(m.closed_events().size(), 1u);
    EXPECT_TRUE(m.open_events().empty());
}

TEST(Reward, EmptySectorIsZero)
{
    EXPECT_EQ(compose_reward({}, RewardWeights{}), 0.0);
}

TEST(Reward, TermsCombine)
{
    RewardInputs in;
    in.snapshot = {{"A", {52.0, -1.0}, 300.0}, {"B", {52.0, -0.95}, 305.0}};
    in.clearances_issued = 2;
    in.progress_nmi = 10.0;
    in.coordinations_satisfied = 1;
    const RewardWeights w;
    const double d = distance_nmi(in.snapshot[0].position, in.snapshot[1].position);
    const double expected = -w.los - w.proximity * std::pow(1.0 - d / 10.0, 2) - 2.0 * w.clearance +
                            10.0 * w.progress_per_nmi + w.coordination;
    EXPECT_NEAR(compose_reward(in, w), expected, 1e-12);
}

TEST(Reward, ProximityDerivativeMatchesFiniteDifference)
{
    Rng rng(31);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i)
    {
        const double d = rng.uniform(0.01, 9.99);
        const double h = 1e-6;
        const double fd = (proximity_term(d + h) - proximity_term(d - h)) / (2.0 * h);
        worst = std::max(worst, std::abs(fd - proximity_term_derivative(d)));
    }
    EXPECT_LT(worst, 1e-4);
    EXPECT_EQ(proximity_term(10.0), 0.0);
    EXPECT_EQ(proximity_term(0.0), 1.0);
}

TEST(Efficiency, ThreeDiProxyArithmetic)
{
    EfficiencyInput perfect{100.0, 100.0, 600.0, 0.0, true};
    EXPECT_EQ(inefficiency_3di_proxy(perfect), 0.0);
    EfficiencyInput extended{100.0, 110.0, 600.0, 0.0, true};
    EXPECT_NEAR(inefficiency_3di_proxy(extended), 0.05, 1e-12);
    EfficiencyInput low{100.0, 100.0, 600.0, 300.0, true};
    EXPECT_NEAR(inefficiency_3di_proxy(low), 0.25, 1e-12);
    EfficiencyInput no_plan{100.0, 120.0, 600.0, 300.0, false};
    EXPECT_NEAR(inefficiency_3di_proxy(no_plan), 0.1, 1e-12);
}

TEST(Efficiency, DogLegAgainstHandGeometry)
{
    const LatLon a{0.0, 0.0};
    const LatLon b{0.0, 2.0};
    const LatLon c{0.5, 1.0};
    const std::vector<LatLon> route{a, b};
    const double reference = plan_reference_nmi(route, a, b);
    EXPECT_NEAR(reference, cosine_rule_nmi(a, b), 1e-6);
    const double flown = cosine_rule_nmi(a, c) + cosine_rule_nmi(c, b);
    const double proxy = inefficiency_3di_proxy({reference, flown, 0.0, 0.0, true});
    EXPECT_NEAR(proxy, 0.5 * (flown / cosine_rule_nmi(a, b) - 1.0), 1e-6);
    EXPECT_NEAR(route_position_nmi(route, c), 60.04, 0.01);
}
