#include "atcsim/rng.hpp"

#include <gtest/gtest.h>

#include <set>
#include <vector>

using namespace atcsim;

TEST(Rng, SameSeedSameStream)
{
    Rng a(123);
    Rng b(123);
    for (int i = 0; i < 1000; ++i)
    {
        ASSERT_EQ(a.uniform01(), b.uniform01());
        ASSERT_EQ(a.normal(), b.normal());
        ASSERT_EQ(a.below(17), b.below(17));
    }
}

TEST(Rng, Mt19937_64ReferenceOutput)
{
    // The standard pins the 10000th output of the default-seeded engine.
    Rng r(5489u);
    for (int i = 0; i < 9999; ++i)
    {
        r.engine()();
    }
    EXPECT_EQ(r.engine()(), 9981545732273789042ull);
}

TEST(Rng, DerivedSeedsDiffer)
{
    std::set<std::uint64_t> seen;
    for (const char *label : {"SIM001/climb", "SIM001/descent", "SIM002/climb", "SIM001/latency", "generate"})
    {
        seen.insert(derive_seed(7, label));
    }
    seen.insert(derive_seed(8, "SIM001/climb"));
    EXPECT_EQ(seen.size(), 6u);
    EXPECT_EQ(derive_seed(7, "x"), derive_seed(7, "x"));
}

TEST(Rng, Moments)
{
    Rng r(99);
    const int n = 200000;
    double su = 0.0, sn = 0.0, sn2 = 0.0, se = 0.0;
    std::vector<int> counts(5, 0);
    for (int i = 0; i < n; ++i)
    {
        const double u = r.uniform01();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        su += u;
        const double z = r.normal();
        sn += z;
        sn2 += z * z;
        se += r.exponential(2.0);
        ++counts[r.below(5)];
    }
    EXPECT_NEAR(su / n, 0.5, 0.005);
    EXPECT_NEAR(sn / n, 0.0, 0.01);
    EXPECT_NEAR(sn2 / n, 1.0, 0.015);
    EXPECT_NEAR(se / n, 0.5, 0.005);
    for (int c : counts)
    {
        EXPECT_NEAR(c / double(n), 0.2, 0.005);
    }
}
