#include <gtest/gtest.h>

#include <cmath>

#include "gfsim/parallel.hpp"
#include "gfsim/random.hpp"
#include "gfsim/stats.hpp"

using namespace gfsim;

TEST(KsTwoSample, Examples)
{
    auto same = ks_two_sample({1, 2, 3}, {1, 2, 3});
    EXPECT_EQ(same.statistic, 0);
    EXPECT_EQ(same.p_value, 1);
    EXPECT_EQ(ks_two_sample({0, 1}, {2, 3}).statistic, 1);
    EXPECT_DOUBLE_EQ(ks_two_sample({1, 2, 3, 4}, {1.5, 2.5, 3.5, 4.5}).statistic, 0.25);
    EXPECT_THROW(ks_two_sample({}, {1}), DomainError);
}

TEST(KsTwoSample, Ties)
{
    // ECDFs are compared after all tied values are consumed
    EXPECT_DOUBLE_EQ(ks_two_sample({0, 0, 1, 1}, {0, 1}).statistic, 0);
    EXPECT_DOUBLE_EQ(ks_two_sample({0, 0, 0, 1}, {0, 1}).statistic, 0.25);
}

TEST(Kolmogorov, KnownQuantiles)
{
    // scipy.special.kolmogorov
    EXPECT_NEAR(kolmogorov_survival(1.0), 0.26999967167735456, 1e-12);
    EXPECT_NEAR(kolmogorov_survival(1.628), 0.009975522431181053, 1e-12);
    EXPECT_NEAR(kolmogorov_survival(0.5), 0.9639452436648751, 1e-12);
    EXPECT_EQ(kolmogorov_survival(0), 1);
}

TEST(Exponentiality, Calibration)
{
    int passes = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed)
    {
        RandomStream r(seed);
        std::vector<double> x;
        for (int i = 0; i < 10000; ++i)
            x.push_back(r.exponential(2.0));
        passes += exponentiality_test(x, 2.0).p_value > 0.01;
    }
    EXPECT_GE(passes, 96);
}

TEST(Exponentiality, PowerAndDegenerate)
{
    RandomStream r(1);
    std::vector<double> x;
    for (int i = 0; i < 10000; ++i)
        x.push_back(r.exponential(2.0));
    EXPECT_LT(exponentiality_test(x, 4.0).p_value, 0.01);
    EXPECT_LT(exponentiality_test(std::vector<double>(1000, 0.5), 2.0).p_value, 1e-6);
    EXPECT_THROW(exponentiality_test({1.0, 0.0}, 1.0), DomainError);
}

TEST(MeanSe, Simple)
{
    auto e = mean_se({1, 2, 3, 4});
    EXPECT_DOUBLE_EQ(e.mean, 2.5);
    EXPECT_NEAR(e.se, std::sqrt(5.0 / 3.0 / 4.0), 1e-15);
}

TEST(ParallelMap, IndependentOfThreadCount)
{
    auto f = [](std::size_t i) { return RandomStream(5).split(i).uniform_at(0); };
    auto one = parallel_map(257, 1, f);
    auto four = parallel_map(257, 4, f);
    EXPECT_EQ(one, four);
    EXPECT_THROW(parallel_map(10, 3, [](std::size_t i) -> int {
                     if (i == 7)
                         throw std::runtime_error("boom");
                     return 0;
                 }),
                 std::runtime_error);
}

TEST(RoundSignificant, MergesUlpNeighbours)
{
    const double a = 0.1 + 0.2;
    const double b = 0.3;
    ASSERT_NE(a, b);
    auto r = round_significant({a, b, 0.0, -inf, 123456.789012345});
    EXPECT_EQ(r[0], r[1]);
    EXPECT_EQ(r[2], 0);
    EXPECT_EQ(r[3], -inf);
    EXPECT_NEAR(r[4], 123456.789, 1e-9);
}
