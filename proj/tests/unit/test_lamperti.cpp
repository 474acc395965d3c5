#include <gtest/gtest.h>

#include <cmath>

#include "gfsim/lamperti.hpp"
#include "gfsim/stats.hpp"

using namespace gfsim;

namespace {
std::shared_ptr<SnlpSampler const> sampler_of(SnlpCharacteristics const& c)
{
    return std::make_shared<SnlpSampler const>(c);
}

SnlpCharacteristics pure_drift(double c, double k = 0)
{
    SnlpCharacteristics s;
    s.c = c;
    s.kill_rate = k;
    return s;
}

SnlpCharacteristics jumpy()
{
    SnlpCharacteristics s;
    s.c = 0.6;
    s.levy.add_atom(-0.4, 1.5);
    s.levy.add_density(DensityComponent::uniform(-2, -0.1, 0.7));
    return s;
}
}  // namespace

TEST(TimeChange, IdentityForAlphaZero)
{
    PathSkeleton sk(sampler_of(jumpy()), 0, RandomStream(3));
    for (double t : {0.0, 0.4, 2.5, 10.0})
        EXPECT_EQ(time_change(sk, 0, t), t);
}

TEST(TimeChange, LinearDriftClosedForm)
{
    PathSkeleton sk(sampler_of(pure_drift(1)), 0, RandomStream(3));
    for (double t : {0.1, 0.5, 0.9, 0.999})
        EXPECT_NEAR(time_change(sk, 1, t), -std::log1p(-t), 1e-12 * (1 - std::log1p(-t)));
    EXPECT_EQ(time_change(sk, 1, 1.0), inf);
    EXPECT_EQ(time_change(sk, 1, 1.5), inf);
}

TEST(TimeChange, KilledSkeleton)
{
    // xi = 0 killed at zeta: the clock stops at zeta
    PathSkeleton sk(sampler_of(pure_drift(0, 2.0)), 0, RandomStream(8));
    const double zeta = sk.kill_time();
    ASSERT_TRUE(std::isfinite(zeta));
    EXPECT_NEAR(time_change(sk, 1, 0.5 * zeta), 0.5 * zeta, 1e-12);
    EXPECT_EQ(time_change(sk, 1, zeta), inf);
    EXPECT_EQ(time_change(sk, 1, 2 * zeta), inf);
}

TEST(TimeChange, StrictlyIncreasing)
{
    PathSkeleton sk(sampler_of(jumpy()), 0, RandomStream(4));
    double prev = -1;
    for (double t = 0; t < 3; t += 0.05)
    {
        const double r = time_change(sk, 0.7, t);
        ASSERT_TRUE(std::isfinite(r));
        EXPECT_GT(r, prev);
        prev = r;
    }
}

TEST(SelfSimilarPath, HomogeneousIsScaledExponential)
{
    PathSkeleton sk(sampler_of(jumpy()), 0, RandomStream(5));
    auto cp = self_similar_path(sk, 0, 2, 4);
    for (double t : {0.0, 0.3, 1.1, 3.9})
        EXPECT_NEAR(cp.size_at(t), 2 * std::exp(sk.value(t)), 1e-12 * cp.size_at(t));
    // round trip at event times
    for (auto const& e : sk.events())
    {
        if (e.t > 4)
            break;
        EXPECT_NEAR(std::log(cp.size_at(e.t) / 2), sk.value(e.t), 1e-12);
        EXPECT_NEAR(std::log(cp.size_before(e.t) / 2), sk.value_before(e.t), 1e-12);
    }
}

TEST(SelfSimilarPath, LinearDriftExplodesAtOne)
{
    PathSkeleton sk(sampler_of(pure_drift(1)), 0, RandomStream(5));
    auto cp = self_similar_path(sk, 1, 1, 2);
    for (double t : {0.0, 0.25, 0.5, 0.9, 0.99})
        EXPECT_NEAR(cp.size_at(t), 1 / (1 - t), 1e-10 / (1 - t));
    EXPECT_NEAR(cp.death_time, 1, 1e-12);
    EXPECT_EQ(cp.end_kind, CellEnd::absorbed);
    EXPECT_EQ(cp.size_at(1.5), 0);
}

TEST(SelfSimilarPath, DecreasingDriftDiesInFiniteTime)
{
    // xi(s) = -s, alpha = -1: t = int e^{-s} ds, death at 1 with size -> 0
    PathSkeleton sk(sampler_of(pure_drift(-1)), 0, RandomStream(5));
    auto cp = self_similar_path(sk, -1, 1, 2);
    for (double t : {0.0, 0.5, 0.9})
        EXPECT_NEAR(cp.size_at(t), 1 - t, 1e-10);
    EXPECT_NEAR(cp.death_time, 1, 1e-12);
}

TEST(SelfSimilarPath, JumpRatiosPreserved)
{
    PathSkeleton sk(sampler_of(jumpy()), 0, RandomStream(6));
    auto cp = self_similar_path(sk, 0.8, 1.5, 3);
    ASSERT_FALSE(cp.jumps.empty());
    double prev_t = -1;
    for (auto const& j : cp.jumps)
    {
        EXPECT_NEAR(j.after / j.before, std::exp(j.z), 1e-12);
        EXPECT_LT(j.after, j.before);
        EXPECT_GT(j.after, 0);
        EXPECT_GE(j.t, prev_t);
        prev_t = j.t;
        EXPECT_NEAR(j.fragment() + j.after, j.before, 1e-12 * j.before);
    }
}

TEST(SelfSimilarPath, RejectsNonpositiveStart)
{
    PathSkeleton sk(sampler_of(jumpy()), 0, RandomStream(6));
    EXPECT_THROW(self_similar_path(sk, 1, 0, 1), DomainError);
}

TEST(SelfSimilarPath, ScalingLaw)
{
    // 2 X(2^alpha t) from x has the law of X(t) from 2x
    const double alpha = 0.5;
    const double x = 1;
    const double c = 2;
    auto sampler = sampler_of(jumpy());
    for (double t : {0.25, 0.5})
    {
        std::vector<double> a;
        std::vector<double> b;
        RandomStream ra(101);
        RandomStream rb(202);
        const double ts = std::pow(c, alpha) * t;
        for (int i = 0; i < 10000; ++i)
        {
            PathSkeleton s1(sampler, 0, ra.split(i));
            a.push_back(c * self_similar_path(s1, alpha, x, ts).size_at(ts));
            PathSkeleton s2(sampler, 0, rb.split(i));
            b.push_back(self_similar_path(s2, alpha, c * x, t).size_at(t));
        }
        EXPECT_GT(ks_two_sample(a, b).p_value, 0.01) << "t = " << t;
    }
}

TEST(SelfSimilarPath, ScalingExactWithSharedStream)
{
    // With the same skeleton the identity holds pathwise.
    auto sampler = sampler_of(jumpy());
    PathSkeleton s1(sampler, 0, RandomStream(9));
    PathSkeleton s2(sampler, 0, RandomStream(9));
    auto small = self_similar_path(s1, 1.3, 1, 5);
    auto big = self_similar_path(s2, 1.3, 3, 1);
    for (double t : {0.01, 0.1, 0.3, 0.7})
    {
        const double ts = std::pow(3.0, 1.3) * t;
        if (ts >= small.death_time || t >= big.death_time)
            continue;
        EXPECT_NEAR(3 * small.size_at(ts), big.size_at(t), 1e-9 * big.size_at(t));
    }
}

TEST(SelfSimilarPath, BrownianPartMatchesHomogeneous)
{
    SnlpCharacteristics s = jumpy();
    s.sigma = 0.5;
    auto sampler = sampler_of(s);
    PathSkeleton sk(sampler, 1e-3, RandomStream(12));
    auto cp = self_similar_path(sk, 0, 1, 2);
    for (double t : {0.0005, 0.3, 1.2345})
        EXPECT_NEAR(cp.size_at(t), std::exp(sk.value(t)), 1e-12 * cp.size_at(t));
}
