#include <gtest/gtest.h>

#include <cmath>

#include "gfsim/stats.hpp"
#include "gfsim/switching.hpp"

using namespace gfsim;

namespace {
const double log4 = std::log(4.0);

SnlpCharacteristics single_atom(double c = 0, double z = -std::log(4.0), double m = 1)
{
    SnlpCharacteristics s;
    s.c = c;
    s.levy.add_atom(z, m);
    return s;
}

SnlpCharacteristics random_atom_model(RandomStream& r)
{
    SnlpCharacteristics s;
    s.sigma = r.uniform() < 0.5 ? 0.0 : r.uniform();
    s.c = 2 * r.uniform() - 1;
    s.kill_rate = r.uniform() < 0.5 ? 0.0 : r.uniform();
    const int n = 1 + static_cast<int>(4 * r.uniform());
    for (int i = 0; i < n; ++i)
        s.levy.add_atom(-4 * r.uniform() - 1e-3, 2 * r.uniform());
    if (r.uniform() < 0.3)
        s.levy.add_atom(-ln2, r.uniform());
    return s;
}
}  // namespace

TEST(SwitchProbability, ValidateHalfline)
{
    auto v = validate_switch_probability(SwitchProbability::halfline(), single_atom().levy);
    EXPECT_TRUE(v.ok);
    EXPECT_DOUBLE_EQ(v.rate, 1.0);
    EXPECT_TRUE(v.complementarity);
    auto h = SwitchProbability::halfline();
    EXPECT_EQ(h(-ln2), 0.5);
    for (double z : {-3.0, -1.0, -0.5, -0.01})
        EXPECT_EQ(h(z) + h(reflect_jump(z)), 1.0);
}

TEST(SwitchProbability, ConstantZero)
{
    auto v = validate_switch_probability(SwitchProbability::constant(0), single_atom().levy);
    EXPECT_TRUE(v.ok);
    EXPECT_EQ(v.rate, 0);
    EXPECT_FALSE(v.complementarity);
}

TEST(SwitchProbability, DivergenceNamed)
{
    JumpMeasure m;
    m.small_jump_cutoff = 1e-3;
    m.add_density(DensityComponent::power(-1, 0, 0.5, 0.3));
    auto v = validate_switch_probability(SwitchProbability::constant(1), m);
    EXPECT_FALSE(v.ok);
    EXPECT_NE(v.message.find("power"), std::string::npos) << v.message;
    // The halfline kills the singular part near 0.
    EXPECT_TRUE(validate_switch_probability(SwitchProbability::halfline(), m).ok);
}

TEST(SwitchProbability, TabulatedComplementarity)
{
    auto t = SwitchProbability::tabulated({-ln2}, {1.0, 0.0});
    // 1 below -log 2, 0 above; -log 2 itself falls in one cell so the check fails there
    auto v = validate_switch_probability(t, single_atom().levy);
    EXPECT_TRUE(v.ok);
    EXPECT_DOUBLE_EQ(v.rate, 1.0);
    auto half = SwitchProbability::tabulated({-1.0}, {0.5, 0.5});
    EXPECT_TRUE(validate_switch_probability(half, single_atom().levy).complementarity);
    auto off = SwitchProbability::tabulated({-1.0}, {0.2, 0.5});
    EXPECT_FALSE(validate_switch_probability(off, single_atom().levy).complementarity);
}

TEST(SwitchingCharacteristics, SingleAtomAllSwitched)
{
    auto out = switching_characteristics(single_atom(), SwitchProbability::constant(1));
    EXPECT_EQ(out.sigma, 0);
    EXPECT_EQ(out.kill_rate, 0);
    EXPECT_NEAR(out.c, 0.5, 1e-15);
    ASSERT_EQ(out.levy.atoms.size(), 1u);
    EXPECT_NEAR(out.levy.atoms[0].z, std::log(0.75), 1e-15);
    EXPECT_NEAR(out.levy.atoms[0].mass, 1, 1e-15);
}

TEST(SwitchingCharacteristics, NoSwitchIsIdentity)
{
    auto in = single_atom(0.3);
    auto out = switching_characteristics(in, SwitchProbability::constant(0));
    EXPECT_EQ(out.c, in.c);
    ASSERT_EQ(out.levy.atoms.size(), 1u);
    EXPECT_EQ(out.levy.atoms[0].z, in.levy.atoms[0].z);
    EXPECT_EQ(out.levy.atoms[0].mass, in.levy.atoms[0].mass);
}

TEST(SwitchingCharacteristics, KappaInvariantSingleAtom)
{
    auto in = single_atom();
    auto out = switching_characteristics(in, SwitchProbability::constant(1));
    for (double q : {2.0, 3.0, 4.0})
        EXPECT_NEAR(cumulant(out, q), cumulant(in, q), 1e-10);
}

TEST(SwitchingCharacteristics, KappaInvariantRandomized)
{
    RandomStream r(77);
    for (int i = 0; i < 50; ++i)
    {
        auto in = random_atom_model(r);
        SwitchProbability p;
        switch (i % 3)
        {
            case 0: p = SwitchProbability::constant(r.uniform()); break;
            case 1: p = SwitchProbability::halfline(); break;
            default: p = SwitchProbability::tabulated({-2.0, -0.5}, {r.uniform(), r.uniform(), r.uniform()});
        }
        auto out = switching_characteristics(in, p);
        for (double q : {2.0, 2.5, 3.0, 4.0})
            EXPECT_NEAR(cumulant(out, q), cumulant(in, q), 1e-9) << "model " << i << " q " << q;
        EXPECT_TRUE(same_kappa_characteristics(in, out)) << "model " << i;
    }
}

TEST(SwitchingCharacteristics, KappaInvariantWithDensities)
{
    SnlpCharacteristics in;
    in.sigma = 0.2;
    in.c = 0.1;
    in.levy.small_jump_cutoff = 1e-3;
    in.levy.add_density(DensityComponent::uniform(-2, -0.3, 1.0));
    in.levy.add_density(DensityComponent::exponential(-inf, -1, 1.2, 0.5));
    in.levy.add_density(DensityComponent::power(-0.5, 0, 0.8, 0.2));
    for (auto p : {SwitchProbability::halfline(), SwitchProbability::tabulated({-1.0}, {0.3, 0.0})})
    {
        auto out = switching_characteristics(in, p);
        for (double q : {2.0, 3.0})
            EXPECT_NEAR(cumulant(out, q), cumulant(in, q), 1e-9) << p.name();
        EXPECT_TRUE(same_kappa_characteristics(in, out)) << p.name();
    }
}

TEST(ApplySwitching, NoJumps)
{
    SnlpCharacteristics c;
    c.c = -0.2;
    auto path = sample_snlp_path(c, 3, std::nullopt, RandomStream(1));
    auto sw = apply_switching(path, SwitchProbability::constant(1), RandomStream(2));
    EXPECT_EQ(sw.switch_time, inf);
    EXPECT_EQ(sw.path.value(2.5), path.value(2.5));
}

TEST(ApplySwitching, AllMarkedAndJunction)
{
    auto path = sample_snlp_path(single_atom(), 20, std::nullopt, RandomStream(5));
    ASSERT_FALSE(path.events().empty());
    auto sw = apply_switching(path, SwitchProbability::constant(1), RandomStream(6));
    const double t0 = path.events()[0].t;
    EXPECT_EQ(sw.switch_time, t0);
    EXPECT_NEAR(sw.path.events()[0].z, std::log(0.75), 1e-15);
    EXPECT_EQ(sw.path.events()[0].t, t0);
    const double before = std::exp(path.value_before(t0));
    EXPECT_NEAR(std::exp(path.value(t0)) + std::exp(sw.path.value(t0)), before, 1e-12);
    EXPECT_EQ(sw.path.kill_time(), path.kill_time());
}

TEST(ApplySwitching, FixedPointNeverSwitches)
{
    auto path = sample_snlp_path(single_atom(0, -ln2, 3), 5, std::nullopt, RandomStream(5));
    auto sw = apply_switching(path, SwitchProbability::constant(1), RandomStream(6));
    EXPECT_EQ(sw.switch_time, inf);
    EXPECT_DOUBLE_EQ(switching_time_rate(SwitchProbability::constant(1), single_atom(0, -ln2, 3).levy), 0);
}

TEST(ApplySwitching, SwitchTimeIsExponential)
{
    auto c = single_atom(0, -log4, 1.0);
    c.levy.add_atom(-0.3, 2.0);
    c.levy.add_atom(-ln2, 0.5);
    auto p = SwitchProbability::constant(0.4);
    const double rate = switching_time_rate(p, c.levy);
    EXPECT_NEAR(rate, 0.4 * 3.0, 1e-15);
    auto sampler = std::make_shared<SnlpSampler const>(c);
    std::vector<double> times;
    RandomStream root(11);
    for (int i = 0; i < 10000; ++i)
    {
        PathSkeleton path(sampler, 0, root.split(i).split(0));
        path.extend_to(40);
        auto sw = apply_switching(path, p, root.split(i).split(1));
        if (sw.switch_time < inf)
            times.push_back(sw.switch_time);
    }
    EXPECT_GT(times.size(), 9990u);
    EXPECT_GT(exponentiality_test(times, rate).p_value, 0.01);
}

TEST(SwitchingTimeRate, Examples)
{
    JumpMeasure m;
    m.add_atom(-log4, 2.5);
    EXPECT_DOUBLE_EQ(switching_time_rate(SwitchProbability::constant(1), m), 2.5);
    EXPECT_DOUBLE_EQ(switching_time_rate(SwitchProbability::constant(0), m), 0);
}

TEST(CanonicalSwitch, AtomRatios)
{
    auto p = canonical_switch_probability(single_atom());
    EXPECT_EQ(p(-log4), 0);
    EXPECT_EQ(p(std::log(0.75)), 1);
    auto half = canonical_switch_probability(single_atom(0, -ln2, 1));
    EXPECT_EQ(half(-ln2), 0.5);
    EXPECT_EQ(p(-3.0), 0);  // off support
}

TEST(CanonicalSwitch, DensityRatioComplementary)
{
    SnlpCharacteristics t;
    t.levy.add_density(DensityComponent::uniform(-2, -0.2, 1.0));
    t.levy.add_density(DensityComponent::exponential(-inf, -0.5, 2, 1));
    auto p = canonical_switch_probability(t);
    for (double z : {-1.9, -1.2, -0.9, -0.4, -0.25})
        EXPECT_NEAR(p(z) + p(reflect_jump(z)), 1, 1e-12) << z;
}

TEST(CanonicalSwitch, RoundTripAtoms)
{
    // xi has the atom below -log 2, the target its reflection.
    auto xi = single_atom();
    auto gamma = single_atom(0.5, std::log(0.75));
    ASSERT_TRUE(same_kappa_characteristics(xi, gamma));
    auto out = switching_characteristics(xi, canonical_switch_probability(gamma));
    EXPECT_NEAR(out.c, gamma.c, 1e-14);
    ASSERT_EQ(out.levy.atoms.size(), 1u);
    EXPECT_NEAR(out.levy.atoms[0].z, gamma.levy.atoms[0].z, 1e-14);
    EXPECT_NEAR(out.levy.atoms[0].mass, 1, 1e-14);

    // A split target: mass 0.3 at -log 4 and 0.7 at log(3/4).
    SnlpCharacteristics g2;
    g2.levy.add_atom(-log4, 0.3);
    g2.levy.add_atom(std::log(0.75), 0.7);
    g2.c = 0.7 * 0.5;
    ASSERT_TRUE(same_kappa_characteristics(xi, g2));
    auto out2 = switching_characteristics(xi, canonical_switch_probability(g2));
    EXPECT_NEAR(out2.c, g2.c, 1e-14);
    EXPECT_NEAR(out2.levy.atom_mass_at(-log4), 0.3, 1e-14);
    EXPECT_NEAR(out2.levy.atom_mass_at(std::log(0.75)), 0.7, 1e-14);
}

TEST(SameKappa, Examples)
{
    auto a = single_atom();
    auto b = single_atom(0.5, std::log(0.75));
    EXPECT_TRUE(same_kappa_characteristics(a, b));
    EXPECT_TRUE(same_kappa_characteristics(a, a));
    auto k = b;
    k.kill_rate = 1;
    EXPECT_FALSE(same_kappa_characteristics(a, k));
    auto why = kappa_mismatch_reason(a, k);
    ASSERT_TRUE(why);
    EXPECT_NE(why->find("kill"), std::string::npos) << *why;
    auto doubled = single_atom(0, -log4, 2);
    EXPECT_FALSE(same_kappa_characteristics(a, doubled));
    auto drift = single_atom(0.1, std::log(0.75));
    EXPECT_FALSE(same_kappa_characteristics(a, drift));
}
