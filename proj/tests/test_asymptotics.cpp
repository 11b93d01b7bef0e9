#include <gtest/gtest.h>

#include <potcap/asymptotics.hpp>
#include <potcap/fixtures.hpp>

using namespace potcap;

namespace {

MultiscaleOptions opts(std::size_t samples = 100, double lambda = 10.0) {
    MultiscaleOptions o;
    o.shells = 6;
    o.lambda = lambda;
    o.samples_per_shell = samples;
    return o;
}

PointCloud origin() {
    PointCloud s(3);
    s.push_back(Point{0, 0, 0});
    return s;
}

}  // namespace

TEST(ShellSamples, LieInClosedShell) {
    const auto xs = shell_samples(Point{0.1, 0, 0}, 0.5, 3, 300);
    const auto w = dyadic_shell(0.5, 3);
    for (std::size_t j = 0; j < xs.size(); ++j) {
        const double r = dist(xs[j], Point{0.1, 0, 0});
        ASSERT_TRUE(w.in_shell(r)) << r;
    }
}

TEST(Multiscale, SingleDistantAtom) {
    DiscreteMeasure mu(3);
    mu.add(Point{1, 0, 0}, 1.0);
    const double delta = 0.25;
    auto r = multiscale_verify(mu, origin(), 0.0, 2.0, delta, opts());
    ASSERT_FALSE(r.refused);
    EXPECT_EQ(r.exceptional, 0u);
    for (const auto& sh : r.shells) {
        for (double t : sh.term3) EXPECT_EQ(t, 0.0);
        EXPECT_TRUE(sh.bounds_dominate);
    }
    // value = 1/|x - q| and n - alpha - d = 1: the sup sits on the outer shell
    EXPECT_LE(r.c_star, delta / (1.0 - delta) + 1e-12);
    EXPECT_GE(r.c_star, 0.5 * delta / (1.0 + delta));
}

TEST(Multiscale, SegmentStableUnderDoubling) {
    double c[2];
    for (int m = 1; m <= 2; ++m) {
        const auto mu = segment_measure(Point{-0.5, 0, 0}, Point{0.5, 0, 0}, 2000 * m, 1.0);
        MultiscaleOptions o = opts(100 * m);
        o.sphere_constant = 1.0;
        auto r = multiscale_verify(mu, origin(), 1.0, 1.5, 0.25, o);
        ASSERT_FALSE(r.refused);
        c[m - 1] = r.c_star;
        EXPECT_TRUE(std::isfinite(r.c_star));
        for (const auto& sh : r.shells) {
            EXPECT_TRUE(sh.bounds_dominate);
            for (std::size_t j = 0; j < sh.value.size(); ++j)
                if (!sh.exceptional[j]) { ASSERT_LE(sh.value[j] * std::pow(sh.radius[j], 0.5), r.c_star * (1 + 1e-12)); }
        }
    }
    EXPECT_LT(std::max(c[0], c[1]) / std::min(c[0], c[1]), 2.0);
}

TEST(Multiscale, BudgetsAreExactShellMasses) {
    const auto mu = segment_measure(Point{-0.5, 0, 0}, Point{0.5, 0, 0}, 3000, 1.0);
    MultiscaleOptions o = opts(20, 7.0);
    o.sphere_constant = 1.0;
    auto r = multiscale_verify(mu, origin(), 1.0, 1.5, 0.25, o);
    for (const auto& sh : r.shells) {
        const auto w = dyadic_shell(0.25, sh.index);
        double mass = 0.0;
        for (std::size_t a = 0; a < mu.size(); ++a)
            if (w.in_fat_shell(norm(mu.atoms()[a]))) mass += mu.weights()[a];
        EXPECT_EQ(sh.fat_mass, mass);
        EXPECT_NEAR(sh.budget, mass / (7.0 * std::exp2(sh.index * 0.5)), 1e-12 * sh.budget);
    }
    double sum = 0.0;
    for (std::size_t q = 0; q < r.budget_terms.size(); ++q) {
        sum += r.budget_terms[q];
        EXPECT_DOUBLE_EQ(r.budget_partial_sums[q], sum);
    }
}

TEST(Multiscale, PositiveEpsilonGivesThinBudgets) {
    const auto mu = fixtures::disc_measure(3, 20000, 1.0, 7);
    MultiscaleOptions o = opts(40, 10.0);
    o.shells = 8;
    o.sphere_constant = 1.0;
    auto r = multiscale_verify(mu, origin(), 1.0, 1.5, 0.25, o);
    ASSERT_FALSE(r.refused);
    EXPECT_GT(r.epsilon, 0.2);
    EXPECT_EQ(r.budget_verdict, Verdict::thin);
}

TEST(Multiscale, RefusesWithoutGrowthCertificate) {
    DiscreteMeasure mu(3);
    mu.add(Point{0, 0, 0}, 1.0);
    auto r = multiscale_verify(mu, origin(), 0.5, 1.5, 0.25, opts());
    EXPECT_TRUE(r.refused);
    EXPECT_NE(r.reason.find("dimension"), std::string::npos);
}

TEST(Multiscale, Preconditions) {
    DiscreteMeasure mu(3);
    mu.add(Point{1, 0, 0}, 1.0);
    EXPECT_THROW(multiscale_verify(mu, origin(), 1.0, 2.0, 0.25, opts()), domain_error);  // d >= n - alpha
    EXPECT_THROW(multiscale_verify(mu, origin(), 0.0, 3.0, 0.25, opts()), domain_error);
    EXPECT_THROW(multiscale_verify(mu, PointCloud(3), 0.0, 2.0, 0.25, opts()), domain_error);
}

TEST(LogLimit, PureAtomIsExact) {
    for (double m : {1.0, 2.5}) {
        DiscreteMeasure mu(3);
        mu.add(Point{0, 0, 0}, m);
        auto r = log_limit_verify(mu, Point{0, 0, 0}, 0.1, KernelSpec::log(3, 4.0));
        EXPECT_EQ(r.atom_mass, m);
        EXPECT_EQ(r.exceptional, 0u);
        EXPECT_NEAR(r.limit, m, 1e-9 * m);
        EXPECT_EQ(r.weighted_sum, 0.0);
    }
}

TEST(LogLimit, AtomWithBackground) {
    const auto mu = fixtures::atom_with_background(3, 1.0, 10000, 1.0, 3);
    LogLimitOptions o;
    o.shells = 10;
    auto r = log_limit_verify(mu, Point{0, 0, 0}, 0.1, KernelSpec::log(3, 4.0), o);
    EXPECT_NEAR(r.limit, 1.0, 0.05);
    EXPECT_LE(r.weighted_sum, r.weighted_bound);
    double prev = std::numeric_limits<double>::infinity();
    for (const auto& sh : r.shells) {
        EXPECT_LE(sh.weight, prev);
        prev = sh.weight;
        for (std::size_t j = 0; j < sh.ratio.size(); ++j)
            if (!sh.exceptional[j]) { EXPECT_TRUE(std::isfinite(sh.ratio[j])); }
    }
    double smallest = 1.0;
    for (const auto& sh : r.shells)
        for (double d : sh.radius) smallest = std::min(smallest, d);
    EXPECT_LE(smallest, 2e-4);
}

TEST(LogLimit, NoAtomGivesZero) {
    const auto mu = fixtures::atom_with_background(3, 0.0, 10000, 1.0, 3);
    auto r = log_limit_verify(mu, Point{0, 0, 0}, 0.1, KernelSpec::log(3, 4.0));
    EXPECT_EQ(r.atom_mass, 0.0);
    EXPECT_LE(std::abs(r.limit), 0.02);
}

TEST(LogLimit, Preconditions) {
    DiscreteMeasure mu(3);
    mu.add(Point{0, 0, 0}, 1.0);
    EXPECT_THROW(log_limit_verify(mu, Point{0, 0, 0}, 0.1, KernelSpec::riesz(3, 2.0)), domain_error);
    EXPECT_THROW(log_limit_verify(mu, Point{0, 0, 0}, 1.5, KernelSpec::log(3, 4.0)), domain_error);
}
