#include <gtest/gtest.h>

#include <potcap/fixtures.hpp>
#include <potcap/thinness.hpp>

using namespace potcap;

namespace {

ThinnessOptions quick() {
    ThinnessOptions o;
    o.sphere_resolution = 1000;
    return o;
}

/// Minimum distance from c to the segment p + t u, t in [0, len].
double segment_distance(const Point& p, const Point& u, double len, const Point& c) {
    const double t = std::clamp(dot(sub(c, p), u), 0.0, len);
    return dist(add(p, scaled(u, t)), c);
}

}  // namespace

TEST(Tail, GeometricFit) {
    std::vector<double> t;
    for (int i = 0; i < 10; ++i) t.push_back(std::ldexp(1.0, -i));
    auto m = fit_tail(t);
    EXPECT_NEAR(m.ratio, 0.5, 1e-12);
    EXPECT_NEAR(m.tail, t.back(), 1e-12);
    EXPECT_EQ(series_verdict(m), Verdict::thin);

    auto c = fit_tail(std::vector<double>(8, 0.3));
    EXPECT_NEAR(c.ratio, 1.0, 1e-12);
    EXPECT_TRUE(std::isinf(c.tail));
    EXPECT_EQ(series_verdict(c), Verdict::non_thin);

    EXPECT_EQ(series_verdict(fit_tail(std::vector<double>(6, 0.0))), Verdict::thin);
    EXPECT_EQ(series_verdict(fit_tail({1, 1, 0, 1, 0, 1})), Verdict::inconclusive);
    // decay slower than the margin allows still counts as non-thin
    std::vector<double> slow;
    for (int i = 0; i < 8; ++i) slow.push_back(std::pow(0.95, i));
    EXPECT_EQ(series_verdict(fit_tail(slow)), Verdict::non_thin);
}

TEST(Thinness, EmptySetIsThin) {
    auto r = thinness_test(RegionSet(3), Point{0, 0, 0}, 2.0, 0.5, 6, quick());
    for (double t : r.terms) EXPECT_EQ(t, 0.0);
    EXPECT_EQ(r.verdict, Verdict::thin);
}

TEST(Thinness, Preconditions) {
    EXPECT_THROW(thinness_test(RegionSet(3), Point{0, 0, 0}, 2.0, 0.5, 4), domain_error);
    EXPECT_THROW(thinness_test(RegionSet(3), Point{0, 0}, 2.0, 0.5, 6), domain_error);
    EXPECT_THROW(thinness_test(RegionSet(3), Point{0, 0, 0}, 1.0, 0.5, 6), domain_error);
    EXPECT_THROW(thinness_test(RegionSet(3), Point{0, 0, 0}, 2.0, 0.0, 6), domain_error);
}

TEST(Thinness, ThinFamilyTermsHalve) {
    const double delta = 0.5;
    auto r = thinness_test(fixtures::thin_ball_family(3, delta, 12), Point{0, 0, 0}, 2.0, delta, 6, quick());
    EXPECT_EQ(r.verdict, Verdict::thin);
    for (std::size_t q = 0; q < r.terms.size(); ++q) {
        // ball of radius rho_i has capacity rho_i; c(3,2) = 1
        const double oracle = std::ldexp(1.0, -static_cast<int>(q) - 1);
        EXPECT_NEAR(r.terms[q] / oracle, 1.0, 0.05) << q;
        EXPECT_NEAR(r.numerators[q] / r.denominators[q], r.terms[q], 1e-12);
        if (q) { EXPECT_GE(r.partial_sums[q], r.partial_sums[q - 1]); }
    }
}

TEST(Thinness, NonThinFamilyTermsConstant) {
    auto r = thinness_test(fixtures::nonthin_ball_family(3, 0.5, 12), Point{0, 0, 0}, 2.0, 0.5, 6, quick());
    EXPECT_EQ(r.verdict, Verdict::non_thin);
    for (double t : r.terms) EXPECT_NEAR(t, 0.25, 0.25 * 0.05);
}

TEST(Thinness, LogKernelWeights) {
    auto r = thinness_test(fixtures::thin_ball_family(3, 0.5, 12), Point{0, 0, 0}, 3.0, 0.5, 5, quick());
    for (std::size_t q = 0; q < r.terms.size(); ++q) {
        EXPECT_NEAR(r.terms[q], (q + 1) * r.unit_values[q], 1e-12);
        EXPECT_NEAR(r.denominators[q], 1.0 / (q + 1), 1e-15);
    }
}

TEST(Thinness, RescalingIsExactOnLockstepGrids) {
    // Numerator of shell i computed at its own scale against the unit-annulus value.
    const double delta = 0.5;
    const int i = 3;
    const RegionSet e = fixtures::thin_ball_family(3, delta, 8);
    const Resolution res{8, 0.0, 1.0, 0.5};
    const CapacityResult unit = unit_shell_capacity(e, Point{0, 0, 0}, 2.0, delta, i, res, {});

    const double s = std::ldexp(delta, -i);
    CapacityProblem pb;
    pb.set = RegionSet(3);
    const RegionSet pieces = unit_shell_pieces(e, Point{0, 0, 0}, 1.0 / s);
    for (const auto& prim : pieces.primitives())
        pb.set.add(scale_primitive(prim, s));
    pb.omega = Domain::annulus(Point{0, 0, 0}, 0.5 * s, 4.0 * s);
    pb.resolution = res;
    pb.sample_filter = [s](std::span<const double> x) {
        const double r = norm(x);
        return r >= s && r <= 2.0 * s;
    };
    pb.filter_box = Box{Point(3, -2.0 * s), Point(3, 2.0 * s)};
    const CapacityResult direct = capacity(pb);
    EXPECT_NEAR(direct.value, s * unit.value, 1e-9 * s * unit.value);
}

TEST(Ray, EmptySetTakesFirstDirection) {
    const RegionSet e(3);
    auto r = thinness_test(e, Point{0, 0, 0}, 2.0, 0.5, 5, quick());
    auto ray = find_avoiding_ray(e, Point{0, 0, 0}, r);
    EXPECT_EQ(ray.status, RayStatus::verified);
    EXPECT_EQ(ray.direction, sphere_points(3, 2000).point(0));
    EXPECT_EQ(ray.samples_tried, 1u);
}

TEST(Ray, ThinFamilyAvoided) {
    const double delta = 0.5;
    const RegionSet e = fixtures::thin_ball_family(3, delta, 30);
    auto r = thinness_test(e, Point{0, 0, 0}, 2.0, delta, 6, quick());
    auto ray = find_avoiding_ray(e, Point{0, 0, 0}, r);
    ASSERT_TRUE(ray.ok());
    EXPECT_TRUE(ray.budget_met);
    for (const auto& prim : e.primitives()) {
        const auto& b = std::get<Ball>(prim);
        EXPECT_GT(segment_distance(Point{0, 0, 0}, ray.direction, ray.reach, b.center), b.radius);
    }
}

TEST(Ray, ConeFixtureFails) {
    const RegionSet e = fixtures::cone_fixture(0.5, 40);
    ThinnessOptions o = quick();
    o.resolution.cells = 4;
    auto r = thinness_test(e, Point{0, 0, 0}, 2.0, 0.5, 5, o);
    EXPECT_EQ(r.verdict, Verdict::non_thin);
    auto ray = find_avoiding_ray(e, Point{0, 0, 0}, r);
    EXPECT_FALSE(ray.ok());
    EXPECT_EQ(ray.status, RayStatus::budget_exceeded);
    EXPECT_EQ(ray.blocked, ray.samples_tried);
}
