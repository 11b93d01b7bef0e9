#include <gtest/gtest.h>

#include <potcap/axioms.hpp>
#include <potcap/capacity.hpp>
#include <potcap/fixtures.hpp>
#include <potcap/simplex.hpp>

using namespace potcap;

TEST(Simplex, SmallProgram) {
    // max x + y  s.t.  x + 2y <= 4,  3x + y <= 6
    auto r = solve_packing_lp(2, 2, {1, 2, 3, 1}, {4, 6}, {1, 1});
    ASSERT_EQ(r.status, LPResult::Status::optimal);
    EXPECT_NEAR(r.objective, 2.8, 1e-12);
    EXPECT_NEAR(r.x[0], 1.6, 1e-12);
    EXPECT_NEAR(r.x[1], 1.2, 1e-12);
    EXPECT_NEAR(r.dual[0], 0.4, 1e-12);
    EXPECT_NEAR(r.dual[1], 0.2, 1e-12);
}

TEST(Simplex, UnboundedAndDegenerate) {
    auto u = solve_packing_lp(1, 2, {1, 0}, {1}, {0, 1});
    EXPECT_EQ(u.status, LPResult::Status::unbounded);
    // Many redundant zero-slack rows.
    std::vector<double> a, b;
    for (int i = 0; i < 30; ++i) {
        a.insert(a.end(), {1.0, 1.0 + i * 1e-3, 1.0});
        b.push_back(i % 3 == 0 ? 0.0 : 1.0);
    }
    auto d = solve_packing_lp(30, 3, a, b, {1, 1, 1});
    EXPECT_EQ(d.status, LPResult::Status::optimal);
    EXPECT_NEAR(d.objective, 0.0, 1e-12);
}

TEST(Capacity, EmptySet) {
    CapacityProblem pb;
    pb.set = RegionSet(3);
    auto r = capacity(pb);
    EXPECT_EQ(r.value, 0.0);
    EXPECT_EQ(r.status, "empty");
    EXPECT_TRUE(r.ok());
}

TEST(Capacity, SinglePointVanishesWithTruncation) {
    double last = std::numeric_limits<double>::infinity();
    for (double f : {0.5, 0.1, 0.01}) {
        CapacityProblem pb;
        pb.set = RegionSet(3);
        pb.set.add(PointSet{PointCloud(3, {Point{0.3, 0.1, 0}}), 0.0});
        pb.resolution.h = 0.2;
        pb.resolution.trunc_factor = f;
        auto r = capacity(pb);
        ASSERT_TRUE(r.ok());
        EXPECT_NEAR(r.value, 0.2 * f, 1e-12);  // an atom of mass trunc^{n-alpha} at the point
        EXPECT_LT(r.value, last);
        last = r.value;
    }
}

TEST(Capacity, BallRadiusCoarse) {
    CapacityProblem pb;
    pb.set = fixtures::ball_fixture(3, 0.5);
    pb.resolution.cells = 10;
    auto r = capacity(pb);
    ASSERT_TRUE(r.ok()) << r.status;
    EXPECT_NEAR(r.value, 0.5, 0.05);
    EXPECT_LE(r.gap, 1e-9);
    EXPECT_GE(r.min_potential, 1.0 - 1e-8);
    EXPECT_NEAR(r.witness.total_mass(), r.value, 1e-12 * r.value);
    EXPECT_LE(r.cs_violation, 1e-8);
    EXPECT_DOUBLE_EQ(r.trunc_min, 0.5 * r.h_min);
}

TEST(Capacity, RefinementStaysClose) {
    double v[2];
    int c = 0;
    for (int cells : {8, 16}) {
        CapacityProblem pb;
        pb.set = fixtures::ball_fixture(3, 0.5);
        pb.resolution.cells = cells;
        v[c++] = capacity(pb).value;
    }
    EXPECT_LE(v[1], v[0] * 1.05);
    EXPECT_NEAR(v[1] / v[0], 1.0, 0.05);
}

TEST(Capacity, BoxAndLogKernel) {
    CapacityProblem pb;
    pb.set = RegionSet(2);
    pb.set.add(Box{{-0.3, -0.2}, {0.3, 0.2}});
    pb.omega = Domain::ball(Point{0, 0}, 2.0);
    pb.kernel = KernelSpec::log(2, 4.0);
    auto r = capacity(pb);
    ASSERT_TRUE(r.ok()) << r.status;
    EXPECT_GT(r.value, 0.0);
    EXPECT_LT(r.value, 1.0);
    EXPECT_GE(r.min_potential, 1.0 - 1e-8);
}

TEST(Capacity, SetOutsideDomainRejected) {
    CapacityProblem pb;
    pb.set = RegionSet(3);
    pb.set.add(Ball{{3, 0, 0}, 0.5});
    pb.omega = Domain::ball(Point{0, 0, 0}, 2.0);
    pb.set.add(Ball{{1.9, 0, 0}, 0.5});
    EXPECT_THROW(capacity(pb), domain_error);
    pb.set = RegionSet(3);
    pb.set.add(Ball{{5, 0, 0}, 0.5});
    EXPECT_THROW(capacity(pb), domain_error);
}

TEST(SphereConstant, SelfConvergence) {
    const double a = sphere_capacity_constant(3, 2.0, 1000);
    const double b = sphere_capacity_constant(3, 2.0, 2000);
    EXPECT_NEAR(a / b, 1.0, 0.02);
    EXPECT_NEAR(b, 1.0, 0.05);
}

TEST(SphereConstant, PositiveFinite) {
    for (auto [n, alpha] : {std::pair{2, 1.5}, std::pair{2, 2.0}, std::pair{3, 2.5}, std::pair{4, 3.0}}) {
        const double c = sphere_capacity_constant(n, alpha, 400);
        EXPECT_GT(c, 0.0);
        EXPECT_TRUE(std::isfinite(c));
    }
}

TEST(Axioms, SmallRun) {
    AxiomOptions o;
    o.instances = 4;
    o.seed = 99;
    const auto r = verify_axioms(o);
    EXPECT_EQ(r.total_violations(), 0);
    EXPECT_LE(r.max_scaling_error, 1e-9);
    EXPECT_EQ(r.checks.size(), 4u * 5u);
}
