#include <gtest/gtest.h>

#include <sstream>

#include <potcap/io.hpp>

using namespace potcap;

TEST(MeasureCsv, HeaderAndComments) {
    std::istringstream in("x,y,z,w\n# comment\n0,0,0,1\n\n 1.5 , -2e-1, 3, 0.25\n");
    const auto mu = io::read_measure_csv(in);
    ASSERT_EQ(mu.size(), 2u);
    EXPECT_EQ(mu.dim(), 3u);
    EXPECT_EQ(mu.atoms().point(1), (Point{1.5, -0.2, 3}));
    EXPECT_EQ(mu.weights()[1], 0.25);
}

TEST(MeasureCsv, NoHeader) {
    std::istringstream in("0.5,1\n-0.5,2\n");
    const auto mu = io::read_measure_csv(in);
    EXPECT_EQ(mu.dim(), 1u);
    EXPECT_EQ(mu.total_mass(), 3.0);
}

TEST(MeasureCsv, LineNumberedErrors) {
    auto error_of = [](const std::string& text) {
        std::istringstream in(text);
        try {
            io::read_measure_csv(in);
        } catch (const parse_error& e) {
            return std::make_pair(e.line(), std::string(e.what()));
        }
        return std::make_pair(std::size_t{0}, std::string());
    };
    auto [l1, m1] = error_of("x,y,w\n0,0,1\n0,abc,1\n");
    EXPECT_EQ(l1, 3u);
    EXPECT_NE(m1.find("line 3"), std::string::npos);
    auto [l2, m2] = error_of("0,0,1\n0,0,1,4\n");
    EXPECT_EQ(l2, 2u);
    auto [l3, m3] = error_of("0,0,1\n\n0,0,-1\n");
    EXPECT_EQ(l3, 3u);
    EXPECT_NE(m3.find("weight"), std::string::npos);
    auto [l4, m4] = error_of("");
    EXPECT_NE(m4.find("no atoms"), std::string::npos);
}

TEST(PointsCsv, RoundTrip) {
    PointCloud pts(2, {Point{0.1, 0.2}, Point{-3, 1e-17}});
    std::ostringstream out;
    io::write_points_csv(out, pts);
    std::istringstream in(out.str());
    const auto back = io::read_points_csv(in);
    EXPECT_EQ(back.coords(), pts.coords());
}

TEST(MeasureCsv, RoundTrip) {
    DiscreteMeasure mu(3);
    mu.add(Point{0.1, 1.0 / 3.0, -2}, 0.7);
    mu.add(Point{5, 6, 7}, 1e-9);
    std::ostringstream out;
    io::write_measure_csv(out, mu);
    std::istringstream in(out.str());
    const auto back = io::read_measure_csv(in);
    EXPECT_EQ(back.atoms().coords(), mu.atoms().coords());
    EXPECT_EQ(back.weights(), mu.weights());
}

TEST(RegionJson, RoundTrip) {
    RegionSet e(3);
    e.add(Ball{{1, 0, 0}, 0.25});
    e.add(Box{{0, 0, 0}, {1, 2, 3}});
    e.add(PointSet{PointCloud(3, {Point{0, 0, 1}, Point{0, 1, 0}}), 0.01});
    const auto j = io::to_json(e);
    EXPECT_EQ(j["primitives"][0]["kind"], "ball");
    const auto back = io::region_from_json(nlohmann::json::parse(j.dump()));
    ASSERT_EQ(back.primitives().size(), 3u);
    EXPECT_EQ(std::get<Ball>(back.primitives()[0]).radius, 0.25);
    EXPECT_EQ(std::get<Box>(back.primitives()[1]).max, (Point{1, 2, 3}));
    EXPECT_EQ(std::get<PointSet>(back.primitives()[2]).coords.size(), 2u);
}

TEST(RegionJson, SchemaWithoutDim) {
    const auto j = nlohmann::json::parse(R"({"primitives":[{"kind":"ball","center":[0,0],"radius":1}]})");
    EXPECT_EQ(io::region_from_json(j).dim(), 2u);
}

TEST(RegionJson, Errors) {
    using nlohmann::json;
    EXPECT_THROW(io::region_from_json(json::parse(R"({"primitives":[]})")), domain_error);
    EXPECT_THROW(io::region_from_json(json::parse(R"({"primitives":[{"kind":"cone"}]})")), domain_error);
    EXPECT_THROW(io::region_from_json(json::parse(R"({"primitives":[{"kind":"ball","center":[0,0]}]})")), domain_error);
    EXPECT_THROW(io::region_from_json(json::parse(R"({"primitives":[{"kind":"ball","center":[0,0],"radius":-1}]})")),
                 domain_error);
    EXPECT_THROW(io::region_from_json(
                     json::parse(R"({"primitives":[{"kind":"ball","center":[0,0],"radius":1},
                                                   {"kind":"ball","center":[0,0,0],"radius":1}]})")),
                 domain_error);
}

TEST(MeasureJson, RoundTrip) {
    DiscreteMeasure mu(2);
    mu.add(Point{0.5, 0.25}, 2.0);
    const auto back = io::measure_from_json(nlohmann::json::parse(io::to_json(mu).dump()));
    EXPECT_EQ(back.atoms().coords(), mu.atoms().coords());
    EXPECT_EQ(back.weights(), mu.weights());
    EXPECT_THROW(io::measure_from_json(nlohmann::json::parse(R"({"atoms":[[0,0]],"weights":[-1]})")), domain_error);
}
