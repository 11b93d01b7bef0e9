#pragma once

// Reference sets and measures used by the tests and the `sample` subcommand.

#include <cmath>
#include <numbers>

#include "geometry.hpp"
#include "measure.hpp"
#include "sampling.hpp"

namespace potcap::fixtures {

/// Balls of radius 4^{-i} delta centred at 1.5 * 2^{-i} delta e_1, i = 1..count.
inline RegionSet thin_ball_family(std::size_t n, double delta, int count) {
    RegionSet e(n);
    for (int i = 1; i <= count; ++i) {
        Point c(n, 0.0);
        c[0] = 1.5 * std::ldexp(delta, -i);
        e.add(Ball{c, std::pow(4.0, -i) * delta});
    }
    return e;
}

/// Balls of radius 2^{-i-2} delta at the same centres: one per shell, fixed relative size.
inline RegionSet nonthin_ball_family(std::size_t n, double delta, int count) {
    RegionSet e(n);
    for (int i = 1; i <= count; ++i) {
        Point c(n, 0.0);
        c[0] = 1.5 * std::ldexp(delta, -i);
        e.add(Ball{c, std::ldexp(delta, -i - 2)});
    }
    return e;
}

/// Thin family with random directions and radii 4^{-i} delta * U(0.5, 1).
inline RegionSet random_thin_family(std::size_t n, double delta, int count, std::uint64_t seed) {
    Rng rng(seed);
    RegionSet e(n);
    for (int i = 1; i <= count; ++i) {
        const Point u = random_direction(rng, n);
        e.add(Ball{scaled(u, 1.5 * std::ldexp(delta, -i)), std::pow(4.0, -i) * delta * rng.uniform(0.5, 1.0)});
    }
    return e;
}

/// Chains of balls along the 2n coordinate half-axes, t_k = delta 1.5^{-k}, radius
/// 0.866 t_k. Each ball subtends a 60 degree half-angle, which covers every
/// direction in three dimensions, so no segment leaves the origin unblocked.
inline RegionSet cone_fixture(double delta, int count) {
    const std::size_t n = 3;
    RegionSet e(n);
    for (int k = 0; k < count; ++k) {
        const double t = delta * std::pow(1.5, -k);
        for (std::size_t a = 0; a < 2 * n; ++a) {
            Point c(n, 0.0);
            c[a % n] = a < n ? t : -t;
            e.add(Ball{c, 0.866 * t});
        }
    }
    return e;
}

/// The unit sphere as a point cloud of the given size.
inline RegionSet sphere_fixture(std::size_t n, std::size_t count) {
    RegionSet e(n);
    e.add(PointSet{sphere_points(n, count), 0.0});
    return e;
}

inline RegionSet ball_fixture(std::size_t n, double radius) {
    RegionSet e(n);
    e.add(Ball{Point(n, 0.0), radius});
    return e;
}

/// Uniform random atoms on the unit disc in the x_1 x_2 plane.
inline DiscreteMeasure disc_measure(std::size_t n, std::size_t count, double total, std::uint64_t seed) {
    Rng rng(seed);
    DiscreteMeasure mu(n);
    Point x(n, 0.0);
    for (std::size_t k = 0; k < count; ++k) {
        const double a = rng.uniform(0.0, 2.0 * std::numbers::pi), r = std::sqrt(rng.uniform());
        x[0] = r * std::cos(a);
        x[1] = r * std::sin(a);
        mu.add(x, total / static_cast<double>(count));
    }
    return mu;
}

/// m at the origin plus `count` uniform atoms of total mass `background` in the unit ball.
inline DiscreteMeasure atom_with_background(std::size_t n, double m, std::size_t count, double background,
                                            std::uint64_t seed) {
    DiscreteMeasure mu(n);
    if (m > 0.0) mu.add(Point(n, 0.0), m);
    if (count > 0) {
        const DiscreteMeasure bg = random_ball_measure(Point(n, 0.0), 1.0, count, background, seed);
        for (std::size_t i = 0; i < bg.size(); ++i) mu.add(bg.atoms()[i], bg.weights()[i]);
    }
    return mu;
}

}  // namespace potcap::fixtures
