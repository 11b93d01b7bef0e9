#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "point_cloud.hpp"

namespace potcap {

/// Seeded generator whose output does not depend on the standard library's
/// distribution implementations (mt19937_64 is fully specified).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u = 0.0;
        do u = uniform();
        while (u <= 0.0);
        const double v = uniform();
        const double r = std::sqrt(-2.0 * std::log(u));
        spare_ = r * std::sin(2.0 * std::numbers::pi * v);
        has_spare_ = true;
        return r * std::cos(2.0 * std::numbers::pi * v);
    }

    std::uint64_t bits() { return eng_(); }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

inline double radical_inverse(std::uint64_t i, unsigned base) {
    double inv = 1.0 / base, f = inv, r = 0.0;
    while (i > 0) {
        r += f * static_cast<double>(i % base);
        i /= base;
        f *= inv;
    }
    return r;
}

inline constexpr std::array<unsigned, 16> kPrimes{2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

/// Halton point i (1-based skip avoids the origin) in [0,1)^dim.
inline Point halton(std::uint64_t i, std::size_t dim) {
    require(dim <= kPrimes.size(), "halton: dimension too large");
    Point p(dim);
    for (std::size_t k = 0; k < dim; ++k) p[k] = radical_inverse(i + 1, kPrimes[k]);
    return p;
}

/// Deterministic, well-spread points on the unit sphere S^{n-1}: equally spaced
/// angles for n = 2, a Fibonacci lattice for n = 3, and Halton points pushed
/// through Box-Muller and normalized for n >= 4.
inline PointCloud sphere_points(std::size_t n, std::size_t count) {
    require(n >= 2, "sphere_points: n must be >= 2");
    PointCloud out(n);
    out.reserve(count);
    if (n == 2) {
        for (std::size_t i = 0; i < count; ++i) {
            const double t = 2.0 * std::numbers::pi * (static_cast<double>(i) + 0.5) / static_cast<double>(count);
            out.push_back(Point{std::cos(t), std::sin(t)});
        }
        return out;
    }
    if (n == 3) {
        const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
        for (std::size_t i = 0; i < count; ++i) {
            const double z = 1.0 - 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(count);
            const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
            const double t = golden * static_cast<double>(i);
            out.push_back(Point{r * std::cos(t), r * std::sin(t), z});
        }
        return out;
    }
    const std::size_t pairs = (n + 1) / 2;
    for (std::size_t i = 0; i < count; ++i) {
        Point h = halton(i, 2 * pairs);
        Point g(n);
        for (std::size_t k = 0; k < pairs; ++k) {
            const double u = std::max(h[2 * k], 1e-300);
            const double r = std::sqrt(-2.0 * std::log(u));
            const double t = 2.0 * std::numbers::pi * h[2 * k + 1];
            g[2 * k] = r * std::cos(t);
            if (2 * k + 1 < n) g[2 * k + 1] = r * std::sin(t);
        }
        const double len = norm(g);
        for (auto& v : g) v /= len;
        out.push_back(g);
    }
    return out;
}

/// Uniform random direction on S^{n-1}.
inline Point random_direction(Rng& rng, std::size_t n) {
    Point g(n);
    double len = 0.0;
    do {
        for (auto& v : g) v = rng.normal();
        len = norm(g);
    } while (len == 0.0);
    for (auto& v : g) v /= len;
    return g;
}

/// Uniform random point in the ball of radius r about c.
inline Point random_in_ball(Rng& rng, std::span<const double> c, double r) {
    const std::size_t n = c.size();
    Point d = random_direction(rng, n);
    const double rad = r * std::pow(rng.uniform(), 1.0 / static_cast<double>(n));
    for (std::size_t k = 0; k < n; ++k) d[k] = c[k] + rad * d[k];
    return d;
}

}  // namespace potcap
