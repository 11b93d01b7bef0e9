#pragma once

// Property checks for the discrete capacity: monotonicity, subadditivity,
// scaling and contraction. Each comparison solves on a shared pool of sites and
// samples (the lattice of the larger configuration, fixed spacing), with the
// constraints of a set being the pool samples it contains, so the inequalities
// are exact statements about the discrete programs.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "capacity.hpp"
#include "geometry.hpp"
#include "sampling.hpp"

namespace potcap {

struct AxiomCheck {
    std::string axiom;
    int instance = 0;
    double lhs = 0.0, rhs = 0.0;
    bool ok = true;
};

struct AxiomReport {
    std::vector<AxiomCheck> checks;
    int violations(const std::string& axiom) const {
        int v = 0;
        for (const auto& c : checks)
            if (c.axiom == axiom && !c.ok) ++v;
        return v;
    }
    int total_violations() const {
        int v = 0;
        for (const auto& c : checks) v += !c.ok;
        return v;
    }
    double max_scaling_error = 0.0;
};

struct AxiomOptions {
    int instances = 20;
    std::uint64_t seed = 1;
    double h = 0.1;
    double alpha = 2.0;
    /// Relative slack for the inequalities and tolerance for the scaling identity.
    double tolerance = 1e-9;
    SolveOptions solver;
};

namespace detail {

inline Discretization restrict_samples(const Discretization& pool, const RegionSet& e) {
    Discretization d(pool.dim());
    d.sites = pool.sites;
    d.trunc = pool.trunc;
    d.h_min = pool.h_min;
    d.h_max = pool.h_max;
    for (std::size_t i = 0; i < pool.samples.size(); ++i)
        if (e.contains(pool.samples[i])) {
            d.samples.push_back(pool.samples[i]);
            d.boundary.push_back(pool.boundary[i]);
        }
    return d;
}

inline Discretization map_discretization(const Discretization& pool,
                                         const std::function<Point(std::span<const double>)>& f, double trunc_scale) {
    Discretization d(pool.dim());
    for (std::size_t i = 0; i < pool.sites.size(); ++i) d.sites.push_back(f(pool.sites[i]));
    for (double t : pool.trunc) d.trunc.push_back(t * trunc_scale);
    for (std::size_t i = 0; i < pool.samples.size(); ++i) d.samples.push_back(f(pool.samples[i]));
    d.boundary = pool.boundary;
    d.h_min = pool.h_min * trunc_scale;
    d.h_max = pool.h_max * trunc_scale;
    return d;
}

inline Primitive random_piece(Rng& rng, std::size_t n, double reach) {
    const Point c = random_in_ball(rng, Point(n, 0.0), reach);
    if (rng.uniform() < 0.5) return Ball{c, rng.uniform(0.15, 0.4)};
    Box b{c, c};
    for (std::size_t k = 0; k < n; ++k) {
        const double w = rng.uniform(0.1, 0.35);
        b.min[k] -= w;
        b.max[k] += w;
    }
    return b;
}

inline double solved(const Discretization& d, const KernelSpec& k, const SolveOptions& opt) {
    const CapacityResult r = solve_discrete(d, k, opt);
    if (!r.ok()) throw solver_error("verify_axioms: " + r.status, r.iterations);
    return r.value;
}

}  // namespace detail

/// Random instances in n = 3 with Omega = B_2: pieces A, B inside B_{1.5};
/// scaling by lambda in [0.3, 3]; contraction by the projection onto the unit
/// ball and by a random affine map x -> sQx + b with s <= 1.
inline AxiomReport verify_axioms(const AxiomOptions& opt = {}) {
    const std::size_t n = 3;
    const KernelSpec k = KernelSpec::riesz(3, opt.alpha);
    const double s_exp = 3.0 - opt.alpha;
    Rng rng(opt.seed);
    AxiomReport rep;
    auto pool_for = [&](const RegionSet& e) {
        CapacityProblem pb;
        pb.set = e;
        pb.omega = Domain::ball(Point(n, 0.0), 2.0);
        pb.kernel = k;
        pb.resolution.h = opt.h;
        return discretize(pb);
    };
    auto leq = [&](double a, double b) { return a <= b * (1.0 + opt.tolerance) + opt.tolerance; };

    for (int t = 0; t < opt.instances; ++t) {
        const Primitive a = detail::random_piece(rng, n, 1.0), b = detail::random_piece(rng, n, 1.0);
        const RegionSet ea(n, {a}), eb(n, {b}), eab(n, {a, b});
        const Discretization pool = pool_for(eab);
        const double ca = detail::solved(detail::restrict_samples(pool, ea), k, opt.solver);
        const double cb = detail::solved(detail::restrict_samples(pool, eb), k, opt.solver);
        const double cab = detail::solved(detail::restrict_samples(pool, eab), k, opt.solver);
        rep.checks.push_back({"monotonicity", t, ca, cab, leq(ca, cab) && leq(cb, cab)});
        rep.checks.push_back({"subadditivity", t, cab, ca + cb, leq(cab, ca + cb)});

        const double lambda = std::exp(rng.uniform(std::log(0.3), std::log(3.0)));
        const Discretization base = detail::restrict_samples(pool, ea);
        const Discretization big =
            detail::map_discretization(base, [&](std::span<const double> x) { return scaled(x, lambda); }, lambda);
        const double cl = detail::solved(big, k, opt.solver);
        const double expect = std::pow(lambda, s_exp) * ca;
        const double err = std::abs(cl - expect) / std::max(expect, 1e-300);
        rep.max_scaling_error = std::max(rep.max_scaling_error, err);
        rep.checks.push_back({"scaling", t, cl, expect, err <= opt.tolerance});

        const double cp = detail::solved(
            detail::map_discretization(pool, [](std::span<const double> x) { return project_to_ball(x); }, 1.0), k,
            opt.solver);
        rep.checks.push_back({"contraction-projection", t, cp, cab, leq(cp, cab)});

        // Random rotation (Gram-Schmidt of Gaussian columns) times s <= 1, plus a shift.
        std::vector<Point> q;
        while (q.size() < n) {
            Point v(n);
            for (auto& x : v) x = rng.normal();
            for (const auto& u : q) {
                const double d = dot(v, u);
                for (std::size_t i = 0; i < n; ++i) v[i] -= d * u[i];
            }
            const double nv = norm(v);
            if (nv < 1e-6) continue;
            for (auto& x : v) x /= nv;
            q.push_back(v);
        }
        const double sc = rng.uniform(0.3, 1.0);
        const Point shift = random_in_ball(rng, Point(n, 0.0), 0.2);
        auto affine = [&](std::span<const double> x) {
            Point y(shift);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) y[i] += sc * q[j][i] * x[j];
            return y;
        };
        const double caff = detail::solved(detail::map_discretization(pool, affine, 1.0), k, opt.solver);
        rep.checks.push_back({"contraction-affine", t, caff, cab, leq(caff, cab)});
    }
    return rep;
}

}  // namespace potcap
