#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "geometry.hpp"
#include "kernel.hpp"
#include "measure.hpp"
#include "parallel.hpp"
#include "sampling.hpp"
#include "simplex.hpp"

namespace potcap {

/// Grid spacing per primitive: h if positive, otherwise (primitive extent) / cells.
struct Resolution {
    int cells = 10;
    double h = 0.0;
    /// Sites are kept within margin * h of the primitive.
    double margin = 1.0;
    /// Kernel cap radius as a fraction of the local spacing.
    double trunc_factor = 0.5;
};

using PointFilter = std::function<bool(std::span<const double>)>;

struct CapacityProblem {
    RegionSet set;
    Domain omega = Domain::ball(Point{0.0, 0.0, 0.0}, 2.0);
    KernelSpec kernel = KernelSpec::riesz(3, 2.0);
    Resolution resolution;
    /// Optional restriction of the constraint samples (e.g. to a closed shell),
    /// with a bounding box that limits the lattice.
    PointFilter sample_filter;
    std::optional<Box> filter_box;
};

/// Candidate support sites with per-site kernel cap radii, and constraint samples.
struct Discretization {
    PointCloud sites;
    std::vector<double> trunc;
    PointCloud samples;
    /// Samples on a primitive's boundary; these seed the constraint generation.
    std::vector<char> boundary;
    double h_min = 0.0, h_max = 0.0;

    explicit Discretization(std::size_t dim = 0) : sites(dim), samples(dim) {}
    std::size_t dim() const { return sites.dim(); }
};

struct SolveOptions {
    std::size_t workers = 1;
    double gap_tolerance = 1e-9;
    double feasibility_tolerance = 1e-8;
    std::size_t initial_samples = 4000;
    std::size_t initial_sites = 4000;
    std::size_t batch = 600;
    int max_rounds = 60;
};

struct CapacityResult {
    double value = 0.0;
    /// Dual (packing) objective: a lower bound for the discrete program.
    double lower_bound = 0.0;
    double gap = 0.0;
    DiscreteMeasure witness;
    /// min over all samples of the witness's capped potential.
    double min_potential = 0.0;
    double cs_violation = 0.0;
    std::size_t n_sites = 0, n_samples = 0;
    std::size_t active_sites = 0, active_samples = 0;
    double h_min = 0.0, h_max = 0.0;
    double trunc_min = 0.0, trunc_max = 0.0;
    long iterations = 0;
    int rounds = 0;
    /// "optimal", "empty", "iteration_limit", "gap_exceeded", "infeasible"
    std::string status = "optimal";

    bool ok() const { return status == "optimal" || status == "empty"; }
};

namespace detail {

struct PointKey {
    bool operator()(const Point& a, const Point& b) const { return a < b; }
};

/// Lattice o + h*(k + shift) intersected with box.
template <class F>
void for_lattice(const Box& box, std::span<const double> origin, double h, double shift, F&& f) {
    const std::size_t n = box.dim();
    std::vector<long> lo(n), hi(n), k(n);
    for (std::size_t d = 0; d < n; ++d) {
        lo[d] = static_cast<long>(std::ceil((box.min[d] - origin[d]) / h - shift - 1e-9));
        hi[d] = static_cast<long>(std::floor((box.max[d] - origin[d]) / h - shift + 1e-9));
        if (hi[d] < lo[d]) return;
    }
    k = lo;
    Point x(n);
    for (;;) {
        for (std::size_t d = 0; d < n; ++d) x[d] = origin[d] + h * (static_cast<double>(k[d]) + shift);
        f(std::span<const double>(x));
        std::size_t d = 0;
        while (d < n && ++k[d] > hi[d]) {
            k[d] = lo[d];
            ++d;
        }
        if (d == n) return;
    }
}

/// Signed depth inside a ball or box (negative outside); nearest boundary point.
inline double depth(const Primitive& prim, std::span<const double> x) {
    if (auto* b = std::get_if<Ball>(&prim)) return b->radius - dist(x, b->center);
    const auto& bx = std::get<Box>(prim);
    double d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < x.size(); ++k) d = std::min({d, x[k] - bx.min[k], bx.max[k] - x[k]});
    return d >= 0.0 ? d : -distance_to(prim, x);
}

inline Point boundary_projection(const Primitive& prim, std::span<const double> x) {
    if (auto* b = std::get_if<Ball>(&prim)) {
        Point v = sub(x, b->center);
        double r = norm(v);
        if (r == 0.0) v[0] = r = 1.0;
        // stay on the closed side of the sphere under rounding
        const double s = b->radius * (1.0 - 1e-13) / r;
        for (std::size_t k = 0; k < v.size(); ++k) v[k] = b->center[k] + s * v[k];
        return v;
    }
    const auto& bx = std::get<Box>(prim);
    Point y(x.begin(), x.end());
    for (std::size_t k = 0; k < y.size(); ++k) y[k] = std::clamp(y[k], bx.min[k], bx.max[k]);
    // inside: push the nearest coordinate to its face
    std::size_t best = 0;
    double bd = std::numeric_limits<double>::infinity();
    bool on_face = false;
    for (std::size_t k = 0; k < y.size(); ++k) {
        const double lo = y[k] - bx.min[k], hi = bx.max[k] - y[k];
        if (lo == 0.0 || hi == 0.0) on_face = true;
        if (lo < bd) bd = lo, best = k;
        if (hi < bd) bd = hi, best = k + y.size();
    }
    if (!on_face) {
        if (best < y.size())
            y[best] = bx.min[best];
        else
            y[best - y.size()] = bx.max[best - y.size()];
    }
    return y;
}

inline double median_spacing(const PointCloud& c) {
    if (c.size() < 2) return 0.0;
    const std::size_t probes = std::min<std::size_t>(c.size(), 400);
    std::vector<double> nn;
    for (std::size_t q = 0; q < probes; ++q) {
        const std::size_t i = q * c.size() / probes;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < c.size(); ++j)
            if (j != i) {
                const double d2 = dist2(c[i], c[j]);
                if (d2 > 0.0) best = std::min(best, d2);
            }
        if (std::isfinite(best)) nn.push_back(std::sqrt(best));
    }
    if (nn.empty()) return 0.0;
    std::nth_element(nn.begin(), nn.begin() + nn.size() / 2, nn.end());
    return nn[nn.size() / 2];
}

class Builder {
public:
    Builder(std::size_t dim, const Domain& omega, const PointFilter& filter) : out_(dim), omega_(omega), filter_(filter) {}

    void site(std::span<const double> x, double trunc) {
        if (!omega_.contains(x)) return;
        Point p(x.begin(), x.end());
        auto [it, fresh] = sites_.emplace(std::move(p), out_.sites.size());
        if (fresh) {
            out_.sites.push_back(x);
            out_.trunc.push_back(trunc);
        } else {
            out_.trunc[it->second] = std::min(out_.trunc[it->second], trunc);
        }
    }
    void sample(std::span<const double> x, bool on_boundary) {
        if (filter_ && !filter_(x)) return;
        Point p(x.begin(), x.end());
        if (samples_.insert(std::move(p)).second) {
            out_.samples.push_back(x);
            out_.boundary.push_back(on_boundary);
        }
    }
    void spacing(double h) {
        out_.h_min = out_.h_min == 0.0 ? h : std::min(out_.h_min, h);
        out_.h_max = std::max(out_.h_max, h);
    }
    Discretization take() { return std::move(out_); }

private:
    Discretization out_;
    const Domain& omega_;
    const PointFilter& filter_;
    std::map<Point, std::size_t, PointKey> sites_;
    std::set<Point, PointKey> samples_;
};

inline bool clip_contains(const Box& b, std::span<const double> x) {
    for (std::size_t k = 0; k < x.size(); ++k)
        if (x[k] < b.min[k] || x[k] > b.max[k]) return false;
    return true;
}

inline void discretize_solid(Builder& bld, const Primitive& prim, const Box& clip, double h, const Resolution& res,
                             bool interior_sites) {
    const Box pb = bounding_box(prim);
    const Box region = pb.inflated(res.margin * h + 1e-12).intersect(clip);
    if (region.empty()) return;
    const Point origin = std::holds_alternative<Ball>(prim) ? std::get<Ball>(prim).center : std::get<Box>(prim).min;
    bld.spacing(h);
    const double trunc = res.trunc_factor * h;
    for_lattice(region, origin, h, 0.0, [&](std::span<const double> x) {
        const double dep = depth(prim, x);
        if (dep >= -res.margin * h && (interior_sites || dep <= res.margin * h)) bld.site(x, trunc);
        if (std::abs(dep) <= h) {
            const Point y = boundary_projection(prim, x);
            if (potcap::contains(prim, y) && clip_contains(clip, y)) bld.sample(y, true);
        }
    });
    for_lattice(region.intersect(pb), origin, h, 0.5, [&](std::span<const double> x) {
        if (potcap::contains(prim, x)) bld.sample(x, false);
    });
}

}  // namespace detail

/// Lattice discretization of a capacity problem. Balls and boxes get sites on
/// the lattice within margin*h of the primitive (only a boundary band when
/// alpha <= 2, where equilibrium measures live on the boundary) and samples at
/// half-shifted interior lattice points plus boundary projections of nearby
/// lattice points. Point clouds whose radius is below their spacing are their
/// own sites and samples.
inline Discretization discretize(const CapacityProblem& pb) {
    const std::size_t n = pb.omega.dim();
    require(pb.set.dim() == n || pb.set.empty(), "capacity: set dimension differs from the domain");
    require(static_cast<std::size_t>(pb.kernel.n) == n, "capacity: kernel dimension differs from the domain");
    const Resolution& res = pb.resolution;
    require(res.cells > 0 || res.h > 0.0, "capacity: resolution must be positive");
    require(res.margin > 0.0 && res.trunc_factor > 0.0, "capacity: margin and truncation must be positive");
    Box clip = pb.omega.bounding_box();
    if (pb.filter_box) clip = clip.intersect(*pb.filter_box);
    const bool interior = pb.kernel.alpha > 2.0;

    detail::Builder bld(n, pb.omega, pb.sample_filter);
    auto spacing_for = [&](const Box& extent) {
        if (res.h > 0.0) return res.h;
        const double e = extent.extent();
        return e > 0.0 ? e / res.cells : pb.omega.diameter() / (4.0 * res.cells);
    };
    for (const auto& prim : pb.set.primitives()) {
        if (auto* s = std::get_if<PointSet>(&prim)) {
            double h = res.h > 0.0 ? res.h : detail::median_spacing(s->coords);
            if (h <= 0.0) h = pb.omega.diameter() / (4.0 * std::max(res.cells, 1));
            if (s->radius >= h) {
                for (std::size_t i = 0; i < s->coords.size(); ++i) {
                    const Ball b{s->coords.point(i), s->radius};
                    if (!bounding_box(b).intersect(clip).empty())
                        detail::discretize_solid(bld, b, clip, std::min(h, 2.0 * s->radius / std::max(res.cells, 2)), res, interior);
                }
                continue;
            }
            bld.spacing(h);
            const double trunc = res.trunc_factor * h;
            Point y(n);
            for (std::size_t i = 0; i < s->coords.size(); ++i) {
                const auto x = s->coords[i];
                if (!detail::clip_contains(clip.inflated(s->radius), x)) continue;
                bld.site(x, trunc);
                bld.sample(x, true);
                if (s->radius > 0.0)
                    for (std::size_t k = 0; k < 2 * n; ++k) {
                        std::copy(x.begin(), x.end(), y.begin());
                        y[k % n] += (k < n ? 1.0 : -1.0) * s->radius;
                        bld.site(y, trunc);
                        bld.sample(y, true);
                    }
            }
            continue;
        }
        const Box ext = bounding_box(prim).intersect(clip);
        if (ext.empty()) continue;
        detail::discretize_solid(bld, prim, clip, spacing_for(ext), res, interior);
    }
    return bld.take();
}

namespace detail {

inline double capped_kernel(const KernelSpec& k, std::span<const double> x, std::span<const double> y, double cap) {
    const double r2 = dist2(x, y);
    return k.from_r2(r2 < cap * cap ? cap * cap : r2);
}

}  // namespace detail

/// Solves min sum w subject to sum_j K_h(x_i, y_j) w_j >= 1 on every sample,
/// w >= 0, by the dual packing program with row and column generation.
inline CapacityResult solve_discrete(const Discretization& disc, const KernelSpec& kernel, const SolveOptions& opt = {}) {
    kernel.validate();
    CapacityResult res;
    const std::size_t ns = disc.sites.size(), nx = disc.samples.size();
    res.n_sites = ns;
    res.n_samples = nx;
    res.h_min = disc.h_min;
    res.h_max = disc.h_max;
    if (!disc.trunc.empty()) {
        res.trunc_min = *std::min_element(disc.trunc.begin(), disc.trunc.end());
        res.trunc_max = *std::max_element(disc.trunc.begin(), disc.trunc.end());
    }
    res.witness = DiscreteMeasure(disc.dim());
    if (nx == 0) {
        res.status = "empty";
        return res;
    }
    if (ns == 0) {
        res.status = "infeasible";
        return res;
    }
    auto kval = [&](std::size_t i, std::size_t j) {
        return detail::capped_kernel(kernel, disc.samples[i], disc.sites[j], disc.trunc[j]);
    };

    auto stride_pick = [](std::size_t total, std::size_t want) {
        std::vector<std::size_t> v;
        if (total <= want) {
            v.resize(total);
            std::iota(v.begin(), v.end(), 0);
        } else {
            for (std::size_t q = 0; q < want; ++q) v.push_back(q * total / want);
        }
        return v;
    };
    std::vector<std::size_t> act_x;
    {
        std::vector<std::size_t> bnd, rest;
        for (std::size_t i = 0; i < nx; ++i)
            (disc.boundary.size() == nx && !disc.boundary[i] ? rest : bnd).push_back(i);
        if (bnd.empty()) bnd.swap(rest);
        for (auto q : stride_pick(bnd.size(), opt.initial_samples)) act_x.push_back(bnd[q]);
    }
    std::vector<std::size_t> act_s = stride_pick(ns, opt.initial_sites);
    std::vector<char> in_x(nx, 0), in_s(ns, 0);
    for (auto i : act_x) in_x[i] = 1;
    for (auto j : act_s) in_s[j] = 1;

    std::vector<double> w(ns, 0.0), y(nx, 0.0), pot(nx, 0.0), load(ns, 0.0);
    for (int round = 1;; ++round) {
        res.rounds = round;
        const std::size_t m = act_s.size(), n = act_x.size();
        std::vector<double> a(m * n);
        parallel_for(m, opt.workers, [&](std::size_t r) {
            for (std::size_t c = 0; c < n; ++c) a[r * n + c] = kval(act_x[c], act_s[r]);
        });
        const LPResult lp = solve_packing_lp(m, n, a, std::vector<double>(m, 1.0), std::vector<double>(n, 1.0));
        res.iterations += lp.iterations;
        if (lp.status == LPResult::Status::iteration_limit) {
            res.status = "iteration_limit";
            return res;
        }
        if (lp.status == LPResult::Status::unbounded) {
            res.status = "infeasible";
            return res;
        }
        std::fill(w.begin(), w.end(), 0.0);
        std::fill(y.begin(), y.end(), 0.0);
        for (std::size_t r = 0; r < m; ++r) w[act_s[r]] = std::max(0.0, lp.dual[r]);
        for (std::size_t c = 0; c < n; ++c) y[act_x[c]] = std::max(0.0, lp.x[c]);

        std::vector<std::size_t> supp, ysupp;
        for (std::size_t j = 0; j < ns; ++j)
            if (w[j] > 0.0) supp.push_back(j);
        for (std::size_t i = 0; i < nx; ++i)
            if (y[i] > 0.0) ysupp.push_back(i);
        parallel_for(nx, opt.workers, [&](std::size_t i) {
            double v = 0.0;
            for (auto j : supp) v += kval(i, j) * w[j];
            pot[i] = v;
        });
        parallel_for(ns, opt.workers, [&](std::size_t j) {
            double v = 0.0;
            for (auto i : ysupp) v += kval(i, j) * y[i];
            load[j] = v;
        });
        std::vector<std::pair<double, std::size_t>> bad_x, bad_s;
        for (std::size_t i = 0; i < nx; ++i)
            if (!in_x[i] && pot[i] < 1.0 - 1e-10) bad_x.push_back({pot[i], i});
        for (std::size_t j = 0; j < ns; ++j)
            if (!in_s[j] && load[j] > 1.0 + 1e-10) bad_s.push_back({-load[j], j});
        if ((bad_x.empty() && bad_s.empty()) || round >= opt.max_rounds) {
            res.active_sites = m;
            res.active_samples = n;
            break;
        }
        std::sort(bad_x.begin(), bad_x.end());
        std::sort(bad_s.begin(), bad_s.end());
        for (std::size_t q = 0; q < std::min(opt.batch, bad_x.size()); ++q) {
            act_x.push_back(bad_x[q].second);
            in_x[bad_x[q].second] = 1;
        }
        for (std::size_t q = 0; q < std::min(opt.batch, bad_s.size()); ++q) {
            act_s.push_back(bad_s[q].second);
            in_s[bad_s[q].second] = 1;
        }
    }

    // Certify on the full program: rescale both solutions to exact feasibility.
    const double pmin = *std::min_element(pot.begin(), pot.end());
    const double lmax = *std::max_element(load.begin(), load.end());
    const double ws = pmin > 0.0 && pmin < 1.0 ? 1.0 / pmin : 1.0;
    const double ys = lmax > 1.0 ? 1.0 / lmax : 1.0;
    double value = 0.0, lower = 0.0, cs = 0.0;
    for (std::size_t j = 0; j < ns; ++j) value += ws * w[j];
    for (std::size_t i = 0; i < nx; ++i) lower += ys * y[i];
    for (std::size_t i = 0; i < nx; ++i) cs = std::max(cs, y[i] * std::abs(ws * pot[i] - 1.0));
    for (std::size_t j = 0; j < ns; ++j) cs = std::max(cs, w[j] * std::abs(1.0 - load[j]));
    res.value = value;
    res.lower_bound = lower;
    res.gap = value > 0.0 ? (value - lower) / value : 0.0;
    res.min_potential = ws * pmin;
    res.cs_violation = value > 0.0 ? cs / value : cs;
    for (std::size_t j = 0; j < ns; ++j)
        if (w[j] > 0.0) res.witness.add(disc.sites[j], ws * w[j]);
    if (!(pmin > 0.0))
        res.status = "infeasible";
    else if (res.gap > opt.gap_tolerance)
        res.status = "gap_exceeded";
    return res;
}

inline CapacityResult capacity(const CapacityProblem& pb, const SolveOptions& opt = {}) {
    const Box hull = pb.omega.bounding_box();
    for (const auto& prim : pb.set.primitives())
        require(!bounding_box(prim).intersect(hull).empty(), "capacity: set must lie inside the domain");
    const Discretization disc = discretize(pb);
    for (std::size_t i = 0; i < disc.samples.size(); ++i)
        require(pb.omega.contains(disc.samples[i]), "capacity: set must lie inside the domain");
    return solve_discrete(disc, pb.kernel, opt);
}

// ---------------------------------------------------------------------------
// Sphere calibration constant
// ---------------------------------------------------------------------------

/// C(S^{n-1}, B_2) computed with `resolution` sphere points as sites and samples.
inline double sphere_capacity_constant(int n, double alpha, std::size_t resolution = 2000,
                                       const SolveOptions& opt = {}) {
    static std::mutex mu;
    static std::map<std::tuple<int, double, std::size_t>, double> cache;
    const auto key = std::make_tuple(n, alpha, resolution);
    {
        std::lock_guard lock(mu);
        if (auto it = cache.find(key); it != cache.end()) return it->second;
    }
    const KernelSpec k = alpha == n ? KernelSpec::log(n, 4.0) : KernelSpec::riesz(n, alpha);
    require(resolution >= 8, "sphere_capacity_constant: resolution too small");
    CapacityProblem pb;
    pb.omega = Domain::ball(Point(n, 0.0), 2.0);
    pb.kernel = k;
    pb.set = RegionSet(n);
    pb.set.add(PointSet{sphere_points(n, resolution), 0.0});
    const CapacityResult r = capacity(pb, opt);
    if (!r.ok()) throw solver_error("sphere capacity: " + r.status, r.iterations);
    std::lock_guard lock(mu);
    cache[key] = r.value;
    return r.value;
}

}  // namespace potcap
