#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "capacity.hpp"
#include "geometry.hpp"
#include "parallel.hpp"
#include "sampling.hpp"

namespace potcap {

enum class Verdict { thin, non_thin, inconclusive };

inline std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::thin: return "thin";
        case Verdict::non_thin: return "non-thin";
        default: return "inconclusive";
    }
}

/// Geometric tail model fitted to the last `window` terms of a nonnegative series.
struct TailModel {
    double ratio = std::numeric_limits<double>::quiet_NaN();
    /// Estimated sum of the terms beyond the last one (+inf when ratio >= 1).
    double tail = std::numeric_limits<double>::infinity();
    bool all_zero = false;
    bool all_positive = false;
};

inline TailModel fit_tail(const std::vector<double>& terms, std::size_t window = 5) {
    TailModel t;
    const std::size_t m = std::min(window, terms.size());
    if (m == 0) {
        t.all_zero = true;
        t.tail = 0.0;
        return t;
    }
    const std::size_t s = terms.size() - m;
    t.all_zero = t.all_positive = true;
    for (std::size_t i = s; i < terms.size(); ++i) {
        if (terms[i] != 0.0) t.all_zero = false;
        if (!(terms[i] > 0.0)) t.all_positive = false;
    }
    if (t.all_zero) {
        t.ratio = 0.0;
        t.tail = 0.0;
        return t;
    }
    if (!t.all_positive || m < 2) return t;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < m; ++i) {
        const double x = static_cast<double>(i), y = std::log(terms[s + i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    t.ratio = std::exp(slope);
    // a flat sequence can fit a ratio a rounding error below 1
    if (t.ratio < 1.0 - 1e-9) t.tail = terms.back() * t.ratio / (1.0 - t.ratio);
    return t;
}

/// thin: the last terms decay geometrically with ratio below 1 - margin (or vanish);
/// non-thin: the fitted ratio is at least 1 - margin and the last terms stay positive.
inline Verdict series_verdict(const TailModel& t, double margin = 0.1) {
    if (t.all_zero) return Verdict::thin;
    if (!t.all_positive || std::isnan(t.ratio)) return Verdict::inconclusive;
    return t.ratio < 1.0 - margin ? Verdict::thin : Verdict::non_thin;
}

struct ThinnessOptions {
    int start = 1;
    Resolution resolution{8, 0.0, 1.0, 0.5};
    std::size_t sphere_resolution = 2000;
    /// c(n, alpha); computed (and cached) when <= 0.
    double sphere_constant = 0.0;
    double margin = 0.1;
    std::size_t workers = 1;
    SolveOptions solver;
};

struct ThinnessReport {
    double alpha = 0.0;
    AnnulusLadder ladder{Point{0.0, 0.0}, 1.0, 1, 1};
    double sphere_constant = 0.0;
    std::vector<double> numerators;   // C(E ∩ omega_i, Omega_i)
    std::vector<double> denominators; // c (2^{-i} delta)^{n-alpha}, or 1/i when alpha = n
    std::vector<double> unit_values;  // capacities of the rescaled pieces
    std::vector<double> terms, partial_sums;
    std::vector<std::size_t> sites, samples;
    TailModel tail;
    Verdict verdict = Verdict::inconclusive;
};

/// Pieces of E that can meet the closed unit annulus 1 <= |x| <= 2 after
/// translating p to the origin and scaling by s.
inline RegionSet unit_shell_pieces(const RegionSet& e, std::span<const double> p, double s) {
    const std::size_t n = e.dim();
    RegionSet out(n);
    auto move = [&](std::span<const double> x) {
        Point y(n);
        for (std::size_t k = 0; k < n; ++k) y[k] = (x[k] - p[k]) * s;
        return y;
    };
    const Point origin(n, 0.0);
    for (const auto& prim : e.primitives()) {
        if (auto* b = std::get_if<Ball>(&prim)) {
            Ball q{move(b->center), b->radius * s};
            const double r = norm(q.center);
            if (r - q.radius <= 2.0 && r + q.radius >= 1.0) out.add(q);
        } else if (auto* bx = std::get_if<Box>(&prim)) {
            Box q{move(bx->min), move(bx->max)};
            double far = 0.0;
            for (std::size_t k = 0; k < n; ++k) far += std::max(q.min[k] * q.min[k], q.max[k] * q.max[k]);
            if (distance_to(q, origin) <= 2.0 && std::sqrt(far) >= 1.0) out.add(q);
        } else {
            const auto& ps = std::get<PointSet>(prim);
            PointSet q{PointCloud(n), ps.radius * s};
            for (std::size_t i = 0; i < ps.coords.size(); ++i) {
                Point y = move(ps.coords[i]);
                const double r = norm(y);
                if (r - q.radius <= 2.0 && r + q.radius >= 1.0) q.coords.push_back(y);
            }
            if (!q.coords.empty()) out.add(std::move(q));
        }
    }
    return out;
}

/// Capacity of E ∩ omega_i relative to Omega_i, computed on the unit ladder
/// (omega = [1, 2], Omega = (1/2, 4)) after rescaling by 2^i / delta.
inline CapacityResult unit_shell_capacity(const RegionSet& e, std::span<const double> p, double alpha, double delta,
                                          int i, const Resolution& res, const SolveOptions& solver) {
    const std::size_t n = e.dim();
    const double s = std::ldexp(1.0, i) / delta;
    CapacityProblem pb;
    pb.set = unit_shell_pieces(e, p, s);
    pb.omega = Domain::annulus(Point(n, 0.0), 0.5, 4.0);
    pb.kernel = alpha == static_cast<double>(n) ? KernelSpec::log(static_cast<int>(n), 8.0)
                                                : KernelSpec::riesz(static_cast<int>(n), alpha);
    pb.resolution = res;
    pb.sample_filter = [](std::span<const double> x) {
        const double r = norm(x);
        return r >= 1.0 && r <= 2.0;
    };
    pb.filter_box = Box{Point(n, -2.0), Point(n, 2.0)};
    return capacity(pb, solver);
}

inline ThinnessReport thinness_test(const RegionSet& e, std::span<const double> p, double alpha, double delta,
                                    int shells = 12, const ThinnessOptions& opt = {}) {
    const std::size_t n = e.dim();
    require(n >= 2 && p.size() == n, "thinness_test: point dimension differs from the set");
    require(alpha > 1.0 && alpha <= static_cast<double>(n), "thinness_test: alpha must lie in (1, n]");
    require(delta > 0.0, "thinness_test: delta must be positive");
    require(shells >= 5, "thinness_test: need at least 5 shells");
    const bool log_kernel = alpha == static_cast<double>(n);

    ThinnessReport rep;
    rep.alpha = alpha;
    rep.ladder = AnnulusLadder(Point(p.begin(), p.end()), delta, opt.start, shells);
    if (!log_kernel)
        rep.sphere_constant = opt.sphere_constant > 0.0
                                  ? opt.sphere_constant
                                  : sphere_capacity_constant(static_cast<int>(n), alpha, opt.sphere_resolution, opt.solver);

    std::vector<CapacityResult> res(shells);
    parallel_for(static_cast<std::size_t>(shells), opt.workers, [&](std::size_t q) {
        const int i = opt.start + static_cast<int>(q);
        res[q] = unit_shell_capacity(e, p, alpha, delta, i, opt.resolution, opt.solver);
        if (!res[q].ok())
            throw solver_error("thinness_test: shell " + std::to_string(i) + ": " + res[q].status, res[q].iterations);
    });

    double sum = 0.0;
    for (int q = 0; q < shells; ++q) {
        const int i = opt.start + q;
        const double scale = std::ldexp(delta, -i);
        const double unit = res[q].value;
        double num, den, term;
        if (log_kernel) {
            num = unit;
            den = 1.0 / i;
            term = i * unit;
        } else {
            num = std::pow(scale, static_cast<double>(n) - alpha) * unit;
            den = rep.sphere_constant * std::pow(scale, static_cast<double>(n) - alpha);
            term = unit / rep.sphere_constant;
        }
        sum += term;
        rep.unit_values.push_back(unit);
        rep.numerators.push_back(num);
        rep.denominators.push_back(den);
        rep.terms.push_back(term);
        rep.partial_sums.push_back(sum);
        rep.sites.push_back(res[q].n_sites);
        rep.samples.push_back(res[q].n_samples);
    }
    rep.tail = fit_tail(rep.terms);
    rep.verdict = series_verdict(rep.tail, opt.margin);
    return rep;
}

// ---------------------------------------------------------------------------
// Avoiding ray
// ---------------------------------------------------------------------------

enum class RayStatus { verified, all_samples_blocked, budget_exceeded };

inline std::string to_string(RayStatus s) {
    switch (s) {
        case RayStatus::verified: return "verified";
        case RayStatus::all_samples_blocked: return "all_samples_blocked";
        default: return "budget_exceeded";
    }
}

struct RayResult {
    RayStatus status = RayStatus::all_samples_blocked;
    Point direction;
    double reach = 0.0;
    int tail_index = 0;  // k
    int depth_index = 0; // K
    bool budget_met = false;
    double budget_sum = std::numeric_limits<double>::infinity();
    std::size_t samples_tried = 0;
    std::size_t blocked = 0;

    bool ok() const { return status == RayStatus::verified; }
};

struct RayOptions {
    std::size_t sphere_samples = 2000;
    double budget_fraction = 0.5;
};

/// Uses a thinness report for the same (E, p, alpha, delta). Picks the first k
/// whose remaining series (computed terms plus fitted tail) is within the
/// budget, scans directions for a segment from 2^{-K} delta to 2^{-k+1} delta
/// missing E, then checks the whole segment (0, 2^{-k+1} delta] exactly.
inline RayResult find_avoiding_ray(const RegionSet& e, std::span<const double> p, const ThinnessReport& rep,
                                   const RayOptions& opt = {}) {
    const std::size_t n = e.dim();
    require(p.size() == n, "find_avoiding_ray: point dimension differs from the set");
    require(opt.sphere_samples > 0, "find_avoiding_ray: need sphere samples");
    const int i0 = rep.ladder.start(), m = rep.ladder.count();
    const double delta = rep.ladder.delta();

    RayResult out;
    out.depth_index = i0 + m;
    const double tail = rep.tail.tail;
    for (int q = 0; q < m; ++q) {
        double s = tail;
        for (int j = q; j < m; ++j) s += rep.terms[j];
        if (s <= opt.budget_fraction) {
            out.tail_index = i0 + q;
            out.budget_sum = s;
            out.budget_met = true;
            break;
        }
    }
    if (!out.budget_met) out.tail_index = i0;
    const int k = out.tail_index;
    out.reach = std::ldexp(delta, -k + 1);
    const double inner = std::ldexp(delta, -out.depth_index);

    const PointCloud dirs = sphere_points(n, opt.sphere_samples);
    for (std::size_t s = 0; s < dirs.size(); ++s) {
        ++out.samples_tried;
        const auto u = dirs[s];
        if (e.segment_hits(p, u, inner, out.reach) || e.segment_hits(p, u, 0.0, out.reach)) {
            ++out.blocked;
            continue;
        }
        out.direction = dirs.point(s);
        out.status = RayStatus::verified;
        return out;
    }
    out.status = out.budget_met ? RayStatus::all_samples_blocked : RayStatus::budget_exceeded;
    return out;
}

}  // namespace potcap
