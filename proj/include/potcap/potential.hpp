#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "fmm.hpp"
#include "geometry.hpp"
#include "kernel.hpp"
#include "measure.hpp"
#include "parallel.hpp"

namespace potcap {

enum class Summation { naive, tree };

inline std::string to_string(Summation s) { return s == Summation::naive ? "naive" : "tree"; }

struct PotentialOptions {
    Summation method = Summation::naive;
    double tolerance = 1e-9;
    std::size_t workers = 1;
    int order = 0; // fixed interpolation order for the tree (0 = automatic)
};

struct PotentialField {
    PointCloud points;
    std::vector<double> values;
    /// Evaluation point coincides with an atom of positive mass; the value is +inf.
    std::vector<bool> singular;
    KernelSpec kernel;
    /// "naive", "tree", or "direct" when the tree is unavailable in this dimension.
    std::string method;
    std::vector<double> error_bound;
    int order = 0;
    double checked_error = 0.0;
};

namespace detail {

inline double max_pair_distance(const PointCloud& a, const PointCloud& b) {
    Box bb{Point(a.dim(), std::numeric_limits<double>::infinity()), Point(a.dim(), -std::numeric_limits<double>::infinity())};
    for (const PointCloud* c : {&a, &b})
        for (std::size_t i = 0; i < c->size(); ++i)
            for (std::size_t k = 0; k < a.dim(); ++k) {
                bb.min[k] = std::min(bb.min[k], (*c)[i][k]);
                bb.max[k] = std::max(bb.max[k], (*c)[i][k]);
            }
    return a.empty() || b.empty() ? 0.0 : bb.diameter();
}

/// Throws unless every atom-point distance is <= D.
inline void check_log_range(const PointCloud& atoms, const PointCloud& pts, double diameter) {
    if (max_pair_distance(atoms, pts) <= diameter) return;
    const double d2 = diameter * diameter;
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = 0; j < atoms.size(); ++j)
            if (dist2(pts[i], atoms[j]) > d2)
                throw domain_error("log kernel: atom farther than the domain diameter D from an evaluation point");
}

inline double naive_sum(const PointCloud& atoms, const std::vector<double>& w, const KernelSpec& k,
                        std::span<const double> x) {
    double v = 0.0;
    for (std::size_t j = 0; j < atoms.size(); ++j) {
        if (w[j] == 0.0) continue;
        v += w[j] * k.from_r2(dist2(x, atoms[j]));
    }
    return v;
}

}  // namespace detail

/// Potential sum_j w_j K(d(x, y_j)) at every point, with d the chart distance.
inline PotentialField eval_potential(const DiscreteMeasure& mu, const KernelSpec& kernel, const PointCloud& points,
                                     const MetricChart& metric = MetricChart::euclidean(),
                                     const PotentialOptions& opt = {}) {
    kernel.validate();
    require(static_cast<std::size_t>(kernel.n) == mu.dim(), "eval_potential: kernel dimension differs from measure");
    require(points.dim() == mu.dim() || points.empty(), "eval_potential: point dimension differs from measure");
    const PointCloud atoms = metric.map(mu.atoms());
    const PointCloud pts = metric.map(points);
    if (kernel.is_log()) detail::check_log_range(atoms, pts, kernel.diameter);

    PotentialField f;
    f.points = points;
    f.kernel = kernel;
    f.values.assign(points.size(), 0.0);
    f.error_bound.assign(points.size(), 0.0);
    const auto& w = mu.weights();

    const bool tree_ok = opt.method == Summation::tree && mu.dim() <= 3 && !atoms.empty() && !pts.empty();
    if (tree_ok) {
        fmm::Options fo;
        fo.tolerance = opt.tolerance;
        fo.workers = opt.workers;
        fo.order = opt.order;
        auto r = fmm::Evaluator(atoms, w, kernel, fo).evaluate(pts);
        f.values = std::move(r.values);
        f.error_bound = std::move(r.error_bound);
        f.order = r.order;
        f.checked_error = r.checked_error;
        f.method = "tree";
    } else {
        parallel_for(pts.size(), opt.workers, [&](std::size_t i) { f.values[i] = detail::naive_sum(atoms, w, kernel, pts[i]); });
        f.method = opt.method == Summation::tree ? "direct" : "naive";
    }
    f.singular.assign(points.size(), false);
    for (std::size_t i = 0; i < points.size(); ++i)
        if (std::isinf(f.values[i])) {
            f.values[i] = std::numeric_limits<double>::infinity();
            f.singular[i] = true;
        }
    return f;
}

/// Potential of the push-forward of mu under x -> lambda x, evaluated at lambda x.
inline double eval_potential_scaled(const DiscreteMeasure& mu, const KernelSpec& kernel, double lambda,
                                    std::span<const double> x) {
    require(lambda > 0.0, "eval_potential_scaled: lambda must be positive");
    kernel.validate();
    require(!kernel.is_log(), "eval_potential_scaled: Riesz kernel required");
    const DiscreteMeasure pushed = mu.scaled(lambda);
    return detail::naive_sum(pushed.atoms(), pushed.weights(), kernel, scaled(x, lambda));
}

}  // namespace potcap
