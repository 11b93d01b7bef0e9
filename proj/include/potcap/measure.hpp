#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "geometry.hpp"
#include "point_cloud.hpp"
#include "sampling.hpp"

namespace potcap {

/// Finite nonnegative atomic measure sum_j w_j delta_{y_j}.
class DiscreteMeasure {
public:
    DiscreteMeasure() = default;
    explicit DiscreteMeasure(std::size_t dim) : atoms_(dim) {}
    DiscreteMeasure(PointCloud atoms, std::vector<double> weights) : atoms_(std::move(atoms)), weights_(std::move(weights)) {
        require(atoms_.size() == weights_.size(), "measure: atom/weight count mismatch");
        for (double w : weights_) require(std::isfinite(w) && w >= 0.0, "measure: weights must be finite and >= 0");
    }

    void add(std::span<const double> x, double w) {
        require(std::isfinite(w) && w >= 0.0, "measure: weights must be finite and >= 0");
        atoms_.push_back(x);
        weights_.push_back(w);
    }
    void add(const Point& x, double w) { add(std::span<const double>(x), w); }

    std::size_t dim() const noexcept { return atoms_.dim(); }
    std::size_t size() const noexcept { return weights_.size(); }
    const PointCloud& atoms() const noexcept { return atoms_; }
    const std::vector<double>& weights() const noexcept { return weights_; }
    double total_mass() const { return std::accumulate(weights_.begin(), weights_.end(), 0.0); }

    /// a*this + b*other (atoms concatenated).
    DiscreteMeasure combined(double a, const DiscreteMeasure& other, double b) const {
        require(a >= 0.0 && b >= 0.0, "measure: combination coefficients must be >= 0");
        DiscreteMeasure r(dim());
        for (std::size_t j = 0; j < size(); ++j) r.add(atoms_[j], a * weights_[j]);
        for (std::size_t j = 0; j < other.size(); ++j) r.add(other.atoms_[j], b * other.weights_[j]);
        return r;
    }

    /// Push-forward under x -> lambda x.
    DiscreteMeasure scaled(double lambda) const {
        DiscreteMeasure r = *this;
        for (auto& v : r.atoms_.coords()) v *= lambda;
        return r;
    }

    bool inside(const Domain& omega) const {
        for (std::size_t j = 0; j < size(); ++j)
            if (!omega.contains(atoms_[j])) return false;
        return true;
    }

private:
    PointCloud atoms_;
    std::vector<double> weights_;
};

/// Mass of the closed ball of radius r about center.
inline double ball_mass(const DiscreteMeasure& mu, std::span<const double> center, double r) {
    require(r >= 0.0, "ball_mass: radius must be >= 0");
    const double r2 = r * r;
    double m = 0.0;
    for (std::size_t j = 0; j < mu.size(); ++j)
        if (dist2(mu.atoms()[j], center) <= r2) m += mu.weights()[j];
    return m;
}

/// Sorted atom distances from a fixed center with prefix masses; answers
/// closed-ball and annulus mass queries in O(log N).
class RadialProfile {
public:
    RadialProfile(const DiscreteMeasure& mu, std::span<const double> center) {
        std::vector<std::pair<double, double>> dw(mu.size());
        for (std::size_t j = 0; j < mu.size(); ++j) dw[j] = {dist(mu.atoms()[j], center), mu.weights()[j]};
        std::sort(dw.begin(), dw.end());
        r_.resize(dw.size());
        cum_.assign(dw.size() + 1, 0.0);
        for (std::size_t j = 0; j < dw.size(); ++j) {
            r_[j] = dw[j].first;
            cum_[j + 1] = cum_[j] + dw[j].second;
        }
    }

    /// mu({|y - c| <= r})
    double closed(double r) const { return cum_[std::upper_bound(r_.begin(), r_.end(), r) - r_.begin()]; }
    /// mu({|y - c| < r})
    double open(double r) const { return cum_[std::lower_bound(r_.begin(), r_.end(), r) - r_.begin()]; }
    /// mu({a < |y - c| < b})
    double open_annulus(double a, double b) const { return b <= a ? 0.0 : std::max(0.0, open(b) - closed(a)); }
    double total() const { return cum_.back(); }
    /// Smallest positive atom distance, or +inf.
    double min_positive_distance() const {
        auto it = std::upper_bound(r_.begin(), r_.end(), 0.0);
        return it == r_.end() ? std::numeric_limits<double>::infinity() : *it;
    }

private:
    std::vector<double> r_;
    std::vector<double> cum_;
};

/// r_max * 2^{-k}, k = 0 .. count-1.
inline std::vector<double> dyadic_radii(double r_max, int count) {
    require(r_max > 0.0 && count > 0, "dyadic_radii: need r_max > 0 and count > 0");
    std::vector<double> r(count);
    for (int k = 0; k < count; ++k) r[k] = std::ldexp(r_max, -k);
    return r;
}

// ---------------------------------------------------------------------------
// Upper-density scan
// ---------------------------------------------------------------------------

struct DensityEstimate {
    double sup = 0.0;
    double argmax_radius = 0.0;
    /// Values r^{-d} mu(B_r) strictly increase over the five smallest radii, by at
    /// least the factor (r_5 / r_1)^{d/2} overall.
    bool unbounded_suspect = false;
};

namespace detail {

inline DensityEstimate scan_profile(const RadialProfile& prof, double d, std::vector<double> radii) {
    std::sort(radii.begin(), radii.end());
    DensityEstimate est;
    std::vector<double> vals(radii.size());
    for (std::size_t k = 0; k < radii.size(); ++k) {
        vals[k] = std::pow(radii[k], -d) * prof.closed(radii[k]);
        if (vals[k] > est.sup) {
            est.sup = vals[k];
            est.argmax_radius = radii[k];
        }
    }
    const std::size_t m = std::min<std::size_t>(5, vals.size());
    if (m >= 2 && vals[0] > 0.0) {
        bool increasing = true;
        for (std::size_t k = 0; k + 1 < m; ++k) increasing = increasing && vals[k] > vals[k + 1];
        // lattice effects give a slow drift; a blow-up grows at least like r^{-d/2}
        est.unbounded_suspect = increasing && vals[0] > vals[m - 1] * std::pow(radii[m - 1] / radii[0], 0.5 * d);
    }
    return est;
}

inline void check_radii(const std::vector<double>& radii) {
    require(!radii.empty(), "density scan: radii list is empty");
    for (double r : radii) require(r > 0.0, "density scan: radii must be positive");
}

}  // namespace detail

/// Per probe x: sup over radii of r^{-d} mu(B_r(x)) with an unboundedness flag.
inline std::vector<DensityEstimate> density_scan(const DiscreteMeasure& mu, const PointCloud& probes, double d,
                                                 const std::vector<double>& radii) {
    detail::check_radii(radii);
    require(d >= 0.0 && d <= static_cast<double>(mu.dim()), "density_scan: d must lie in [0, n]");
    std::vector<DensityEstimate> out(probes.size());
    for (std::size_t i = 0; i < probes.size(); ++i) out[i] = detail::scan_profile(RadialProfile(mu, probes[i]), d, radii);
    return out;
}

// ---------------------------------------------------------------------------
// Growth certificate
// ---------------------------------------------------------------------------

/// mu(B_r(p)) <= constant * r^exponent for every listed dyadic r in [r_min, r_max].
/// Off the grid the bound holds up to the factor 2^exponent (dyadic_slack).
struct GrowthCertificate {
    Point base;
    double exponent = 0.0;
    double constant = 0.0;
    double r_min = 0.0, r_max = 0.0;
    double dyadic_slack = 1.0;
};

inline std::optional<GrowthCertificate> growth_certificate(const DiscreteMeasure& mu, std::span<const double> p,
                                                           double exponent, const std::vector<double>& radii) {
    detail::check_radii(radii);
    const RadialProfile prof(mu, p);
    const DensityEstimate est = detail::scan_profile(prof, exponent, radii);
    if (est.unbounded_suspect) return std::nullopt;
    GrowthCertificate c;
    c.base.assign(p.begin(), p.end());
    c.exponent = exponent;
    c.constant = est.sup;
    c.r_min = *std::min_element(radii.begin(), radii.end());
    c.r_max = *std::max_element(radii.begin(), radii.end());
    c.dyadic_slack = std::pow(2.0, exponent);
    return c;
}

/// Least-squares slope of log mu(B_r(p)) against log r over radii with positive mass.
inline double local_growth_exponent(const DiscreteMeasure& mu, std::span<const double> p,
                                    const std::vector<double>& radii) {
    const RadialProfile prof(mu, p);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (double r : radii) {
        const double mass = prof.closed(r);
        if (mass <= 0.0) continue;
        const double x = std::log(r), y = std::log(mass);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++m;
    }
    if (m < 2) return static_cast<double>(mu.dim());
    const double den = m * sxx - sx * sx;
    return den == 0.0 ? static_cast<double>(mu.dim()) : (m * sxy - sx * sy) / den;
}

// ---------------------------------------------------------------------------
// Vitali point on the unit sphere
// ---------------------------------------------------------------------------

struct VitaliPoint {
    std::size_t index = 0;
    Point point;
    /// sup over dyadic r in (0, 3] of mu(B_r(p) ∩ B_2) / (mu(B_2) r^{n-1}).
    double ratio = 0.0;
    double worst_radius = 0.0;
    /// ratio <= c, i.e. the growth bound holds at the sampled resolution.
    bool certified = false;
};

inline VitaliPoint vitali_point(const DiscreteMeasure& mu, const PointCloud& sphere_samples, double c,
                                int dyadic_levels = 53) {
    require(!sphere_samples.empty(), "vitali_point: no sphere samples");
    require(sphere_samples.dim() == mu.dim(), "vitali_point: dimension mismatch");
    const std::size_t n = mu.dim();
    const Point origin(n, 0.0);
    for (std::size_t j = 0; j < mu.size(); ++j)
        require(norm(mu.atoms()[j]) < 2.0, "vitali_point: measure must be supported in B_2");
    const double total = mu.total_mass();
    if (!(total > 0.0)) throw domain_error("vitali_point: measure has zero mass (degenerate)");

    const std::vector<double> radii = dyadic_radii(2.0, dyadic_levels);
    VitaliPoint best;
    best.ratio = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < sphere_samples.size(); ++s) {
        const RadialProfile prof(mu, sphere_samples[s]);
        double worst = 0.0, worst_r = radii.front();
        for (double r : radii) {
            const double v = prof.closed(r) / (total * std::pow(r, static_cast<double>(n) - 1.0));
            if (v > worst) {
                worst = v;
                worst_r = r;
            }
        }
        if (worst < best.ratio) {
            best.index = s;
            best.ratio = worst;
            best.worst_radius = worst_r;
        }
    }
    best.point = sphere_samples.point(best.index);
    best.certified = best.ratio <= c;
    return best;
}

// ---------------------------------------------------------------------------
// Fixture measures
// ---------------------------------------------------------------------------

/// `count` atoms at Halton points of the box, equal weights summing to total.
inline DiscreteMeasure halton_box_measure(const Box& box, std::size_t count, double total) {
    DiscreteMeasure mu(box.dim());
    for (std::size_t i = 0; i < count; ++i) {
        Point h = halton(i, box.dim());
        for (std::size_t k = 0; k < h.size(); ++k) h[k] = box.min[k] + h[k] * (box.max[k] - box.min[k]);
        mu.add(h, total / static_cast<double>(count));
    }
    return mu;
}

inline DiscreteMeasure random_ball_measure(std::span<const double> center, double radius, std::size_t count,
                                           double total, std::uint64_t seed) {
    Rng rng(seed);
    DiscreteMeasure mu(center.size());
    for (std::size_t i = 0; i < count; ++i) mu.add(random_in_ball(rng, center, radius), total / static_cast<double>(count));
    return mu;
}

/// Atoms at the midpoints of `count` equal pieces of the segment [a, b].
inline DiscreteMeasure segment_measure(std::span<const double> a, std::span<const double> b, std::size_t count,
                                       double total) {
    DiscreteMeasure mu(a.size());
    Point x(a.size());
    for (std::size_t i = 0; i < count; ++i) {
        const double t = (static_cast<double>(i) + 0.5) / static_cast<double>(count);
        for (std::size_t k = 0; k < x.size(); ++k) x[k] = a[k] + t * (b[k] - a[k]);
        mu.add(x, total / static_cast<double>(count));
    }
    return mu;
}

inline DiscreteMeasure sphere_measure(std::size_t n, std::size_t count, double total) {
    const PointCloud pts = sphere_points(n, count);
    return DiscreteMeasure(pts, std::vector<double>(count, total / static_cast<double>(count)));
}

}  // namespace potcap
