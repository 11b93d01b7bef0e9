#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "point_cloud.hpp"
#include "sampling.hpp"

namespace potcap {

// ---------------------------------------------------------------------------
// Primitives and regions
// ---------------------------------------------------------------------------

struct Ball {
    Point center;
    double radius = 0.0;
};

struct Box {
    Point min;
    Point max;

    std::size_t dim() const { return min.size(); }
    bool empty() const {
        for (std::size_t k = 0; k < min.size(); ++k)
            if (min[k] > max[k]) return true;
        return false;
    }
    double extent() const {
        double e = 0.0;
        for (std::size_t k = 0; k < min.size(); ++k) e = std::max(e, max[k] - min[k]);
        return e;
    }
    double diameter() const { return dist(min, max); }
    Box intersect(const Box& o) const {
        Box r = *this;
        for (std::size_t k = 0; k < min.size(); ++k) {
            r.min[k] = std::max(min[k], o.min[k]);
            r.max[k] = std::min(max[k], o.max[k]);
        }
        return r;
    }
    Box inflated(double m) const {
        Box r = *this;
        for (std::size_t k = 0; k < min.size(); ++k) {
            r.min[k] -= m;
            r.max[k] += m;
        }
        return r;
    }
};

/// Finite point cloud; each point stands for the closed ball of `radius` about it.
struct PointSet {
    PointCloud coords;
    double radius = 0.0;
};

using Primitive = std::variant<Ball, Box, PointSet>;

namespace detail {

template <class... Fs>
struct overloaded : Fs... {
    using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

/// Parameter interval [a, b] of the line p + t*u (|u| = 1) inside the closed ball.
inline std::pair<double, double> line_ball(std::span<const double> p, std::span<const double> u,
                                           std::span<const double> c, double r) {
    double b = 0.0, cc = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        const double d = p[k] - c[k];
        b += u[k] * d;
        cc += d * d;
    }
    const double disc = b * b - (cc - r * r);
    if (disc < 0.0) return {1.0, -1.0};
    const double s = std::sqrt(disc);
    return {-b - s, -b + s};
}

inline std::pair<double, double> line_box(std::span<const double> p, std::span<const double> u, const Box& box) {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < p.size(); ++k) {
        if (u[k] == 0.0) {
            if (p[k] < box.min[k] || p[k] > box.max[k]) return {1.0, -1.0};
            continue;
        }
        double t1 = (box.min[k] - p[k]) / u[k];
        double t2 = (box.max[k] - p[k]) / u[k];
        if (t1 > t2) std::swap(t1, t2);
        lo = std::max(lo, t1);
        hi = std::min(hi, t2);
    }
    return {lo, hi};
}

inline bool interval_hits(std::pair<double, double> iv, double t0, double t1) {
    return iv.first <= iv.second && iv.second > t0 && iv.first <= t1;
}

}  // namespace detail

inline std::size_t primitive_dim(const Primitive& p) {
    return std::visit(detail::overloaded{[](const Ball& b) { return b.center.size(); },
                                         [](const Box& b) { return b.min.size(); },
                                         [](const PointSet& s) { return s.coords.dim(); }},
                      p);
}

inline bool contains(const Primitive& prim, std::span<const double> x) {
    return std::visit(
        detail::overloaded{
            [&](const Ball& b) { return dist2(x, b.center) <= b.radius * b.radius; },
            [&](const Box& b) {
                for (std::size_t k = 0; k < x.size(); ++k)
                    if (x[k] < b.min[k] || x[k] > b.max[k]) return false;
                return true;
            },
            [&](const PointSet& s) {
                const double r2 = s.radius * s.radius;
                for (std::size_t i = 0; i < s.coords.size(); ++i)
                    if (dist2(x, s.coords[i]) <= r2) return true;
                return false;
            }},
        prim);
}

/// Euclidean distance from x to the primitive (0 inside).
inline double distance_to(const Primitive& prim, std::span<const double> x) {
    return std::visit(
        detail::overloaded{[&](const Ball& b) { return std::max(0.0, dist(x, b.center) - b.radius); },
                           [&](const Box& b) {
                               double s = 0.0;
                               for (std::size_t k = 0; k < x.size(); ++k) {
                                   const double d = std::max({b.min[k] - x[k], 0.0, x[k] - b.max[k]});
                                   s += d * d;
                               }
                               return std::sqrt(s);
                           },
                           [&](const PointSet& s) {
                               double best = std::numeric_limits<double>::infinity();
                               for (std::size_t i = 0; i < s.coords.size(); ++i)
                                   best = std::min(best, dist2(x, s.coords[i]));
                               return std::max(0.0, std::sqrt(best) - s.radius);
                           }},
        prim);
}

inline Box bounding_box(const Primitive& prim) {
    return std::visit(detail::overloaded{[](const Ball& b) {
                                             Box r{b.center, b.center};
                                             return r.inflated(b.radius);
                                         },
                                         [](const Box& b) { return b; },
                                         [](const PointSet& s) {
                                             const std::size_t n = s.coords.dim();
                                             Box r{Point(n, std::numeric_limits<double>::infinity()),
                                                   Point(n, -std::numeric_limits<double>::infinity())};
                                             for (std::size_t i = 0; i < s.coords.size(); ++i)
                                                 for (std::size_t k = 0; k < n; ++k) {
                                                     r.min[k] = std::min(r.min[k], s.coords[i][k]);
                                                     r.max[k] = std::max(r.max[k], s.coords[i][k]);
                                                 }
                                             return r.inflated(s.radius);
                                         }},
                      prim);
}

inline Primitive scale_primitive(const Primitive& prim, double lambda) {
    return std::visit(detail::overloaded{[&](const Ball& b) -> Primitive {
                                             return Ball{scaled(b.center, lambda), b.radius * lambda};
                                         },
                                         [&](const Box& b) -> Primitive {
                                             return Box{scaled(b.min, lambda), scaled(b.max, lambda)};
                                         },
                                         [&](const PointSet& s) -> Primitive {
                                             PointSet r{s.coords, s.radius * lambda};
                                             for (auto& v : r.coords.coords()) v *= lambda;
                                             return r;
                                         }},
                      prim);
}

/// Does the segment {p + t*u : t0 < t <= t1} (|u| = 1) meet the closed primitive?
inline bool segment_hits(const Primitive& prim, std::span<const double> p, std::span<const double> u, double t0,
                         double t1) {
    return std::visit(
        detail::overloaded{
            [&](const Ball& b) { return detail::interval_hits(detail::line_ball(p, u, b.center, b.radius), t0, t1); },
            [&](const Box& b) { return detail::interval_hits(detail::line_box(p, u, b), t0, t1); },
            [&](const PointSet& s) {
                for (std::size_t i = 0; i < s.coords.size(); ++i)
                    if (detail::interval_hits(detail::line_ball(p, u, s.coords[i], s.radius), t0, t1)) return true;
                return false;
            }},
        prim);
}

/// A set E in R^n given as a finite union of primitives.
class RegionSet {
public:
    RegionSet() = default;
    explicit RegionSet(std::size_t dim) : dim_(dim) {}
    RegionSet(std::size_t dim, std::vector<Primitive> prims) : dim_(dim), prims_(std::move(prims)) {
        for (const auto& p : prims_) require(primitive_dim(p) == dim_, "RegionSet: primitive dimension mismatch");
    }

    std::size_t dim() const noexcept { return dim_; }
    bool empty() const noexcept { return prims_.empty(); }
    const std::vector<Primitive>& primitives() const noexcept { return prims_; }

    void add(Primitive p) {
        require(primitive_dim(p) == dim_, "RegionSet: primitive dimension mismatch");
        if (auto* b = std::get_if<Ball>(&p)) require(b->radius >= 0.0, "ball radius must be >= 0");
        if (auto* s = std::get_if<PointSet>(&p)) require(s->radius >= 0.0, "point radius must be >= 0");
        prims_.push_back(std::move(p));
    }

    bool contains(std::span<const double> x) const {
        return std::any_of(prims_.begin(), prims_.end(), [&](const Primitive& p) { return potcap::contains(p, x); });
    }

    bool segment_hits(std::span<const double> p, std::span<const double> u, double t0, double t1) const {
        return std::any_of(prims_.begin(), prims_.end(),
                           [&](const Primitive& q) { return potcap::segment_hits(q, p, u, t0, t1); });
    }

    friend RegionSet set_union(const RegionSet& a, const RegionSet& b) {
        RegionSet r = a;
        for (const auto& p : b.prims_) r.add(p);
        return r;
    }

private:
    std::size_t dim_ = 0;
    std::vector<Primitive> prims_;
};

/// E_lambda = {lambda x : x in E}, every primitive scaled about the origin.
inline RegionSet scale_set(const RegionSet& e, double lambda) {
    require(lambda > 0.0, "scale_set: lambda must be positive");
    RegionSet r(e.dim());
    for (const auto& p : e.primitives()) r.add(scale_primitive(p, lambda));
    return r;
}

/// Radial retraction onto the closed unit ball; 1-Lipschitz.
inline Point project_to_ball(std::span<const double> x) {
    const double r = norm(x);
    Point y(x.begin(), x.end());
    if (r >= 1.0)
        for (auto& v : y) v /= r;
    return y;
}

// ---------------------------------------------------------------------------
// Domains
// ---------------------------------------------------------------------------

/// Bounded open container Omega: an open box, ball, or annulus.
class Domain {
public:
    enum class Shape { box, ball, annulus };

    static Domain box(Point min, Point max) {
        require(min.size() == max.size() && min.size() >= 2, "Domain::box: dimension must be >= 2");
        for (std::size_t k = 0; k < min.size(); ++k) require(min[k] < max[k], "Domain::box: empty box");
        Domain d;
        d.shape_ = Shape::box;
        d.a_ = std::move(min);
        d.b_ = std::move(max);
        return d;
    }
    static Domain ball(Point center, double radius) { return annulus(std::move(center), 0.0, radius); }
    static Domain annulus(Point center, double inner, double outer) {
        require(center.size() >= 2, "Domain: dimension must be >= 2");
        require(inner >= 0.0 && outer > inner, "Domain: need 0 <= inner < outer");
        Domain d;
        d.shape_ = inner > 0.0 ? Shape::annulus : Shape::ball;
        d.a_ = std::move(center);
        d.inner_ = inner;
        d.outer_ = outer;
        return d;
    }

    Shape shape() const noexcept { return shape_; }
    std::size_t dim() const noexcept { return a_.size(); }
    const Point& center() const noexcept { return a_; }
    double inner_radius() const noexcept { return inner_; }
    double outer_radius() const noexcept { return outer_; }
    const Point& box_min() const noexcept { return a_; }
    const Point& box_max() const noexcept { return b_; }

    double diameter() const { return shape_ == Shape::box ? dist(a_, b_) : 2.0 * outer_; }

    bool contains(std::span<const double> x) const {
        if (shape_ == Shape::box) {
            for (std::size_t k = 0; k < x.size(); ++k)
                if (!(x[k] > a_[k] && x[k] < b_[k])) return false;
            return true;
        }
        const double r = dist(x, a_);
        return r < outer_ && r > inner_;
    }

    Box bounding_box() const {
        if (shape_ == Shape::box) return Box{a_, b_};
        return Box{a_, a_}.inflated(outer_);
    }

    Domain scaled(double lambda) const {
        require(lambda > 0.0, "Domain::scaled: lambda must be positive");
        Domain d = *this;
        for (auto& v : d.a_) v *= lambda;
        for (auto& v : d.b_) v *= lambda;
        d.inner_ *= lambda;
        d.outer_ *= lambda;
        return d;
    }

private:
    Shape shape_ = Shape::ball;
    Point a_, b_;
    double inner_ = 0.0, outer_ = 1.0;
};

// ---------------------------------------------------------------------------
// Dyadic annulus ladder
// ---------------------------------------------------------------------------

/// Closed shell omega_i = {r in [inner, outer]} and open fattened shell
/// Omega_i = {r in (fat_inner, fat_outer)} about a common center.
struct ShellPair {
    int index = 0;
    double inner = 0.0, outer = 0.0;
    double fat_inner = 0.0, fat_outer = 0.0;

    bool in_shell(double r) const { return r >= inner && r <= outer; }
    bool in_fat_shell(double r) const { return r > fat_inner && r < fat_outer; }
};

inline ShellPair dyadic_shell(double delta, int i) {
    return {i, std::ldexp(delta, -i), std::ldexp(delta, -i + 1), std::ldexp(delta, -i - 1), std::ldexp(delta, -i + 2)};
}

class AnnulusLadder {
public:
    AnnulusLadder(Point center, double delta, int start, int count)
        : center_(std::move(center)), delta_(delta), start_(start), count_(count) {
        require(delta_ > 0.0, "AnnulusLadder: delta must be positive");
        require(start_ >= 1 && count_ >= 1, "AnnulusLadder: need start >= 1 and count >= 1");
    }

    const Point& center() const noexcept { return center_; }
    double delta() const noexcept { return delta_; }
    int start() const noexcept { return start_; }
    int count() const noexcept { return count_; }
    int stop() const noexcept { return start_ + count_; }

    ShellPair shell(int i) const {
        if (i < start_ || i >= stop()) throw domain_error("AnnulusLadder: shell index out of range");
        return dyadic_shell(delta_, i);
    }

    bool in_shell(int i, std::span<const double> x) const { return shell(i).in_shell(dist(x, center_)); }
    bool in_fat_shell(int i, std::span<const double> x) const { return shell(i).in_fat_shell(dist(x, center_)); }

private:
    Point center_;
    double delta_;
    int start_, count_;
};

// ---------------------------------------------------------------------------
// Metric charts
// ---------------------------------------------------------------------------

/// Euclidean distance, or the pulled-back distance |Phi(x) - Phi(y)| of a
/// bi-Lipschitz warp Phi with declared constant L.
class MetricChart {
public:
    using Warp = std::function<Point(std::span<const double>)>;

    static MetricChart euclidean() { return {}; }
    static MetricChart warped(Warp phi, double lipschitz, std::string name = "custom") {
        require(lipschitz >= 1.0, "MetricChart: bi-Lipschitz constant must be >= 1");
        MetricChart m;
        m.phi_ = std::move(phi);
        m.lip_ = lipschitz;
        m.name_ = std::move(name);
        return m;
    }
    /// Phi(x)_k = x_k + a sin(b x_k); bi-Lipschitz with L = max(1 + ab, 1 / (1 - ab)) for ab < 1.
    static MetricChart sinusoidal(double amplitude, double frequency) {
        const double ab = amplitude * frequency;
        require(ab >= 0.0 && ab < 1.0, "MetricChart::sinusoidal: need 0 <= a*b < 1");
        return warped(
            [amplitude, frequency](std::span<const double> x) {
                Point y(x.begin(), x.end());
                for (auto& v : y) v += amplitude * std::sin(frequency * v);
                return y;
            },
            std::max(1.0 + ab, 1.0 / (1.0 - ab)), "sinusoidal");
    }

    bool is_euclidean() const noexcept { return !phi_; }
    double lipschitz() const noexcept { return lip_; }
    const std::string& name() const noexcept { return name_; }

    Point map(std::span<const double> x) const { return phi_ ? phi_(x) : Point(x.begin(), x.end()); }
    double distance(std::span<const double> x, std::span<const double> y) const {
        if (!phi_) return dist(x, y);
        return dist(phi_(x), phi_(y));
    }
    PointCloud map(const PointCloud& pts) const {
        if (!phi_) return pts;
        PointCloud out(pts.dim());
        out.reserve(pts.size());
        for (std::size_t i = 0; i < pts.size(); ++i) out.push_back(phi_(pts[i]));
        return out;
    }

    /// Worst observed distortion max(d/|x-y|, |x-y|/d) over random pairs in the box.
    double sampled_distortion(const Box& box, std::size_t pairs, std::uint64_t seed) const {
        Rng rng(seed);
        double worst = 1.0;
        const std::size_t n = box.dim();
        Point x(n), y(n);
        for (std::size_t s = 0; s < pairs; ++s) {
            for (std::size_t k = 0; k < n; ++k) {
                x[k] = rng.uniform(box.min[k], box.max[k]);
                y[k] = rng.uniform(box.min[k], box.max[k]);
            }
            const double e = dist(x, y);
            if (e == 0.0) continue;
            const double d = distance(x, y);
            worst = std::max({worst, d / e, e / d});
        }
        return worst;
    }

private:
    Warp phi_;
    double lip_ = 1.0;
    std::string name_ = "euclidean";
};

}  // namespace potcap
