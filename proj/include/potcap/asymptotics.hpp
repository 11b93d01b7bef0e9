#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "capacity.hpp"
#include "geometry.hpp"
#include "kernel.hpp"
#include "measure.hpp"
#include "parallel.hpp"
#include "sampling.hpp"
#include "thinness.hpp"

namespace potcap {

/// Deterministic points of the closed shell 2^{-i} delta <= |x - p| <= 2^{-i+1} delta:
/// low-discrepancy directions, radii spread geometrically across the shell.
inline PointCloud shell_samples(std::span<const double> p, double delta, int i, std::size_t count) {
    const std::size_t n = p.size();
    const PointCloud dirs = sphere_points(n, count);
    PointCloud out(n);
    out.reserve(count);
    const double r0 = std::ldexp(delta, -i);
    Point x(n);
    for (std::size_t j = 0; j < count; ++j) {
        const double r = r0 * std::exp2(radical_inverse(j + 1, 3));
        for (std::size_t k = 0; k < n; ++k) x[k] = p[k] + r * dirs[j][k];
        out.push_back(x);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Multiscale Riesz bound
// ---------------------------------------------------------------------------

struct MultiscaleOptions {
    int start = 1;       // i0
    int shells = 10;
    double epsilon = -1; // < 0: half the gap between the fitted growth exponent and d
    double lambda = 1.0;
    std::size_t samples_per_shell = 200;
    /// c(n, alpha) for the budget series; computed when <= 0.
    double sphere_constant = 0.0;
    std::size_t workers = 1;
};

struct MultiscaleShell {
    int index = 0;
    double term1 = 0.0;        // far-mass bound
    double term2 = 0.0;        // dyadic near-mass bound
    double term2_growth = 0.0; // the same bound through the growth certificate
    double threshold = 0.0;    // lambda 2^{i(n-alpha-d)}
    double fat_mass = 0.0;     // mu(Omega_i)
    double budget = 0.0;       // mu(Omega_i) / threshold
    std::vector<double> radius, term3, value;
    std::vector<bool> exceptional;
    std::size_t kept = 0;
    bool bounds_dominate = true;
};

struct MultiscaleReport {
    bool refused = false;
    std::string reason;
    Point base;
    std::size_t base_index = 0;
    GrowthCertificate certificate;
    double growth_slope = 0.0;
    double d = 0.0, epsilon = 0.0, lambda = 0.0, alpha = 0.0;
    std::vector<MultiscaleShell> shells;
    std::vector<double> budget_terms, budget_partial_sums;
    TailModel budget_tail;
    Verdict budget_verdict = Verdict::inconclusive;
    double sphere_constant = 0.0;
    double c_star = 0.0;
    std::size_t kept = 0, exceptional = 0;
};

inline MultiscaleReport multiscale_verify(const DiscreteMeasure& mu, const PointCloud& candidates, double d,
                                          double alpha, double delta, const MultiscaleOptions& opt = {}) {
    const std::size_t n = mu.dim();
    const double nd = static_cast<double>(n);
    require(alpha > 1.0 && alpha < nd, "multiscale_verify: alpha must lie in (1, n)");
    require(d >= 0.0 && d < nd - alpha, "multiscale_verify: need 0 <= d < n - alpha");
    require(delta > 0.0 && opt.lambda > 0.0, "multiscale_verify: delta and lambda must be positive");
    require(opt.start >= 1 && opt.shells >= 1, "multiscale_verify: bad shell range");
    require(!candidates.empty() && candidates.dim() == n, "multiscale_verify: need candidate points of dimension n");
    const KernelSpec ker = KernelSpec::riesz(static_cast<int>(n), alpha);
    const double s = nd - alpha;
    const int i0 = opt.start, last = opt.start + opt.shells - 1;

    MultiscaleReport rep;
    rep.d = d;
    rep.alpha = alpha;
    rep.lambda = opt.lambda;

    // Dyadic radii covering every fattened shell.
    std::vector<double> radii;
    for (int k = i0 - 2; k <= last + 1; ++k) radii.push_back(std::ldexp(delta, -k));

    bool found = false;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        const double slope = local_growth_exponent(mu, candidates[c], radii);
        const double eps = opt.epsilon >= 0.0 ? opt.epsilon : std::max(0.0, 0.5 * (slope - d));
        auto cert = growth_certificate(mu, candidates[c], d + eps, radii);
        if (!cert) continue;
        if (!found || cert->constant < rep.certificate.constant) {
            found = true;
            rep.certificate = *cert;
            rep.base_index = c;
            rep.base = candidates.point(c);
            rep.epsilon = eps;
            rep.growth_slope = slope;
        }
    }
    if (!found) {
        rep.refused = true;
        rep.reason = "no candidate point admits a growth certificate mu(B_r(p)) <= C r^(d+eps); "
                     "the dimension hypothesis on the support is not met at this resolution";
        return rep;
    }
    const auto& p = rep.base;
    const RadialProfile prof(mu, p);
    // Growth constant at exponent d (epsilon = 0) for the growth form of term II.
    const auto cert0 = growth_certificate(mu, p, d, radii);
    const double c0 = cert0 ? cert0->constant : std::numeric_limits<double>::infinity();

    const double far_mass = prof.total() - prof.open(std::ldexp(delta, -i0 + 2));
    const double term1 = far_mass * std::pow(std::ldexp(delta, -i0 + 1), -s);

    rep.shells.resize(opt.shells);
    parallel_for(static_cast<std::size_t>(opt.shells), opt.workers, [&](std::size_t q) {
        MultiscaleShell& sh = rep.shells[q];
        const int i = i0 + static_cast<int>(q);
        const ShellPair w = dyadic_shell(delta, i);
        sh.index = i;
        sh.term1 = term1;
        double t2 = 0.0, t2g = 0.0;
        for (int k = i0; k <= i - 1; ++k) {
            t2 += std::pow(std::ldexp(delta, -k), -s) * prof.closed(std::ldexp(delta, -k + 2));
            t2g += std::pow(4.0, d) * std::pow(std::ldexp(delta, -k), -(s - d));
        }
        t2 += std::pow(std::ldexp(delta, -i - 1), -s) * prof.closed(std::ldexp(delta, -i - 1));
        t2g += std::pow(std::ldexp(delta, -i - 1), -(s - d));
        sh.term2 = t2;
        sh.term2_growth = c0 * t2g;
        sh.threshold = opt.lambda * std::exp2(i * (s - d));
        // summed in atom order so the budget is reproducible from the measure alone
        sh.fat_mass = 0.0;
        for (std::size_t a = 0; a < mu.size(); ++a)
            if (w.in_fat_shell(dist(mu.atoms()[a], p))) sh.fat_mass += mu.weights()[a];
        sh.budget = sh.fat_mass / sh.threshold;

        const PointCloud xs = shell_samples(p, delta, i, opt.samples_per_shell);
        const double far_r = std::ldexp(delta, -i0 + 2);
        for (std::size_t j = 0; j < xs.size(); ++j) {
            const auto x = xs[j];
            double far = 0.0, near = 0.0, inner = 0.0;
            for (std::size_t a = 0; a < mu.size(); ++a) {
                const double wgt = mu.weights()[a];
                if (wgt == 0.0) continue;
                const double ry = dist(mu.atoms()[a], p);
                const double kv = wgt * ker(dist(x, mu.atoms()[a]));
                if (ry >= far_r)
                    far += kv;
                else if (w.in_fat_shell(ry))
                    inner += kv;
                else
                    near += kv;
            }
            const double r = dist(x, p);
            sh.radius.push_back(r);
            sh.term3.push_back(inner);
            sh.value.push_back(far + near + inner);
            const bool exc = inner >= sh.threshold;
            sh.exceptional.push_back(exc);
            if (!exc) ++sh.kept;
            if (far > term1 * (1.0 + 1e-12) || near > t2 * (1.0 + 1e-12)) sh.bounds_dominate = false;
        }
    });

    const double c = opt.sphere_constant > 0.0 ? opt.sphere_constant : sphere_capacity_constant(static_cast<int>(n), alpha);
    rep.sphere_constant = c;
    double sum = 0.0;
    for (const auto& sh : rep.shells) {
        const double term = sh.budget / (c * std::pow(std::ldexp(delta, -sh.index), s));
        sum += term;
        rep.budget_terms.push_back(term);
        rep.budget_partial_sums.push_back(sum);
        rep.kept += sh.kept;
        rep.exceptional += sh.exceptional.size() - sh.kept;
        for (std::size_t j = 0; j < sh.value.size(); ++j)
            if (!sh.exceptional[j]) rep.c_star = std::max(rep.c_star, sh.value[j] * std::pow(sh.radius[j], s - d));
    }
    rep.budget_tail = fit_tail(rep.budget_terms);
    rep.budget_verdict = series_verdict(rep.budget_tail);
    return rep;
}

// ---------------------------------------------------------------------------
// Log-potential limit
// ---------------------------------------------------------------------------

struct LogLimitOptions {
    int start = 1;
    int shells = 10;
    std::size_t samples_per_shell = 100;
    std::size_t workers = 1;
};

struct LogLimitShell {
    int index = 0;
    double mass = 0.0;   // a_i = mu(Omega_i)
    double tail = 0.0;   // r_i
    double weight = 0.0; // lambda_i = sqrt(r_i)
    double budget = 0.0; // a_i / (i lambda_i)
    std::vector<double> radius, restricted, ratio;
    std::vector<bool> exceptional;
};

struct LogLimitReport {
    Point base;
    double atom_mass = 0.0;
    double diameter = 0.0;
    std::vector<LogLimitShell> shells;
    /// sum_i a_i / lambda_i over every shell with mass, and 2 sqrt(r_{i0}).
    double weighted_sum = 0.0, weighted_bound = 0.0;
    std::vector<double> fit_x, fit_y; // 1/log(1/d) and ratio at kept samples
    double limit = 0.0, slope = 0.0;
    std::size_t kept = 0, exceptional = 0;
};

/// Log kernel log(D / |x - y|) with D = kernel.diameter.
inline LogLimitReport log_limit_verify(const DiscreteMeasure& mu, std::span<const double> p, double delta,
                                       const KernelSpec& kernel, const LogLimitOptions& opt = {}) {
    kernel.validate();
    require(kernel.is_log(), "log_limit_verify: needs the log kernel (alpha = n)");
    require(static_cast<std::size_t>(kernel.n) == mu.dim() && p.size() == mu.dim(), "log_limit_verify: dimension mismatch");
    require(delta > 0.0 && delta < 1.0, "log_limit_verify: delta must lie in (0, 1)");
    require(opt.start >= 1 && opt.shells >= 2, "log_limit_verify: bad shell range");
    const int i0 = opt.start;

    LogLimitReport rep;
    rep.base.assign(p.begin(), p.end());
    rep.diameter = kernel.diameter;
    const RadialProfile prof(mu, p);
    rep.atom_mass = prof.closed(0.0);

    // Shell masses down to the innermost atom off p, then tails.
    const double rmin = prof.min_positive_distance();
    int deepest = i0 + opt.shells - 1;
    if (std::isfinite(rmin)) deepest = std::max(deepest, static_cast<int>(std::ceil(std::log2(delta / rmin))) + 2);
    std::vector<double> a;
    for (int i = i0; i <= deepest; ++i) {
        const ShellPair w = dyadic_shell(delta, i);
        a.push_back(prof.open_annulus(w.fat_inner, w.fat_outer));
    }
    std::vector<double> tails(a.size() + 1, 0.0);
    for (std::size_t q = a.size(); q-- > 0;) tails[q] = tails[q + 1] + a[q];
    for (std::size_t q = 0; q < a.size(); ++q)
        if (a[q] > 0.0) rep.weighted_sum += a[q] / std::sqrt(tails[q]);
    rep.weighted_bound = 2.0 * std::sqrt(tails[0]);

    rep.shells.resize(opt.shells);
    parallel_for(static_cast<std::size_t>(opt.shells), opt.workers, [&](std::size_t q) {
        LogLimitShell& sh = rep.shells[q];
        const int i = i0 + static_cast<int>(q);
        const ShellPair w = dyadic_shell(delta, i);
        sh.index = i;
        sh.mass = a[q];
        sh.tail = tails[q];
        sh.weight = std::sqrt(tails[q]);
        sh.budget = sh.mass > 0.0 ? sh.mass / (i * sh.weight) : 0.0;
        const double di = 2.0 * w.fat_outer;
        const PointCloud xs = shell_samples(p, delta, i, opt.samples_per_shell);
        for (std::size_t j = 0; j < xs.size(); ++j) {
            const auto x = xs[j];
            double total = 0.0, restricted = 0.0;
            for (std::size_t t = 0; t < mu.size(); ++t) {
                const double wgt = mu.weights()[t];
                if (wgt == 0.0) continue;
                const double r = dist(x, mu.atoms()[t]);
                total += wgt * kernel(r);
                if (w.in_fat_shell(dist(mu.atoms()[t], p))) restricted += wgt * std::log(di / r);
            }
            const double r = dist(x, p);
            sh.radius.push_back(r);
            sh.restricted.push_back(restricted);
            sh.ratio.push_back(total / std::log(1.0 / r));
            sh.exceptional.push_back(sh.mass > 0.0 && restricted >= i * sh.weight);
        }
    });

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& sh : rep.shells)
        for (std::size_t j = 0; j < sh.ratio.size(); ++j) {
            if (sh.exceptional[j]) {
                ++rep.exceptional;
                continue;
            }
            ++rep.kept;
            const double x = 1.0 / std::log(1.0 / sh.radius[j]), y = sh.ratio[j];
            rep.fit_x.push_back(x);
            rep.fit_y.push_back(y);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
    const double m = static_cast<double>(rep.kept);
    if (rep.kept >= 2 && m * sxx - sx * sx > 0.0) {
        rep.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
        rep.limit = (sy - rep.slope * sx) / m;
    } else if (rep.kept > 0) {
        rep.limit = sy / m;
    }
    return rep;
}

}  // namespace potcap
