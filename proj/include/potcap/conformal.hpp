#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "errors.hpp"

namespace potcap {

enum class EquationKind { scalar, q_curvature_high, q_curvature_4 };

inline std::string to_string(EquationKind k) {
    switch (k) {
        case EquationKind::scalar: return "scalar";
        case EquationKind::q_curvature_high: return "q-curvature-high";
        default: return "q-curvature-4";
    }
}

inline EquationKind parse_equation_kind(const std::string& s) {
    if (s == "scalar") return EquationKind::scalar;
    if (s == "q-curvature-high" || s == "q-high") return EquationKind::q_curvature_high;
    if (s == "q-curvature-4" || s == "q4") return EquationKind::q_curvature_4;
    throw domain_error("unknown equation kind '" + s + "'");
}

struct ConformalModel {
    EquationKind kind = EquationKind::scalar;
    int n = 3;
    double d = 0.0;    // singular-set dimension (scalar, q-curvature-high)
    double mass = 0.0; // atom mass m (q-curvature-4)
    double C = 1.0;
    double l0 = 1.0;

    void validate() const {
        switch (kind) {
            case EquationKind::scalar:
                require(n >= 3, "scalar kind needs n >= 3");
                require(d >= 0.0, "d must be >= 0");
                break;
            case EquationKind::q_curvature_high:
                require(n >= 5, "q-curvature-high kind needs n >= 5");
                require(d >= 0.0, "d must be >= 0");
                break;
            case EquationKind::q_curvature_4:
                require(n == 4, "q-curvature-4 kind needs n = 4");
                require(mass >= 0.0, "mass must be >= 0");
                break;
        }
        require(C > 0.0 && std::isfinite(C), "C must be positive");
        require(l0 > 0.0 && std::isfinite(l0), "l0 must be positive");
    }
};

inline double length_exponent(const ConformalModel& m) {
    m.validate();
    const double n = m.n;
    switch (m.kind) {
        case EquationKind::scalar: return 2.0 * (n - 2.0 - m.d) / (n - 2.0);
        case EquationKind::q_curvature_high: return 2.0 * (n - 4.0 - m.d) / (n - 4.0);
        default: return m.C * m.mass;
    }
}

struct LengthVerdict {
    double exponent = 0.0;
    bool finite = false;
    double length = std::numeric_limits<double>::infinity();
    /// Integral over (0, s_K) left out of the quadrature.
    double error_bound = 0.0;
    int cells = 0;
};

namespace detail {

// 8-point Gauss-Legendre on [-1, 1]
inline constexpr std::array<double, 4> kGLx{0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                                            0.9602898564975363};
inline constexpr std::array<double, 4> kGLw{0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                                            0.1012285362903763};

}  // namespace detail

/// Length of a ray of Euclidean length l0 under the factor C s^{-e}: geometric
/// cells [l0 2^{-k-1}, l0 2^{-k}], Gauss-Legendre per cell, refined until the
/// omitted piece near s = 0 is below tol relative to the accumulated length.
inline LengthVerdict ray_length(const ConformalModel& m, double tol = 1e-10) {
    LengthVerdict v;
    v.exponent = length_exponent(m);
    const double e = v.exponent;
    if (e >= 1.0) return v;
    v.finite = true;
    auto f = [&](double s) { return m.C * std::pow(s, -e); };
    double sum = 0.0;
    double hi = m.l0;
    for (int k = 0; k < 4000; ++k) {
        const double lo = 0.5 * hi, c = 0.5 * (hi + lo), h = 0.5 * (hi - lo);
        double cell = 0.0;
        for (std::size_t q = 0; q < detail::kGLx.size(); ++q)
            cell += detail::kGLw[q] * (f(c - h * detail::kGLx[q]) + f(c + h * detail::kGLx[q]));
        sum += h * cell;
        hi = lo;
        v.cells = k + 1;
        // integral of C s^{-e} over (0, hi)
        const double rest = m.C * std::pow(hi, 1.0 - e) / (1.0 - e);
        if (k >= 39 && rest <= tol * sum) {
            v.error_bound = rest;
            break;
        }
        v.error_bound = rest;
    }
    v.length = sum;
    return v;
}

inline double closed_form_length(const ConformalModel& m) {
    const double e = length_exponent(m);
    return e >= 1.0 ? std::numeric_limits<double>::infinity() : m.C * std::pow(m.l0, 1.0 - e) / (1.0 - e);
}

struct Dichotomy {
    double exponent = 0.0;
    /// d above which a complete metric is impossible (scalar, q-curvature-high).
    double threshold = 0.0;
    bool contradiction = false;
    /// q-curvature-4: smallest atom mass compatible with completeness.
    double min_atom_mass = 0.0;
    std::string verdict;
};

inline Dichotomy dimension_dichotomy(const ConformalModel& m) {
    Dichotomy out;
    out.exponent = length_exponent(m);
    switch (m.kind) {
        case EquationKind::scalar: out.threshold = (m.n - 2.0) / 2.0; break;
        case EquationKind::q_curvature_high: out.threshold = (m.n - 4.0) / 2.0; break;
        default:
            out.min_atom_mass = 1.0 / m.C;
            out.threshold = out.min_atom_mass;
            out.contradiction = m.mass < out.min_atom_mass;
            out.verdict = out.contradiction ? "contradiction" : "completeness-compatible";
            return out;
    }
    out.contradiction = m.d > out.threshold;
    out.verdict = out.contradiction ? "contradiction" : "completeness-compatible";
    return out;
}

}  // namespace potcap
