#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "errors.hpp"

namespace potcap {

/// Order alpha in (1, n] on R^n. alpha < n selects the Riesz kernel
/// |x-y|^{-(n-alpha)}; alpha == n selects log(D / |x-y|) with D the domain diameter.
struct KernelSpec {
    int n = 3;
    double alpha = 2.0;
    double diameter = 0.0;

    static KernelSpec riesz(int n, double alpha) { return validated({n, alpha, 0.0}); }
    static KernelSpec log(int n, double diameter) { return validated({n, static_cast<double>(n), diameter}); }
    static KernelSpec validated(KernelSpec k) {
        k.validate();
        return k;
    }

    void validate() const {
        require(n >= 2, "kernel: dimension n must be >= 2");
        require(alpha > 1.0 && alpha <= n, "kernel: alpha must lie in (1, n]");
        if (is_log()) require(diameter > 0.0, "kernel: log kernel needs a positive diameter D");
    }

    bool is_log() const noexcept { return alpha == static_cast<double>(n); }
    /// Riesz exponent n - alpha (0 for the log kernel).
    double exponent() const noexcept { return n - alpha; }

    /// Kernel at distance r > 0; +infinity at r == 0.
    double operator()(double r) const {
        if (r == 0.0) return std::numeric_limits<double>::infinity();
        return is_log() ? std::log(diameter / r) : std::pow(r, -exponent());
    }
    /// Kernel from a squared distance, avoiding a separate sqrt on the Riesz branch.
    double from_r2(double r2) const {
        if (r2 == 0.0) return std::numeric_limits<double>::infinity();
        return is_log() ? 0.5 * std::log(diameter * diameter / r2) : std::pow(r2, -0.5 * exponent());
    }
    /// Kernel capped at its value at distance `cap`.
    double capped(double r, double cap) const { return (*this)(r < cap ? cap : r); }

    /// Same kernel on the domain scaled by lambda (log diameter scales along).
    KernelSpec scaled(double lambda) const {
        KernelSpec k = *this;
        if (is_log()) k.diameter *= lambda;
        return k;
    }

    std::string name() const { return is_log() ? "log" : "riesz"; }
};

}  // namespace potcap
