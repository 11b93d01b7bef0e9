#pragma once

// Dense tableau simplex for packing programs
//   maximize c^T x  subject to  A x <= b, x >= 0,  with b >= 0,
// so the origin is a feasible starting basis. Dantzig pricing, switching to
// Bland's rule after a run of degenerate pivots to rule out cycling.

#include <cmath>
#include <limits>
#include <vector>

#include "errors.hpp"

namespace potcap {

struct LPResult {
    enum class Status { optimal, unbounded, iteration_limit };
    Status status = Status::optimal;
    double objective = 0.0;
    std::vector<double> x;    // primal solution, size n
    std::vector<double> dual; // shadow prices of the m rows, size m
    long iterations = 0;
};

class PackingSimplex {
public:
    /// a is m x n row-major.
    PackingSimplex(std::size_t m, std::size_t n, const std::vector<double>& a, const std::vector<double>& b,
                   const std::vector<double>& c)
        : m_(m), n_(n), w_(n + 1), d_((m + 1) * (n + 1)), basis_(m), nonbasis_(n) {
        require(a.size() == m * n && b.size() == m && c.size() == n, "simplex: shape mismatch");
        for (std::size_t i = 0; i < m; ++i) {
            require(b[i] >= 0.0, "simplex: right-hand side must be >= 0");
            for (std::size_t j = 0; j < n; ++j) at(i, j) = a[i * n + j];
            at(i, n) = b[i];
            basis_[i] = static_cast<long>(n + i);
        }
        for (std::size_t j = 0; j < n; ++j) {
            at(m, j) = -c[j];
            nonbasis_[j] = static_cast<long>(j);
        }
    }

    LPResult solve(long max_iterations = 0, double eps = 1e-11) {
        if (max_iterations <= 0) max_iterations = 50 * static_cast<long>(m_ + n_) + 1000;
        LPResult res;
        long degenerate_run = 0;
        for (;;) {
            if (res.iterations >= max_iterations) {
                res.status = LPResult::Status::iteration_limit;
                break;
            }
            const bool bland = degenerate_run > 50;
            long s = -1;
            for (std::size_t j = 0; j < n_; ++j) {
                const double r = at(m_, j);
                if (r >= -eps) continue;
                if (s < 0) {
                    s = static_cast<long>(j);
                    if (bland) {
                        // smallest variable index among improving columns
                        for (std::size_t k = j + 1; k < n_; ++k)
                            if (at(m_, k) < -eps && nonbasis_[k] < nonbasis_[s]) s = static_cast<long>(k);
                        break;
                    }
                } else if (r < at(m_, s) || (r == at(m_, s) && nonbasis_[j] < nonbasis_[s])) {
                    s = static_cast<long>(j);
                }
            }
            if (s < 0) break;
            long r = -1;
            double best = 0.0;
            for (std::size_t i = 0; i < m_; ++i) {
                const double piv = at(i, s);
                if (piv <= eps) continue;
                const double ratio = at(i, n_) / piv;
                if (r < 0 || ratio < best || (ratio == best && basis_[i] < basis_[r])) {
                    r = static_cast<long>(i);
                    best = ratio;
                }
            }
            if (r < 0) {
                res.status = LPResult::Status::unbounded;
                break;
            }
            degenerate_run = at(r, n_) <= eps ? degenerate_run + 1 : 0;
            pivot(static_cast<std::size_t>(r), static_cast<std::size_t>(s));
            ++res.iterations;
        }
        res.x.assign(n_, 0.0);
        res.dual.assign(m_, 0.0);
        for (std::size_t i = 0; i < m_; ++i)
            if (basis_[i] < static_cast<long>(n_)) res.x[basis_[i]] = at(i, n_);
        for (std::size_t j = 0; j < n_; ++j)
            if (nonbasis_[j] >= static_cast<long>(n_)) res.dual[nonbasis_[j] - n_] = at(m_, j);
        res.objective = at(m_, n_);
        return res;
    }

private:
    double& at(std::size_t i, std::size_t j) { return d_[i * w_ + j]; }

    void pivot(std::size_t r, std::size_t s) {
        double* pr = &d_[r * w_];
        const double inv = 1.0 / pr[s];
        for (std::size_t j = 0; j < w_; ++j)
            if (j != s) pr[j] *= inv;
        pr[s] = inv;
        for (std::size_t i = 0; i <= m_; ++i) {
            if (i == r) continue;
            double* pi = &d_[i * w_];
            const double f = pi[s];
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < w_; ++j) pi[j] -= f * pr[j];
            pi[s] = -f * inv;
        }
        std::swap(basis_[r], nonbasis_[s]);
    }

    std::size_t m_, n_, w_;
    std::vector<double> d_;
    std::vector<long> basis_, nonbasis_;
};

inline LPResult solve_packing_lp(std::size_t m, std::size_t n, const std::vector<double>& a,
                                 const std::vector<double>& b, const std::vector<double>& c,
                                 long max_iterations = 0) {
    return PackingSimplex(m, n, a, b, c).solve(max_iterations);
}

}  // namespace potcap
