#pragma once

// Kernel-independent fast multipole summation on a uniform box hierarchy with
// tensor-product Chebyshev interpolation (black-box FMM). The Riesz and log
// kernels are homogeneous, so one set of translation operators in unit box
// coordinates serves every level; the cube's reflection/permutation symmetry
// reduces the distinct interaction operators to a handful, each stored in
// randomized low-rank form.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <numeric>
#include <vector>

#include "kernel.hpp"
#include "parallel.hpp"
#include "point_cloud.hpp"
#include "sampling.hpp"

namespace potcap::fmm {

struct Options {
    int order = 0;              // interpolation nodes per axis; 0 = choose from tolerance
    double tolerance = 1e-9;    // target relative error
    std::size_t leaf_size = 128; // mean sources per leaf box
    std::size_t workers = 1;
    std::size_t check_points = 48; // targets re-evaluated directly to verify the result (0 = skip)
    std::uint64_t seed = 0x5eed;
};

struct Result {
    std::vector<double> values;
    /// Per-target estimate: interpolation error times the far-field magnitude.
    std::vector<double> error_bound;
    int order = 0;
    int levels = 0;
    double interpolation_error = 0.0;
    /// Largest relative deviation from direct summation on the check subset.
    double checked_error = 0.0;
    int attempts = 0;
};

namespace detail {

using Mat = Eigen::MatrixXd;

inline std::size_t ipow(std::size_t b, std::size_t e) {
    std::size_t r = 1;
    while (e--) r *= b;
    return r;
}

struct Cheb {
    int p;
    std::vector<double> x;  // nodes cos((2i+1)pi/2p)
    std::vector<double> tn; // tn[i*p + l] = T_l(x_i)

    explicit Cheb(int order) : p(order), x(order), tn(order * order) {
        for (int i = 0; i < p; ++i) {
            x[i] = std::cos((2.0 * i + 1.0) * std::numbers::pi / (2.0 * p));
            for (int l = 0; l < p; ++l) tn[i * p + l] = std::cos(l * std::acos(x[i]));
        }
    }

    /// s[i] = S_p(x_i, y) = 1/p + 2/p sum_{l>=1} T_l(x_i) T_l(y).
    void weights(double y, double* s) const {
        y = std::clamp(y, -1.0, 1.0);
        double t[64];
        t[0] = 1.0;
        if (p > 1) t[1] = y;
        for (int l = 2; l < p; ++l) t[l] = 2.0 * y * t[l - 1] - t[l - 2];
        for (int i = 0; i < p; ++i) {
            double a = 0.0;
            for (int l = 1; l < p; ++l) a += tn[i * p + l] * t[l];
            s[i] = (1.0 + 2.0 * a) / p;
        }
    }
};

/// Apply the p x p matrix a (row-major, a[i*p+j]) along axis k of a p^D tensor.
/// transpose: out[.. i ..] += sum_j a[j][i] in[.. j ..].
inline void apply_axis(const double* a, bool transpose, std::size_t p, std::size_t dim, std::size_t k,
                       const std::vector<double>& in, std::vector<double>& out) {
    const std::size_t stride = ipow(p, k);
    const std::size_t outer = ipow(p, dim - k - 1);
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t s = 0; s < stride; ++s) {
            const std::size_t base = o * stride * p + s;
            for (std::size_t i = 0; i < p; ++i) {
                double acc = 0.0;
                for (std::size_t j = 0; j < p; ++j)
                    acc += (transpose ? a[j * p + i] : a[i * p + j]) * in[base + j * stride];
                out[base + i * stride] = acc;
            }
        }
}

/// Unit-coordinate kernel kappa with K(h u) = scale(h) kappa(u) + shift(h).
struct UnitKernel {
    KernelSpec k;
    double kappa(double r2) const { return k.is_log() ? -0.5 * std::log(r2) : std::pow(r2, -0.5 * k.exponent()); }
    double scale(double h) const { return k.is_log() ? 1.0 : std::pow(h, -k.exponent()); }
    double shift(double h) const { return k.is_log() ? std::log(k.diameter / h) : 0.0; }
};

/// Low-rank (or dense) factor of one canonical interaction operator.
struct Operator {
    bool dense = false;
    Mat full; // N x N when dense
    Mat q;    // N x r
    Mat b;    // r x N

    void apply(const Mat& x, Mat& y) const {
        if (dense)
            y.noalias() = full * x;
        else {
            Mat z = b * x;
            y.noalias() = q * z;
        }
    }
};

inline Operator compress(const Mat& k, double tol, Rng& rng) {
    const Eigen::Index n = k.rows();
    Mat probe(n, 8);
    for (Eigen::Index i = 0; i < probe.size(); ++i) probe.data()[i] = rng.normal();
    const Mat kp = k * probe;
    const double ref = kp.norm();
    for (Eigen::Index r = 48; 2 * r < n; r *= 2) {
        Mat omega(n, r);
        for (Eigen::Index i = 0; i < omega.size(); ++i) omega.data()[i] = rng.normal();
        Eigen::HouseholderQR<Mat> qr(k * omega);
        Operator op;
        op.q = qr.householderQ() * Mat::Identity(n, r);
        op.b = op.q.transpose() * k;
        const double err = (kp - op.q * (op.b * probe)).norm();
        if (err <= tol * ref) return op;
    }
    Operator op;
    op.dense = true;
    op.full = k;
    return op;
}

}  // namespace detail

/// Fast summation of sum_j w_j K(|x_i - y_j|) for targets x_i; K must be the
/// Riesz or log kernel of `kernel`. Coincident source/target pairs give +inf.
class Evaluator {
public:
    Evaluator(const PointCloud& sources, const std::vector<double>& weights, const KernelSpec& kernel, Options opt)
        : src_(sources), w_(weights), ker_{kernel}, opt_(opt), dim_(sources.dim()) {
        require(dim_ >= 2 && dim_ <= 3, "fmm: supported for n = 2, 3");
        require(weights.size() == sources.size(), "fmm: weight count mismatch");
    }

    Result evaluate(const PointCloud& targets) const {
        require(targets.dim() == dim_, "fmm: target dimension mismatch");
        int p = opt_.order > 0 ? opt_.order : initial_order();
        Result res;
        for (int attempt = 1;; ++attempt) {
            res = run(targets, p);
            res.attempts = attempt;
            if (opt_.order > 0 || opt_.check_points == 0 || res.checked_error <= opt_.tolerance || p >= kMaxOrder)
                return res;
            p = std::min(kMaxOrder, p + 2);
        }
    }

    /// Sampled max |interpolated - exact| / max |exact| for the nearest
    /// admissible box pair at order p, in unit coordinates.
    double interpolation_error(int p) const {
        const detail::Cheb ch(p);
        const std::size_t dim = dim_, nn = detail::ipow(p, dim);
        Rng rng(opt_.seed ^ 0x9e3779b97f4a7c15ULL);
        const int m = 40;
        std::vector<double> ux(m * dim), uy(m * dim);
        for (auto& v : ux) v = rng.uniform(-1.0, 1.0);
        for (auto& v : uy) v = rng.uniform(-1.0, 1.0);
        std::vector<double> nodes = node_coords(ch);
        std::vector<double> off(dim, 0.0);
        off[0] = 4.0;
        auto sx = tensor_weights(ch, ux, m), sy = tensor_weights(ch, uy, m);
        detail::Mat kn(nn, nn);
        for (std::size_t a = 0; a < nn; ++a)
            for (std::size_t b = 0; b < nn; ++b) {
                double r2 = 0.0;
                for (std::size_t k = 0; k < dim; ++k) {
                    const double d = nodes[a * dim + k] - nodes[b * dim + k] - off[k];
                    r2 += d * d;
                }
                kn(a, b) = ker_.kappa(r2);
            }
        const detail::Mat approx = sx.transpose() * kn * sy;
        double worst = 0.0, kmax = 0.0;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                double r2 = 0.0;
                for (std::size_t k = 0; k < dim; ++k) {
                    const double d = ux[i * dim + k] - uy[j * dim + k] - off[k];
                    r2 += d * d;
                }
                const double e = ker_.kappa(r2);
                kmax = std::max(kmax, std::abs(e));
                worst = std::max(worst, std::abs(approx(i, j) - e));
            }
        return worst / kmax;
    }

private:
    static constexpr int kMaxOrder = 16;

    int initial_order() const {
        for (int p = 6; p < kMaxOrder; p += 2)
            if (interpolation_error(p) <= 1e3 * opt_.tolerance) return p;
        return kMaxOrder;
    }

    std::vector<double> node_coords(const detail::Cheb& ch) const {
        const std::size_t nn = detail::ipow(ch.p, dim_);
        std::vector<double> c(nn * dim_);
        for (std::size_t m = 0; m < nn; ++m) {
            std::size_t r = m;
            for (std::size_t k = 0; k < dim_; ++k) {
                c[m * dim_ + k] = ch.x[r % ch.p];
                r /= ch.p;
            }
        }
        return c;
    }

    /// Column j = tensor interpolation weights of unit point j.
    detail::Mat tensor_weights(const detail::Cheb& ch, const std::vector<double>& u, int m) const {
        const std::size_t nn = detail::ipow(ch.p, dim_);
        detail::Mat s(nn, m);
        std::vector<double> buf;
        for (int j = 0; j < m; ++j) {
            outer_weights(ch, &u[j * dim_], 1.0, buf);
            for (std::size_t a = 0; a < nn; ++a) s(a, j) = buf[a];
        }
        return s;
    }

    /// buf[m] = w * prod_k S(x_{m_k}, u_k), m = sum_k m_k p^k.
    void outer_weights(const detail::Cheb& ch, const double* u, double w, std::vector<double>& buf) const {
        const std::size_t p = ch.p;
        double s[3][64];
        for (std::size_t k = 0; k < dim_; ++k) ch.weights(u[k], s[k]);
        buf.assign(detail::ipow(p, dim_), 0.0);
        if (dim_ == 2) {
            for (std::size_t b = 0; b < p; ++b)
                for (std::size_t a = 0; a < p; ++a) buf[b * p + a] = w * s[1][b] * s[0][a];
        } else {
            for (std::size_t c = 0; c < p; ++c)
                for (std::size_t b = 0; b < p; ++b) {
                    const double f = w * s[2][c] * s[1][b];
                    for (std::size_t a = 0; a < p; ++a) buf[(c * p + b) * p + a] = f * s[0][a];
                }
        }
    }

    double contract(const detail::Cheb& ch, const double* u, const double* f) const {
        const std::size_t p = ch.p;
        double s[3][64];
        for (std::size_t k = 0; k < dim_; ++k) ch.weights(u[k], s[k]);
        double acc = 0.0;
        if (dim_ == 2) {
            for (std::size_t b = 0; b < p; ++b) {
                double r = 0.0;
                for (std::size_t a = 0; a < p; ++a) r += f[b * p + a] * s[0][a];
                acc += r * s[1][b];
            }
        } else {
            for (std::size_t c = 0; c < p; ++c)
                for (std::size_t b = 0; b < p; ++b) {
                    double r = 0.0;
                    const double* row = f + (c * p + b) * p;
                    for (std::size_t a = 0; a < p; ++a) r += row[a] * s[0][a];
                    acc += r * s[1][b] * s[2][c];
                }
        }
        return acc;
    }

    double direct(std::span<const double> x, std::size_t lo, std::size_t hi, const std::vector<std::size_t>& order,
                  const PointCloud& pts) const {
        double v = 0.0;
        for (std::size_t j = lo; j < hi; ++j) {
            const std::size_t s = order[j];
            v += w_[s] * ker_.k.from_r2(dist2(x, pts[s]));
        }
        return v;
    }

    struct Level {
        std::size_t side = 1;
        std::vector<int> slot; // dense cell index -> compact box id or -1
        std::vector<std::size_t> cells;
        std::vector<double> mult, local; // per box, nn values
        std::vector<double> mass;        // per box source mass
    };

    Result run(const PointCloud& tgt, int p) const {
        const std::size_t dim = dim_, ns = src_.size(), nt = tgt.size();
        const detail::Cheb ch(p);
        const std::size_t nn = detail::ipow(p, dim);
        Result res;
        res.order = p;
        res.values.assign(nt, 0.0);
        res.error_bound.assign(nt, 0.0);
        res.interpolation_error = interpolation_error(p);

        // Root cube.
        std::vector<double> lo(dim, std::numeric_limits<double>::infinity()), hi(dim, -lo[0]);
        auto grow = [&](const PointCloud& c) {
            for (std::size_t i = 0; i < c.size(); ++i)
                for (std::size_t k = 0; k < dim; ++k) {
                    lo[k] = std::min(lo[k], c[i][k]);
                    hi[k] = std::max(hi[k], c[i][k]);
                }
        };
        grow(src_);
        grow(tgt);
        double width = 0.0;
        for (std::size_t k = 0; k < dim; ++k) width = std::max(width, hi[k] - lo[k]);
        width = width > 0.0 ? width * (1.0 + 1e-9) : 1.0;

        int levels = 0;
        const std::size_t fan = detail::ipow(2, dim);
        while (levels < 8 && static_cast<double>(ns) / static_cast<double>(detail::ipow(fan, levels)) >
                                 static_cast<double>(opt_.leaf_size))
            ++levels;
        res.levels = levels;

        const std::size_t leaf_side = std::size_t{1} << levels;
        auto cell_of = [&](std::span<const double> x) {
            std::size_t c = 0;
            for (std::size_t k = dim; k-- > 0;) {
                auto q = static_cast<std::size_t>((x[k] - lo[k]) / width * static_cast<double>(leaf_side));
                c = c * leaf_side + std::min(q, leaf_side - 1);
            }
            return c;
        };
        const std::size_t ncell = detail::ipow(leaf_side, dim);
        auto bucket = [&](const PointCloud& c, std::vector<std::size_t>& start, std::vector<std::size_t>& order) {
            std::vector<std::size_t> cell(c.size());
            start.assign(ncell + 1, 0);
            for (std::size_t i = 0; i < c.size(); ++i) ++start[(cell[i] = cell_of(c[i])) + 1];
            for (std::size_t i = 0; i < ncell; ++i) start[i + 1] += start[i];
            order.resize(c.size());
            std::vector<std::size_t> pos(start.begin(), start.end() - 1);
            for (std::size_t i = 0; i < c.size(); ++i) order[pos[cell[i]]++] = i;
        };
        std::vector<std::size_t> s_start, s_order, t_start, t_order;
        bucket(src_, s_start, s_order);
        bucket(tgt, t_start, t_order);

        auto coords_of = [&](std::size_t cell, std::size_t side, std::size_t* ix) {
            for (std::size_t k = 0; k < dim; ++k) {
                ix[k] = cell % side;
                cell /= side;
            }
        };
        auto cell_index = [&](const long* ix, std::size_t side) -> long {
            long c = 0;
            for (std::size_t k = dim; k-- > 0;) {
                if (ix[k] < 0 || ix[k] >= static_cast<long>(side)) return -1;
                c = c * static_cast<long>(side) + ix[k];
            }
            return c;
        };

        // Near field on the leaf level.
        {
            const auto& s_ord = s_order;
            parallel_for(ncell, opt_.workers, [&](std::size_t cell) {
                if (t_start[cell] == t_start[cell + 1]) return;
                std::size_t ix[3];
                coords_of(cell, leaf_side, ix);
                const std::size_t nnb = detail::ipow(3, dim);
                for (std::size_t nb = 0; nb < nnb; ++nb) {
                    long jx[3];
                    std::size_t r = nb;
                    for (std::size_t k = 0; k < dim; ++k) {
                        jx[k] = static_cast<long>(ix[k]) + static_cast<long>(r % 3) - 1;
                        r /= 3;
                    }
                    const long c2 = cell_index(jx, leaf_side);
                    if (c2 < 0 || s_start[c2] == s_start[c2 + 1]) continue;
                    for (std::size_t t = t_start[cell]; t < t_start[cell + 1]; ++t) {
                        const std::size_t i = t_order[t];
                        res.values[i] += direct(tgt[i], s_start[c2], s_start[c2 + 1], s_ord, src_);
                    }
                }
            });
        }
        if (levels < 2) {
            finish_check(res, tgt);
            return res;
        }

        // Box hierarchy: a box exists at a level if any source or target lies in it.
        std::vector<Level> lv(levels + 1);
        for (int l = 0; l <= levels; ++l) {
            lv[l].side = std::size_t{1} << l;
            lv[l].slot.assign(detail::ipow(lv[l].side, dim), -1);
        }
        auto parent_cell = [&](std::size_t cell, std::size_t side) {
            std::size_t ix[3];
            coords_of(cell, side, ix);
            std::size_t c = 0;
            for (std::size_t k = dim; k-- > 0;) c = c * (side / 2) + ix[k] / 2;
            return c;
        };
        for (std::size_t cell = 0; cell < ncell; ++cell) {
            if (s_start[cell] == s_start[cell + 1] && t_start[cell] == t_start[cell + 1]) continue;
            std::size_t c = cell;
            for (int l = levels; l >= 0; --l) {
                if (lv[l].slot[c] >= 0) break;
                lv[l].slot[c] = static_cast<int>(lv[l].cells.size());
                lv[l].cells.push_back(c);
                if (l > 0) c = parent_cell(c, lv[l].side);
            }
        }
        for (auto& L : lv) {
            L.mult.assign(L.cells.size() * nn, 0.0);
            L.local.assign(L.cells.size() * nn, 0.0);
            L.mass.assign(L.cells.size(), 0.0);
        }
        auto box_center = [&](std::size_t cell, int l, double* c) {
            std::size_t ix[3];
            const double h = width / static_cast<double>(lv[l].side);
            coords_of(cell, lv[l].side, ix);
            for (std::size_t k = 0; k < dim; ++k) c[k] = lo[k] + (static_cast<double>(ix[k]) + 0.5) * h;
        };

        // P2M.
        {
            auto& L = lv[levels];
            const double half = 0.5 * width / static_cast<double>(leaf_side);
            parallel_for(L.cells.size(), opt_.workers, [&](std::size_t b) {
                const std::size_t cell = L.cells[b];
                double c[3], u[3];
                box_center(cell, levels, c);
                std::vector<double> buf;
                double* m = &L.mult[b * nn];
                for (std::size_t j = s_start[cell]; j < s_start[cell + 1]; ++j) {
                    const std::size_t s = s_order[j];
                    for (std::size_t k = 0; k < dim; ++k) u[k] = (src_[s][k] - c[k]) / half;
                    outer_weights(ch, u, w_[s], buf);
                    for (std::size_t a = 0; a < nn; ++a) m[a] += buf[a];
                    L.mass[b] += w_[s];
                }
            });
        }

        // Child-to-parent 1D transfer matrices T^sigma[i*p+j] = S(x_i, (x_j + 2 sigma - 1) / 2).
        std::array<std::vector<double>, 2> tr;
        for (int sg = 0; sg < 2; ++sg) {
            tr[sg].resize(p * p);
            std::vector<double> s(p);
            for (int j = 0; j < p; ++j) {
                ch.weights((ch.x[j] + 2.0 * sg - 1.0) / 2.0, s.data());
                for (int i = 0; i < p; ++i) tr[sg][i * p + j] = s[i];
            }
        }
        auto child_sigma = [&](std::size_t cell, std::size_t side, int* sg) {
            std::size_t ix[3];
            coords_of(cell, side, ix);
            for (std::size_t k = 0; k < dim; ++k) sg[k] = static_cast<int>(ix[k] & 1);
        };

        // M2M.
        for (int l = levels; l > 2; --l) {
            auto& C = lv[l];
            auto& P = lv[l - 1];
            std::vector<double> t1(nn), t2(nn);
            for (std::size_t b = 0; b < C.cells.size(); ++b) {
                if (C.mass[b] == 0.0 && std::all_of(&C.mult[b * nn], &C.mult[b * nn] + nn, [](double v) { return v == 0.0; }))
                    continue;
                int sg[3];
                child_sigma(C.cells[b], C.side, sg);
                t1.assign(&C.mult[b * nn], &C.mult[b * nn] + nn);
                for (std::size_t k = 0; k < dim; ++k) {
                    detail::apply_axis(tr[sg[k]].data(), false, p, dim, k, t1, t2);
                    std::swap(t1, t2);
                }
                const int pb = P.slot[parent_cell(C.cells[b], C.side)];
                for (std::size_t a = 0; a < nn; ++a) P.mult[pb * nn + a] += t1[a];
                P.mass[pb] += C.mass[b];
            }
        }

        // M2L, batched per canonical offset.
        const auto nodes = node_coords(ch);
        std::map<std::vector<int>, detail::Operator> ops;
        std::map<std::vector<int>, std::vector<std::uint32_t>> perms;
        Rng rng(opt_.seed);
        auto canonical = [&](const std::vector<int>& t, std::vector<int>& c, std::vector<std::uint32_t>& perm) {
            std::vector<int> a(dim);
            std::vector<std::size_t> ax(dim);
            for (std::size_t k = 0; k < dim; ++k) a[k] = std::abs(t[k]);
            std::iota(ax.begin(), ax.end(), 0);
            std::stable_sort(ax.begin(), ax.end(), [&](std::size_t x, std::size_t y) { return a[x] < a[y]; });
            c.resize(dim);
            for (std::size_t j = 0; j < dim; ++j) c[j] = a[ax[j]];
            perm.resize(nn);
            std::size_t mk[3];
            for (std::size_t m = 0; m < nn; ++m) {
                std::size_t r = m;
                for (std::size_t k = 0; k < dim; ++k) {
                    mk[k] = r % p;
                    r /= p;
                    if (t[k] < 0) mk[k] = p - 1 - mk[k];
                }
                std::size_t g = 0;
                for (std::size_t j = dim; j-- > 0;) g = g * p + mk[ax[j]];
                perm[m] = static_cast<std::uint32_t>(g);
            }
        };
        auto op_for = [&](const std::vector<int>& c) -> const detail::Operator& {
            auto it = ops.find(c);
            if (it != ops.end()) return it->second;
            detail::Mat k(nn, nn);
            for (std::size_t a = 0; a < nn; ++a)
                for (std::size_t b = 0; b < nn; ++b) {
                    double r2 = 0.0;
                    for (std::size_t q = 0; q < dim; ++q) {
                        const double d = nodes[a * dim + q] - nodes[b * dim + q] - 2.0 * c[q];
                        r2 += d * d;
                    }
                    k(a, b) = ker_.kappa(r2);
                }
            return ops.emplace(c, detail::compress(k, 0.1 * opt_.tolerance, rng)).first->second;
        };

        for (int l = 2; l <= levels; ++l) {
            auto& L = lv[l];
            const double h = 0.5 * width / static_cast<double>(L.side);
            const double sc = ker_.scale(h), sh = ker_.shift(h);
            // (target box, source box, offset key)
            std::map<std::vector<int>, std::vector<std::pair<int, int>>> by_offset;
            const long span = static_cast<long>(detail::ipow(6, dim));
            for (std::size_t b = 0; b < L.cells.size(); ++b) {
                std::size_t ix[3];
                coords_of(L.cells[b], L.side, ix);
                for (long o = 0; o < span; ++o) {
                    long jx[3];
                    std::vector<int> t(dim);
                    long r = o, cheb = 0;
                    for (std::size_t k = 0; k < dim; ++k) {
                        const long base = static_cast<long>(ix[k] / 2) * 2 - 2;
                        jx[k] = base + r % 6;
                        r /= 6;
                        t[k] = static_cast<int>(jx[k] - static_cast<long>(ix[k]));
                        cheb = std::max(cheb, std::labs(t[k]));
                    }
                    if (cheb < 2) continue;
                    const long c2 = cell_index(jx, L.side);
                    if (c2 < 0 || L.slot[c2] < 0) continue;
                    const int sb = L.slot[c2];
                    if (L.mass[sb] == 0.0) continue;
                    by_offset[t].push_back({static_cast<int>(b), sb});
                }
            }
            // Regroup by canonical operator.
            struct Job {
                int tb, sb;
                const std::vector<std::uint32_t>* perm;
            };
            std::map<std::vector<int>, std::vector<Job>> by_canon;
            for (auto& [t, pairs] : by_offset) {
                auto pit = perms.find(t);
                std::vector<int> c;
                if (pit == perms.end()) {
                    std::vector<std::uint32_t> perm;
                    canonical(t, c, perm);
                    pit = perms.emplace(t, std::move(perm)).first;
                } else {
                    std::vector<std::uint32_t> dummy;
                    canonical(t, c, dummy);
                }
                for (auto& pr : pairs) by_canon[c].push_back({pr.first, pr.second, &pit->second});
            }
            for (auto& [c, jobs] : by_canon) {
                const detail::Operator& op = op_for(c);
                const std::size_t chunk = 256;
                detail::Mat x, y;
                for (std::size_t j0 = 0; j0 < jobs.size(); j0 += chunk) {
                    const std::size_t m = std::min(chunk, jobs.size() - j0);
                    x.resize(nn, m);
                    for (std::size_t j = 0; j < m; ++j) {
                        const auto& jb = jobs[j0 + j];
                        const double* src = &L.mult[jb.sb * nn];
                        const auto& pm = *jb.perm;
                        for (std::size_t a = 0; a < nn; ++a) x(pm[a], j) = src[a];
                    }
                    op.apply(x, y);
                    for (std::size_t j = 0; j < m; ++j) {
                        const auto& jb = jobs[j0 + j];
                        double* dst = &L.local[jb.tb * nn];
                        const auto& pm = *jb.perm;
                        const double add = sh * L.mass[jb.sb];
                        for (std::size_t a = 0; a < nn; ++a) dst[a] += sc * y(pm[a], j) + add;
                    }
                }
            }
        }

        // L2L.
        for (int l = 3; l <= levels; ++l) {
            auto& C = lv[l];
            auto& P = lv[l - 1];
            std::vector<double> t1(nn), t2(nn);
            for (std::size_t b = 0; b < C.cells.size(); ++b) {
                int sg[3];
                child_sigma(C.cells[b], C.side, sg);
                const int pb = P.slot[parent_cell(C.cells[b], C.side)];
                t1.assign(&P.local[pb * nn], &P.local[pb * nn] + nn);
                for (std::size_t k = 0; k < dim; ++k) {
                    detail::apply_axis(tr[sg[k]].data(), true, p, dim, k, t1, t2);
                    std::swap(t1, t2);
                }
                for (std::size_t a = 0; a < nn; ++a) C.local[b * nn + a] += t1[a];
            }
        }

        // L2P.
        {
            auto& L = lv[levels];
            const double half = 0.5 * width / static_cast<double>(leaf_side);
            parallel_for(L.cells.size(), opt_.workers, [&](std::size_t b) {
                const std::size_t cell = L.cells[b];
                double c[3], u[3];
                box_center(cell, levels, c);
                for (std::size_t t = t_start[cell]; t < t_start[cell + 1]; ++t) {
                    const std::size_t i = t_order[t];
                    for (std::size_t k = 0; k < dim; ++k) u[k] = (tgt[i][k] - c[k]) / half;
                    const double far = contract(ch, u, &L.local[b * nn]);
                    res.values[i] += far;
                    res.error_bound[i] = res.interpolation_error * std::abs(far);
                }
            });
        }
        finish_check(res, tgt);
        return res;
    }

    void finish_check(Result& res, const PointCloud& tgt) const {
        const std::size_t nt = tgt.size();
        const std::size_t m = std::min(opt_.check_points, nt);
        if (m == 0) return;
        std::vector<std::size_t> all(src_.size());
        std::iota(all.begin(), all.end(), 0);
        double worst = 0.0;
        for (std::size_t q = 0; q < m; ++q) {
            const std::size_t i = (q * nt) / m;
            const double exact = direct(tgt[i], 0, all.size(), all, src_);
            if (!std::isfinite(exact) || exact == 0.0) continue;
            worst = std::max(worst, std::abs(res.values[i] - exact) / std::abs(exact));
        }
        res.checked_error = worst;
    }

    const PointCloud& src_;
    const std::vector<double>& w_;
    detail::UnitKernel ker_;
    Options opt_;
    std::size_t dim_;
};

}  // namespace potcap::fmm
