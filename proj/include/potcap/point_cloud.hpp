#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "errors.hpp"

namespace potcap {

using Point = std::vector<double>;

/// Flat, dimension-tagged storage for many points of the same dimension.
class PointCloud {
public:
    PointCloud() = default;
    explicit PointCloud(std::size_t dim) : dim_(dim) {}
    PointCloud(std::size_t dim, std::vector<double> coords) : dim_(dim), data_(std::move(coords)) {
        require(dim_ > 0 && data_.size() % dim_ == 0, "PointCloud: coordinate count not a multiple of dim");
    }
    PointCloud(std::size_t dim, std::initializer_list<Point> pts) : dim_(dim) {
        for (const auto& p : pts) push_back(p);
    }

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return dim_ ? data_.size() / dim_ : 0; }
    bool empty() const noexcept { return data_.empty(); }

    std::span<const double> operator[](std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
    std::span<double> operator[](std::size_t i) { return {data_.data() + i * dim_, dim_}; }

    void push_back(std::span<const double> p) {
        require(p.size() == dim_, "PointCloud: dimension mismatch");
        data_.insert(data_.end(), p.begin(), p.end());
    }
    void push_back(const Point& p) { push_back(std::span<const double>(p)); }
    void reserve(std::size_t n) { data_.reserve(n * dim_); }

    const std::vector<double>& coords() const noexcept { return data_; }
    std::vector<double>& coords() noexcept { return data_; }

    Point point(std::size_t i) const {
        auto s = (*this)[i];
        return {s.begin(), s.end()};
    }

private:
    std::size_t dim_ = 0;
    std::vector<double> data_;
};

inline double dist2(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        s += d * d;
    }
    return s;
}

inline double dist(std::span<const double> a, std::span<const double> b) { return std::sqrt(dist2(a, b)); }

inline double norm(std::span<const double> a) {
    double s = 0.0;
    for (double v : a) s += v * v;
    return std::sqrt(s);
}

inline Point scaled(std::span<const double> a, double s) {
    Point r(a.begin(), a.end());
    for (auto& v : r) v *= s;
    return r;
}

inline Point add(std::span<const double> a, std::span<const double> b) {
    Point r(a.begin(), a.end());
    for (std::size_t k = 0; k < r.size(); ++k) r[k] += b[k];
    return r;
}

inline Point sub(std::span<const double> a, std::span<const double> b) {
    Point r(a.begin(), a.end());
    for (std::size_t k = 0; k < r.size(); ++k) r[k] -= b[k];
    return r;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

}  // namespace potcap
