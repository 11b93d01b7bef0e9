#pragma once

// CSV measures and point lists, RegionSet JSON.

#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "geometry.hpp"
#include "measure.hpp"

namespace potcap::io {

using json = nlohmann::json;

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

/// Splits on commas and parses every field; false if any field is not a number.
inline bool parse_row(const std::string& line, std::vector<double>& out) {
    out.clear();
    std::size_t pos = 0;
    while (true) {
        const auto comma = line.find(',', pos);
        const std::string f = trim(line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
        double v = 0.0;
        const char* b = f.data();
        const char* e = f.data() + f.size();
        if (!f.empty() && *b == '+') ++b;
        auto [p, ec] = std::from_chars(b, e, v);
        if (f.empty() || ec != std::errc() || p != e) return false;
        out.push_back(v);
        if (comma == std::string::npos) return true;
        pos = comma + 1;
    }
}

/// Numeric rows of a CSV stream: blank lines and '#' comments skipped, a
/// non-numeric first row is a header. All rows must have the same width.
inline std::vector<std::pair<std::size_t, std::vector<double>>> read_rows(std::istream& in) {
    std::vector<std::pair<std::size_t, std::vector<double>>> rows;
    std::string line;
    std::size_t no = 0, width = 0;
    bool first = true;
    std::vector<double> vals;
    while (std::getline(in, line)) {
        ++no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (!parse_row(t, vals)) {
            if (first) {
                first = false;
                continue;
            }
            throw parse_error("non-numeric field in '" + t + "'", no);
        }
        first = false;
        if (width == 0) width = vals.size();
        if (vals.size() != width)
            throw parse_error("expected " + std::to_string(width) + " fields, got " + std::to_string(vals.size()), no);
        rows.emplace_back(no, vals);
    }
    return rows;
}

inline std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw domain_error("cannot open '" + path + "'");
    return in;
}

inline bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace detail

inline DiscreteMeasure read_measure_csv(std::istream& in) {
    const auto rows = detail::read_rows(in);
    if (rows.empty()) throw parse_error("measure file has no atoms", 0);
    const std::size_t w = rows.front().second.size();
    if (w < 2) throw parse_error("need x_1,...,x_n,weight", rows.front().first);
    DiscreteMeasure mu(w - 1);
    for (const auto& [no, v] : rows) {
        const double wt = v.back();
        if (!std::isfinite(wt) || wt < 0.0) throw parse_error("weight must be finite and >= 0", no);
        for (std::size_t k = 0; k + 1 < w; ++k)
            if (!std::isfinite(v[k])) throw parse_error("non-finite coordinate", no);
        mu.add(std::span<const double>(v.data(), w - 1), wt);
    }
    return mu;
}

inline PointCloud read_points_csv(std::istream& in) {
    const auto rows = detail::read_rows(in);
    if (rows.empty()) throw parse_error("point file has no points", 0);
    PointCloud pts(rows.front().second.size());
    for (const auto& [no, v] : rows) {
        for (double x : v)
            if (!std::isfinite(x)) throw parse_error("non-finite coordinate", no);
        pts.push_back(v);
    }
    return pts;
}

inline json to_json(const PointCloud& c) {
    json a = json::array();
    for (std::size_t i = 0; i < c.size(); ++i) a.push_back(c.point(i));
    return a;
}

inline Point point_from_json(const json& j, const char* what) {
    if (!j.is_array() || j.empty()) throw domain_error(std::string(what) + ": expected a nonempty array of numbers");
    Point p;
    for (const auto& v : j) {
        if (!v.is_number()) throw domain_error(std::string(what) + ": expected numbers");
        p.push_back(v.get<double>());
    }
    return p;
}

inline json to_json(const DiscreteMeasure& mu) {
    return {{"atoms", to_json(mu.atoms())}, {"weights", mu.weights()}};
}

inline DiscreteMeasure measure_from_json(const json& j) {
    if (!j.is_object() || !j.contains("atoms") || !j.contains("weights"))
        throw domain_error("measure JSON: need \"atoms\" and \"weights\"");
    const auto& a = j.at("atoms");
    const auto& w = j.at("weights");
    if (!a.is_array() || !w.is_array() || a.size() != w.size() || a.empty())
        throw domain_error("measure JSON: atoms and weights must be arrays of equal nonzero length");
    DiscreteMeasure mu(point_from_json(a[0], "atoms").size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!w[i].is_number()) throw domain_error("measure JSON: weight " + std::to_string(i) + " is not a number");
        const Point p = point_from_json(a[i], "atoms");
        if (p.size() != mu.dim()) throw domain_error("measure JSON: atom " + std::to_string(i) + " has the wrong dimension");
        mu.add(p, w[i].get<double>());
    }
    return mu;
}

inline json to_json(const Primitive& prim) {
    return std::visit(potcap::detail::overloaded{
                          [](const Ball& b) -> json { return {{"kind", "ball"}, {"center", b.center}, {"radius", b.radius}}; },
                          [](const Box& b) -> json { return {{"kind", "box"}, {"min", b.min}, {"max", b.max}}; },
                          [](const PointSet& p) -> json {
                              return {{"kind", "points"}, {"coords", to_json(p.coords)}, {"radius", p.radius}};
                          }},
                      prim);
}

inline json to_json(const RegionSet& e) {
    json prims = json::array();
    for (const auto& p : e.primitives()) prims.push_back(to_json(p));
    return {{"dim", e.dim()}, {"primitives", prims}};
}

inline RegionSet region_from_json(const json& j) {
    if (!j.is_object() || !j.contains("primitives") || !j.at("primitives").is_array())
        throw domain_error("region JSON: need a \"primitives\" array");
    std::vector<Primitive> prims;
    std::size_t idx = 0;
    for (const auto& q : j.at("primitives")) {
        const std::string where = "region JSON: primitive " + std::to_string(idx++);
        if (!q.is_object() || !q.contains("kind")) throw domain_error(where + ": missing \"kind\"");
        const std::string kind = q.at("kind").get<std::string>();
        auto number = [&](const char* key) {
            if (!q.contains(key) || !q.at(key).is_number()) throw domain_error(where + ": \"" + key + "\" must be a number");
            return q.at(key).get<double>();
        };
        auto field = [&](const char* key) -> const json& {
            if (!q.contains(key)) throw domain_error(where + ": missing \"" + key + "\"");
            return q.at(key);
        };
        if (kind == "ball") {
            prims.push_back(Ball{point_from_json(field("center"), "center"), number("radius")});
        } else if (kind == "box") {
            prims.push_back(Box{point_from_json(field("min"), "min"), point_from_json(field("max"), "max")});
        } else if (kind == "points") {
            const auto& c = field("coords");
            if (!c.is_array() || c.empty()) throw domain_error(where + ": \"coords\" must be a nonempty array");
            PointCloud pc(point_from_json(c[0], "coords").size());
            for (const auto& x : c) {
                const Point p = point_from_json(x, "coords");
                if (p.size() != pc.dim()) throw domain_error(where + ": mixed point dimensions");
                pc.push_back(p);
            }
            prims.push_back(PointSet{std::move(pc), q.contains("radius") ? number("radius") : 0.0});
        } else {
            throw domain_error(where + ": unknown kind '" + kind + "'");
        }
    }
    if (prims.empty()) throw domain_error("region JSON: no primitives");
    const std::size_t n = j.contains("dim") ? j.at("dim").get<std::size_t>() : primitive_dim(prims.front());
    RegionSet e(n);
    for (auto& p : prims) e.add(std::move(p));
    return e;
}

inline json read_json_file(const std::string& path) {
    auto in = detail::open_in(path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw domain_error("'" + path + "': " + e.what());
    }
}

inline DiscreteMeasure load_measure(const std::string& path) {
    if (detail::ends_with(path, ".json")) return measure_from_json(read_json_file(path));
    auto in = detail::open_in(path);
    try {
        return read_measure_csv(in);
    } catch (const parse_error& e) {
        throw parse_error(path + ": " + e.what(), 0);
    }
}

inline PointCloud load_points(const std::string& path) {
    auto in = detail::open_in(path);
    try {
        return read_points_csv(in);
    } catch (const parse_error& e) {
        throw parse_error(path + ": " + e.what(), 0);
    }
}

inline RegionSet load_region(const std::string& path) { return region_from_json(read_json_file(path)); }

inline void write_measure_csv(std::ostream& out, const DiscreteMeasure& mu) {
    out << std::setprecision(17);
    for (std::size_t k = 0; k < mu.dim(); ++k) out << 'x' << k + 1 << ',';
    out << "weight\n";
    for (std::size_t i = 0; i < mu.size(); ++i) {
        for (double x : mu.atoms()[i]) out << x << ',';
        out << mu.weights()[i] << '\n';
    }
}

inline void write_points_csv(std::ostream& out, const PointCloud& pts) {
    out << std::setprecision(17);
    for (std::size_t k = 0; k < pts.dim(); ++k) out << (k ? "," : "") << 'x' << k + 1;
    out << '\n';
    for (std::size_t i = 0; i < pts.size(); ++i) {
        for (std::size_t k = 0; k < pts.dim(); ++k) out << (k ? "," : "") << pts[i][k];
        out << '\n';
    }
}

}  // namespace potcap::io
