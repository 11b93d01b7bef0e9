// End-to-end acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sys/wait.h>
#include <sstream>
#include <string>

#include <json.hpp>

#include <potcap/potcap.hpp>

using namespace potcap;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
constexpr double kIdentityTol = 1e-12;
constexpr double kIdentitySeconds = 1.0;
constexpr std::size_t kTreeSize = 50000;
constexpr double kTreeTol = 1e-8;
constexpr double kTreeSpeedup = 5.0;
constexpr double kTreeSeconds = 300.0;
constexpr double kCapacityTol = 0.05;
constexpr double kCapacitySeconds = 120.0;
constexpr double kSeriesTol = 0.10;
constexpr double kMultiscaleFactor = 2.0;
constexpr double kBudgetTol = 1e-12;
constexpr double kLogLimitTol = 0.05;
constexpr double kNoAtomLimit = 0.02;
constexpr double kSmallestRadius = 1e-4;
constexpr double kLengthTol = 1e-6;
constexpr double kConformalSeconds = 1.0;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

struct Outcome {
    bool ok = true;
    std::ostringstream note;
    void check(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            note << " [failed: " << what << "]";
        }
    }
};

int failures = 0;
std::set<int> selected;  // empty: all

void criterion(int id, const char* title, const std::function<void(Outcome&)>& body) {
    if (!selected.empty() && !selected.count(id)) return;
    Outcome o;
    const auto t0 = Clock::now();
    try {
        body(o);
    } catch (const std::exception& e) {
        o.ok = false;
        o.note << " [exception: " << e.what() << "]";
    }
    std::printf("criterion %2d %s: %s (%.1f s)%s\n", id, o.ok ? "PASS" : "FAIL", title, seconds_since(t0),
                o.note.str().c_str());
    std::fflush(stdout);
    failures += !o.ok;
}

/// Potential at distance r < rho from the centre of the uniform measure of mass
/// rho on the sphere of radius rho (Newtonian kernel in R^3), by composite Simpson in cos(theta).
double shell_potential(double rho, double r) {
    const int m = 20000;
    auto f = [&](double t) { return 1.0 / std::sqrt(rho * rho + r * r - 2.0 * rho * r * t); };
    double s = f(-1.0) + f(1.0);
    for (int k = 1; k < m; ++k) s += (k % 2 ? 4.0 : 2.0) * f(-1.0 + 2.0 * k / m);
    return 0.5 * rho * s * (2.0 / m) / 3.0;
}

double segment_distance(const Point& p, const Point& u, double len, const Point& c) {
    const double t = std::clamp(dot(sub(c, p), u), 0.0, len);
    return dist(add(p, scaled(u, t)), c);
}

PointCloud random_points(std::size_t n, std::size_t count, std::uint64_t seed) {
    Rng rng(seed);
    PointCloud c(n);
    Point x(n);
    for (std::size_t i = 0; i < count; ++i) {
        for (auto& v : x) v = rng.uniform(-1.0, 1.0);
        c.push_back(x);
    }
    return c;
}

ConformalModel model(EquationKind k, int n, double d) {
    ConformalModel m;
    m.kind = k;
    m.n = n;
    m.d = d;
    return m;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void kernel_identities(Outcome& o) {
    const auto t0 = Clock::now();
    double worst = 0.0;
    const Point y{0.3, -0.2, 0.1};
    DiscreteMeasure atom(3);
    atom.add(y, 0.7);
    const PointCloud pts = random_points(3, 200, 5);
    for (double alpha : {1.5, 2.0, 2.5}) {
        const auto k = KernelSpec::riesz(3, alpha);
        const auto f = eval_potential(atom, k, pts);
        for (std::size_t i = 0; i < pts.size(); ++i)
            worst = std::max(worst, rel(f.values[i], 0.7 * std::pow(dist(pts[i], y), alpha - 3.0)));
    }
    const auto lk = KernelSpec::log(3, 4.0);
    const auto lf = eval_potential(atom, lk, pts);
    for (std::size_t i = 0; i < pts.size(); ++i)
        worst = std::max(worst, rel(lf.values[i], 0.7 * std::log(4.0 / dist(pts[i], y))));

    // linearity: U(a mu + b nu) = a U(mu) + b U(nu)
    const DiscreteMeasure mu = random_ball_measure(Point{0, 0, 0}, 1.0, 300, 1.0, 8);
    const DiscreteMeasure nu = random_ball_measure(Point{0.2, 0, 0}, 0.5, 200, 2.0, 9);
    const auto k = KernelSpec::riesz(3, 2.0);
    const DiscreteMeasure mix = mu.combined(2.0, nu, 0.5);
    const auto um = eval_potential(mu, k, pts), un = eval_potential(nu, k, pts), ux = eval_potential(mix, k, pts);
    for (std::size_t i = 0; i < pts.size(); ++i)
        worst = std::max(worst, rel(ux.values[i], 2.0 * um.values[i] + 0.5 * un.values[i]));

    // scaling: the push-forward under x -> lambda x at lambda x is lambda^{alpha-n} times the original
    for (double lambda : {0.1, 0.5, 3.0}) {
        for (std::size_t i = 0; i < 50; ++i)
            worst = std::max(worst, rel(eval_potential_scaled(mu, k, lambda, pts[i]),
                                        std::pow(lambda, -1.0) * um.values[i]));
    }
    const double t = seconds_since(t0);
    o.note << " max rel " << worst << ", " << t << " s";
    o.check(worst <= kIdentityTol, "identities");
    o.check(t < kIdentitySeconds, "time");
}

void tree_summation(Outcome& o) {
    const auto t0 = Clock::now();
    const DiscreteMeasure mu = random_ball_measure(Point{0, 0, 0}, 1.0, kTreeSize, 1.0, 21);
    const PointCloud pts = random_points(3, kTreeSize, 22);
    const auto k = KernelSpec::riesz(3, 2.0);
    PotentialOptions naive;
    const auto ta = Clock::now();
    const auto a = eval_potential(mu, k, pts, MetricChart::euclidean(), naive);
    const double t_naive = seconds_since(ta);
    PotentialOptions tree;
    tree.method = Summation::tree;
    tree.tolerance = 1e-10;
    const auto tb = Clock::now();
    const auto b = eval_potential(mu, k, pts, MetricChart::euclidean(), tree);
    const double t_tree = seconds_since(tb);
    double worst = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) worst = std::max(worst, rel(b.values[i], a.values[i]));
    o.note << " naive " << t_naive << " s, tree " << t_tree << " s, speedup " << t_naive / t_tree << ", max rel "
           << worst;
    o.check(b.method == "tree", "tree path taken");
    o.check(worst <= kTreeTol, "accuracy");
    o.check(t_naive / t_tree >= kTreeSpeedup, "speedup");
    o.check(seconds_since(t0) < kTreeSeconds, "time");
}

void capacity_calibration(Outcome& o) {
    // oracle: the uniform sphere measure of mass rho has potential exactly 1 inside the ball
    double oracle = 0.0;
    for (double rho : {0.25, 0.5, 1.0})
        for (double f : {0.0, 0.3, 0.9}) oracle = std::max(oracle, std::abs(shell_potential(rho, f * rho) - 1.0));
    o.note << " oracle dev " << oracle;
    o.check(oracle < 1e-6, "shell oracle");

    auto t0 = Clock::now();
    const double c = sphere_capacity_constant(3, 2.0, 2000);
    double t = seconds_since(t0);
    o.note << "; sphere " << c << " (" << t << " s)";
    o.check(std::abs(c - 1.0) <= kCapacityTol, "sphere value");
    o.check(t < kCapacitySeconds, "sphere time");
    for (double rho : {0.25, 0.5}) {
        CapacityProblem pb;
        pb.set = fixtures::ball_fixture(3, rho);
        pb.resolution.cells = 18;
        t0 = Clock::now();
        const auto r = capacity(pb);
        t = seconds_since(t0);
        o.note << "; ball " << rho << ": " << r.value << " with " << r.n_sites << " sites (" << t << " s)";
        o.check(r.ok(), "solver status");
        o.check(r.n_sites >= 2000, "grid size");
        o.check(std::abs(r.value - rho) <= kCapacityTol * rho, "ball value");
        o.check(t < kCapacitySeconds, "ball time");
    }
}

void axioms(Outcome& o) {
    const auto r = verify_axioms();
    for (const char* a : {"monotonicity", "subadditivity", "scaling", "contraction-projection"}) {
        int count = 0;
        for (const auto& c : r.checks) count += c.axiom == a;
        o.note << " " << a << " " << r.violations(a) << "/" << count;
        o.check(count == 20, std::string(a) + " instances");
    }
    o.note << ", total violations " << r.total_violations() << ", max scaling error " << r.max_scaling_error;
    o.check(r.total_violations() == 0, "violations");
}

void thinness_verdicts(Outcome& o) {
    const Point p{0, 0, 0};
    const int shells = 10;
    for (double delta : {0.5, 0.25}) {
        const auto thin = thinness_test(fixtures::thin_ball_family(3, delta, 20), p, 2.0, delta, shells);
        double closed = 0.0, worst = 0.0;
        for (int q = 0; q < shells; ++q) {
            // ball capacity equals the radius: term i = 4^{-i} delta / (c 2^{-i} delta)
            closed += std::ldexp(1.0, -(q + 1)) / thin.sphere_constant;
            worst = std::max(worst, rel(thin.partial_sums[q], closed));
        }
        const auto fat = thinness_test(fixtures::nonthin_ball_family(3, delta, 20), p, 2.0, delta, shells);
        o.note << " delta " << delta << ": thin " << to_string(thin.verdict) << " sum " << thin.partial_sums.back()
               << " vs " << closed << " (worst partial " << worst << "), non-thin " << to_string(fat.verdict)
               << " term " << fat.terms.back() << ";";
        o.check(thin.verdict == Verdict::thin, "thin verdict");
        o.check(worst <= kSeriesTol, "partial sums");
        o.check(fat.verdict == Verdict::non_thin, "non-thin verdict");
    }
}

void avoiding_ray(Outcome& o) {
    const Point p{0, 0, 0};
    const double delta = 0.5;
    int verified = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const RegionSet e = fixtures::random_thin_family(3, delta, 30, seed);
        const auto rep = thinness_test(e, p, 2.0, delta, 6);
        const auto ray = find_avoiding_ray(e, p, rep);
        bool clear = ray.ok();
        if (clear)
            for (const auto& prim : e.primitives()) {
                const auto& b = std::get<Ball>(prim);
                clear = clear && segment_distance(p, ray.direction, ray.reach, b.center) > b.radius;
            }
        verified += clear;
        if (!clear) o.note << " seed " << seed << " " << to_string(ray.status) << ";";
    }
    o.note << " " << verified << "/10 thin instances with a clear segment;";
    o.check(verified == 10, "thin instances");

    ThinnessOptions opt;
    opt.resolution.cells = 4;
    const RegionSet cone = fixtures::cone_fixture(delta, 40);
    const auto rep = thinness_test(cone, p, 2.0, delta, 6, opt);
    const auto ray = find_avoiding_ray(cone, p, rep);
    o.note << " cone: " << to_string(ray.status) << ", " << ray.blocked << "/" << ray.samples_tried << " blocked";
    o.check(!ray.ok() && ray.blocked == ray.samples_tried, "cone failure result");
}

void multiscale(Outcome& o) {
    PointCloud base(3);
    base.push_back(Point{0, 0, 0});
    const double delta = 0.25, lambda = 10.0;
    double c[2];
    bool exact = true, finite = true;
    for (int m = 1; m <= 2; ++m) {
        const auto mu = segment_measure(Point{-0.5, 0, 0}, Point{0.5, 0, 0}, 2000 * m, 1.0);
        MultiscaleOptions opt;
        opt.shells = 8;
        opt.lambda = lambda;
        opt.samples_per_shell = 200 * m;
        const auto r = multiscale_verify(mu, base, 1.0, 1.5, delta, opt);
        o.check(!r.refused, "refused: " + r.reason);
        c[m - 1] = r.c_star;
        finite = finite && std::isfinite(r.c_star) && r.c_star > 0.0;
        for (const auto& sh : r.shells) {
            const auto w = dyadic_shell(delta, sh.index);
            double mass = 0.0;
            for (std::size_t a = 0; a < mu.size(); ++a)
                if (w.in_fat_shell(norm(mu.atoms()[a]))) mass += mu.weights()[a];
            exact = exact && sh.fat_mass == mass &&
                    rel(sh.budget, mass / (lambda * std::exp2(sh.index * 0.5))) <= kBudgetTol;
        }
        o.note << " atoms " << mu.size() << ": C* " << r.c_star << ", kept " << r.kept << ", exceptional "
               << r.exceptional << ";";
    }
    const double ratio = std::max(c[0], c[1]) / std::min(c[0], c[1]);
    o.note << " ratio " << ratio;
    o.check(finite, "finite sup");
    o.check(ratio < kMultiscaleFactor, "doubling");
    o.check(exact, "budgets");
}

void log_limit(Outcome& o) {
    const Point p{0, 0, 0};
    const auto k = KernelSpec::log(3, 4.0);
    LogLimitOptions opt;
    opt.shells = 10;
    const auto a = log_limit_verify(fixtures::atom_with_background(3, 1.0, 10000, 1.0, 3), p, 0.1, k, opt);
    double smallest = 1.0;
    for (const auto& sh : a.shells)
        for (std::size_t j = 0; j < sh.radius.size(); ++j)
            if (!sh.exceptional[j]) smallest = std::min(smallest, sh.radius[j]);
    o.note << " atom+background " << a.limit << " (smallest kept radius " << smallest << ")";
    o.check(std::abs(a.limit - 1.0) <= kLogLimitTol, "atom with background");
    o.check(smallest <= kSmallestRadius * 1.0001, "sample depth");

    DiscreteMeasure atom(3);
    atom.add(p, 1.0);
    const auto b = log_limit_verify(atom, p, 0.1, k, opt);
    o.note << ", pure atom " << b.limit;
    o.check(std::abs(b.limit - 1.0) <= 1e-12, "pure atom");

    const auto c = log_limit_verify(fixtures::atom_with_background(3, 0.0, 10000, 1.0, 3), p, 0.1, k, opt);
    o.note << ", no atom " << c.limit;
    o.check(std::abs(c.limit) <= kNoAtomLimit, "no atom");
}

void conformal(Outcome& o) {
    const auto t0 = Clock::now();
    double worst = 0.0;
    ConformalModel q = model(EquationKind::q_curvature_4, 4, 0.0);
    for (double e : {0.0, 0.25, 0.5, 0.9}) {
        q.mass = e;
        const auto v = ray_length(q);
        worst = std::max(worst, std::abs(v.length - 1.0 / (1.0 - e)));
    }
    int flips = 0, cases = 0;
    for (int n = 3; n <= 8; ++n) {
        const double t = (n - 2.0) / 2.0;
        ++cases;
        flips += !dimension_dichotomy(model(EquationKind::scalar, n, t)).contradiction &&
                 dimension_dichotomy(model(EquationKind::scalar, n, std::nextafter(t, 10.0))).contradiction;
        if (n >= 5) {
            const double h = (n - 4.0) / 2.0;
            ++cases;
            flips += !dimension_dichotomy(model(EquationKind::q_curvature_high, n, h)).contradiction &&
                     dimension_dichotomy(model(EquationKind::q_curvature_high, n, std::nextafter(h, 10.0))).contradiction;
        }
    }
    const double t = seconds_since(t0);
    o.note << " max length error " << worst << ", exact flips " << flips << "/" << cases << ", " << t << " s";
    o.check(worst <= kLengthTol, "lengths");
    o.check(flips == cases, "dichotomy");
    o.check(t < kConformalSeconds, "time");
}

#ifndef POTCAP_CLI
#define POTCAP_CLI "potcap"
#endif
#ifndef POTCAP_SCRATCH
#define POTCAP_SCRATCH "acceptance_scratch"
#endif

/// Runs the fixture suite into dir; returns the report payloads and output files keyed by name.
std::map<std::string, std::string> cli_suite(const fs::path& dir, Outcome& o) {
    fs::remove_all(dir);
    fs::create_directories(dir);
    {
        std::ofstream pts(dir / "points.csv");
        pts << "x,y,z\n0.5,0,0\n0,0.25,0.1\n-0.3,0.3,0.3\n0.05,0.05,0.05\n";
    }
    const std::string d = dir.string() + "/";
    const std::vector<std::pair<std::string, std::string>> steps = {
        {"sphere", "sample --fixture sphere --count 400 --out " + d + "sphere.json"},
        {"thin", "sample --fixture thin-family --delta 0.5 --shells 20 --out " + d + "thin.json"},
        {"cone", "sample --fixture cone --delta 0.5 --shells 40 --out " + d + "cone.json"},
        {"background", "sample --fixture atom-background --count 3000 --out " + d + "background.csv"},
        {"segment", "sample --fixture segment --count 1000 --out " + d + "segment.csv"},
        {"potential", "potential --measure " + d + "background.csv --points " + d + "points.csv --method tree --out " +
                          d + "values.csv"},
        {"capacity", "capacity --set " + d + "sphere.json --workers 2"},
        {"thinness", "thinness --set " + d + "thin.json --shells 5 --sphere-resolution 400 --workers 2"},
        {"ray", "ray --set " + d + "cone.json --shells 5 --cells 4 --sphere-resolution 400"},
        {"multiscale", "multiscale --measure " + d + "segment.csv --d 1 --alpha 1.5 --lambda 10 --shells 5 "
                                                     "--samples 50"},
        {"loglimit", "loglimit --measure " + d + "background.csv --shells 6 --samples 40"},
        {"conformal", "conformal --kind scalar --n 4 --d 1.5"},
    };
    std::map<std::string, std::string> out;
    for (const auto& [name, args] : steps) {
        const fs::path report = dir / (name + ".report.json");
        const std::string cmd = std::string(POTCAP_CLI) + " " + args + " --seed 7 --report " + report.string() +
                                " > " + (dir / (name + ".stdout")).string() + " 2>&1";
        const int rc = std::system(cmd.c_str());
        const int status = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
        const int expected = name == "ray" ? 3 : 0;
        if (status != expected) {
            o.check(false, name + " exit " + std::to_string(status));
            continue;
        }
        const auto j = nlohmann::json::parse(slurp(report));
        out[name + ".payload"] = j.at("payload").dump();
    }
    for (const char* f : {"sphere.json", "thin.json", "cone.json", "background.csv", "segment.csv", "values.csv"})
        out[f] = slurp(dir / f);
    return out;
}

void determinism(Outcome& o) {
    const fs::path root(POTCAP_SCRATCH);
    // same directory both times: reports record their file arguments
    const auto a = cli_suite(root / "suite", o);
    const auto b = cli_suite(root / "suite", o);
    int same = 0;
    for (const auto& [k, v] : a) {
        const auto it = b.find(k);
        if (it != b.end() && it->second == v) ++same;
        else o.check(false, k + " differs");
    }
    o.note << " " << same << "/" << a.size() << " payloads and outputs byte-identical";
    o.check(a.size() == 18 && b.size() == a.size(), "suite complete");
}

}  // namespace

int main(int argc, char** argv) {
    for (int k = 1; k < argc; ++k) selected.insert(std::atoi(argv[k]));
    criterion(1, "kernel identities", kernel_identities);
    criterion(2, "accelerated summation", tree_summation);
    criterion(3, "capacity calibration", capacity_calibration);
    criterion(4, "capacity axioms", axioms);
    criterion(5, "thinness verdicts", thinness_verdicts);
    criterion(6, "avoiding ray", avoiding_ray);
    criterion(7, "multiscale bound", multiscale);
    criterion(8, "log limit", log_limit);
    criterion(9, "conformal lengths", conformal);
    criterion(10, "determinism", determinism);
    std::printf("%d of %zu criteria failed\n", failures, selected.empty() ? std::size_t{10} : selected.size());
    return failures == 0 ? 0 : 1;
}
