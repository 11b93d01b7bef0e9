// potcap command-line driver. Every subcommand writes a JSON report
// {tool, version, command, config, seed, wall_time, payload}; `potential`
// writes its values as CSV and the report only when --report is given.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include <potcap/io.hpp>
#include <potcap/potcap.hpp>

using namespace potcap;
using json = nlohmann::json;

namespace {

constexpr int kOk = 0, kDomain = 1, kSolver = 2, kVerdict = 3;

struct Common {
    std::uint64_t seed = 1;
    std::size_t workers = 0;
    std::string report = "-";
};

struct Run {
    std::string command;
    json config = json::object();
    json payload = json::object();
    int status = kOk;
};

void emit(const std::string& path, const std::string& text) {
    if (path == "-") {
        std::cout << text;
        std::cout.flush();
        return;
    }
    std::ofstream out(path);
    if (!out) throw domain_error("cannot write '" + path + "'");
    out << text;
}

json shell_table(const std::map<std::string, json>& cols) {
    json t = json::object();
    for (const auto& [k, v] : cols) t[k] = v;
    return t;
}

KernelSpec kernel_for(std::size_t n, std::optional<double> alpha, std::optional<double> diameter, double fallback_d) {
    const double a = alpha.value_or(static_cast<double>(n) - 1.0);
    if (a == static_cast<double>(n)) return KernelSpec::log(static_cast<int>(n), diameter.value_or(fallback_d));
    return KernelSpec::riesz(static_cast<int>(n), a);
}

json kernel_json(const KernelSpec& k) {
    json j{{"n", k.n}, {"alpha", k.alpha}, {"name", k.name()}};
    if (k.is_log()) j["diameter"] = k.diameter;
    return j;
}

struct DomainFlags {
    std::string shape = "ball";
    std::vector<double> center, min, max;
    double radius = 2.0, inner = 0.0;

    void add(CLI::App* app) {
        app->add_option("--omega", shape, "domain shape")->check(CLI::IsMember({"ball", "box", "annulus"}));
        app->add_option("--omega-center", center, "domain centre (comma separated)")->delimiter(',');
        app->add_option("--omega-radius", radius, "outer radius");
        app->add_option("--omega-inner", inner, "inner radius (annulus)");
        app->add_option("--omega-min", min, "box corner")->delimiter(',');
        app->add_option("--omega-max", max, "box corner")->delimiter(',');
    }
    Domain make(std::size_t n) const {
        if (shape == "box") {
            require(min.size() == n && max.size() == n, "--omega-min/--omega-max need " + std::to_string(n) + " values");
            return Domain::box(min, max);
        }
        Point c = center.empty() ? Point(n, 0.0) : center;
        require(c.size() == n, "--omega-center needs " + std::to_string(n) + " values");
        return shape == "annulus" ? Domain::annulus(c, inner, radius) : Domain::ball(c, radius);
    }
    json to_json() const {
        json j{{"shape", shape}};
        if (shape == "box") {
            j["min"] = min;
            j["max"] = max;
        } else {
            j["center"] = center;
            j["radius"] = radius;
            if (shape == "annulus") j["inner"] = inner;
        }
        return j;
    }
};

Point point_arg(const std::vector<double>& v, std::size_t n, const char* flag) {
    if (v.empty()) return Point(n, 0.0);
    require(v.size() == n, std::string(flag) + " needs " + std::to_string(n) + " values");
    return v;
}

json thinness_payload(const ThinnessReport& r) {
    std::vector<int> idx;
    std::vector<double> inner, outer;
    for (int i = r.ladder.start(); i < r.ladder.stop(); ++i) {
        idx.push_back(i);
        inner.push_back(r.ladder.shell(i).inner);
        outer.push_back(r.ladder.shell(i).outer);
    }
    json tail{{"ratio", r.tail.ratio}, {"tail", r.tail.tail}};
    return {{"alpha", r.alpha},
            {"delta", r.ladder.delta()},
            {"sphere_constant", r.sphere_constant},
            {"verdict", to_string(r.verdict)},
            {"tail", tail},
            {"sum", r.partial_sums.empty() ? 0.0 : r.partial_sums.back()},
            {"shells", shell_table({{"index", idx},
                                    {"inner", inner},
                                    {"outer", outer},
                                    {"unit_capacity", r.unit_values},
                                    {"numerator", r.numerators},
                                    {"denominator", r.denominators},
                                    {"term", r.terms},
                                    {"partial_sum", r.partial_sums},
                                    {"sites", r.sites},
                                    {"samples", r.samples}})}};
}

json ray_payload(const RayResult& r) {
    json j{{"status", to_string(r.status)},
           {"reach", r.reach},
           {"tail_index", r.tail_index},
           {"depth_index", r.depth_index},
           {"budget_met", r.budget_met},
           {"budget_sum", r.budget_sum},
           {"samples_tried", r.samples_tried},
           {"blocked", r.blocked}};
    if (r.ok()) j["direction"] = r.direction;
    return j;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Riesz and log potentials, capacities, thinness tests and multiscale bounds"};
    app.set_version_flag("--version", std::string("potcap ") + POTCAP_VERSION);
    app.require_subcommand(1);
    Common common;
    auto add_common = [&](CLI::App* sub, bool report_default_stdout = true) {
        sub->add_option("--seed", common.seed, "random seed");
        sub->add_option("--workers", common.workers, "worker threads (0 = available cores)");
        if (report_default_stdout)
            sub->add_option("--report", common.report, "report path ('-' = stdout)");
        else
            sub->add_option("--report", common.report, "report path");
    };
    Run run;
    std::function<void()> action;

    // potential
    auto* pot = app.add_subcommand("potential", "evaluate a potential at points");
    std::string pot_measure, pot_points, pot_out = "-", pot_method = "naive";
    std::optional<double> pot_alpha, pot_diam;
    std::optional<int> pot_n;
    double pot_tol = 1e-9;
    pot->add_option("--measure", pot_measure, "measure CSV/JSON")->required();
    pot->add_option("--points", pot_points, "points CSV")->required();
    pot->add_option("--n", pot_n, "dimension (checked against the files)");
    pot->add_option("--alpha", pot_alpha, "kernel order (alpha = n: log kernel)");
    pot->add_option("--diameter", pot_diam, "D for the log kernel");
    pot->add_option("--method", pot_method)->check(CLI::IsMember({"naive", "tree"}));
    pot->add_option("--tolerance", pot_tol, "tree tolerance");
    pot->add_option("--out", pot_out, "values CSV ('-' = stdout)");
    add_common(pot, false);
    pot->callback([&] {
        common.report = common.report == "-" ? "" : common.report;
        action = [&] {
            const DiscreteMeasure mu = io::load_measure(pot_measure);
            const PointCloud pts = io::load_points(pot_points);
            const std::size_t n = mu.dim();
            if (pot_n) require(static_cast<std::size_t>(*pot_n) == n, "--n differs from the measure dimension");
            require(pts.dim() == n, "points and measure have different dimensions");
            const KernelSpec k = kernel_for(n, pot_alpha, pot_diam, 0.0);
            PotentialOptions po;
            po.method = pot_method == "tree" ? Summation::tree : Summation::naive;
            po.tolerance = pot_tol;
            po.workers = common.workers;
            const PotentialField f = eval_potential(mu, k, pts, MetricChart::euclidean(), po);
            std::ostringstream csv;
            csv << std::setprecision(17);
            for (std::size_t d = 0; d < n; ++d) csv << 'x' << d + 1 << ',';
            csv << "value\n";
            std::size_t singular = 0;
            double max_bound = 0.0;
            for (std::size_t i = 0; i < pts.size(); ++i) {
                for (double x : pts[i]) csv << x << ',';
                if (f.singular[i]) {
                    csv << "inf\n";
                    ++singular;
                } else {
                    csv << f.values[i] << '\n';
                }
                max_bound = std::max(max_bound, f.error_bound[i]);
            }
            emit(pot_out, csv.str());
            run.config = {{"measure", pot_measure}, {"points", pot_points}, {"kernel", kernel_json(k)},
                          {"method", pot_method}, {"tolerance", pot_tol}, {"out", pot_out}};
            run.payload = {{"method", f.method}, {"count", pts.size()}, {"singular", singular},
                           {"max_error_bound", max_bound}, {"order", f.order}, {"checked_error", f.checked_error}};
        };
    });

    // capacity
    auto* cap = app.add_subcommand("capacity", "outer capacity of a set relative to a domain");
    std::string cap_set, cap_witness;
    std::optional<double> cap_alpha, cap_diam;
    double cap_h = 0.0, cap_trunc = 0.5, cap_margin = 1.0;
    int cap_cells = 10;
    DomainFlags cap_dom;
    cap->add_option("--set", cap_set, "region JSON")->required();
    cap->add_option("--alpha", cap_alpha, "kernel order");
    cap->add_option("--diameter", cap_diam, "D for the log kernel (default: domain diameter)");
    cap->add_option("--cells", cap_cells, "lattice cells across each primitive")->check(CLI::PositiveNumber);
    cap->add_option("--grid-h", cap_h, "absolute lattice spacing (overrides --cells)")->check(CLI::NonNegativeNumber);
    cap->add_option("--trunc", cap_trunc, "kernel cap radius as a fraction of the spacing")->check(CLI::PositiveNumber);
    cap->add_option("--margin", cap_margin, "site band width in spacings")->check(CLI::PositiveNumber);
    cap->add_option("--witness", cap_witness, "write the witness measure CSV here");
    cap_dom.add(cap);
    add_common(cap);
    cap->callback([&] {
        action = [&] {
            CapacityProblem pb;
            pb.set = io::load_region(cap_set);
            const std::size_t n = pb.set.dim();
            pb.omega = cap_dom.make(n);
            pb.kernel = kernel_for(n, cap_alpha, cap_diam, pb.omega.diameter());
            pb.resolution = {cap_cells, cap_h, cap_margin, cap_trunc};
            SolveOptions so;
            so.workers = common.workers;
            const CapacityResult r = capacity(pb, so);
            run.config = {{"set", cap_set}, {"omega", cap_dom.to_json()}, {"kernel", kernel_json(pb.kernel)},
                          {"cells", cap_cells}, {"grid_h", cap_h}, {"trunc", cap_trunc}, {"margin", cap_margin}};
            run.payload = {{"value", r.value},           {"lower_bound", r.lower_bound},
                           {"gap", r.gap},               {"status", r.status},
                           {"n_atoms", r.n_sites},       {"n_constraints", r.n_samples},
                           {"active_atoms", r.active_sites}, {"active_constraints", r.active_samples},
                           {"min_potential", r.min_potential}, {"cs_violation", r.cs_violation},
                           {"h", {r.h_min, r.h_max}},    {"trunc", {r.trunc_min, r.trunc_max}},
                           {"iterations", r.iterations}, {"rounds", r.rounds},
                           {"witness_atoms", r.witness.size()}};
            if (!cap_witness.empty()) {
                std::ofstream out(cap_witness);
                if (!out) throw domain_error("cannot write '" + cap_witness + "'");
                io::write_measure_csv(out, r.witness);
                run.payload["witness_file"] = cap_witness;
            }
            if (!r.ok()) run.status = kSolver;
        };
    });

    // thinness and ray share their flags
    struct ThinFlags {
        std::string set;
        std::vector<double> point;
        double alpha = 2.0, delta = 0.5, margin = 0.1;
        int shells = 12, start = 1, cells = 8;
        std::size_t sphere_resolution = 2000;
    };
    ThinFlags tf;
    auto add_thin = [&](CLI::App* sub) {
        sub->add_option("--set", tf.set, "region JSON")->required();
        sub->add_option("--point", tf.point, "base point p (default origin)")->delimiter(',');
        sub->add_option("--alpha", tf.alpha, "kernel order in (1, n]");
        sub->add_option("--delta", tf.delta, "ladder scale")->check(CLI::PositiveNumber);
        sub->add_option("--shells", tf.shells, "number of shells (>= 5)");
        sub->add_option("--start", tf.start, "first shell index");
        sub->add_option("--cells", tf.cells, "lattice cells per primitive")->check(CLI::PositiveNumber);
        sub->add_option("--sphere-resolution", tf.sphere_resolution, "points for the sphere constant");
        sub->add_option("--margin", tf.margin, "verdict margin on the fitted ratio");
        add_common(sub);
    };
    auto thin_config = [&] {
        return json{{"set", tf.set},     {"point", tf.point}, {"alpha", tf.alpha},   {"delta", tf.delta},
                    {"shells", tf.shells}, {"start", tf.start}, {"cells", tf.cells},
                    {"sphere_resolution", tf.sphere_resolution}, {"margin", tf.margin}};
    };
    auto run_thin = [&](const RegionSet& e, const Point& p) {
        ThinnessOptions o;
        o.start = tf.start;
        o.resolution.cells = tf.cells;
        o.sphere_resolution = tf.sphere_resolution;
        o.margin = tf.margin;
        o.workers = common.workers;
        o.solver.workers = 1;
        return thinness_test(e, p, tf.alpha, tf.delta, tf.shells, o);
    };
    auto* thin = app.add_subcommand("thinness", "dyadic capacity series at a point");
    add_thin(thin);
    thin->callback([&] {
        action = [&] {
            const RegionSet e = io::load_region(tf.set);
            const Point p = point_arg(tf.point, e.dim(), "--point");
            run.config = thin_config();
            run.payload = thinness_payload(run_thin(e, p));
        };
    });
    auto* ray = app.add_subcommand("ray", "search for a segment from p avoiding the set");
    std::size_t ray_samples = 2000;
    double ray_budget = 0.5;
    add_thin(ray);
    ray->add_option("--sphere-samples", ray_samples, "directions to try");
    ray->add_option("--budget", ray_budget, "allowed remaining series mass");
    ray->callback([&] {
        action = [&] {
            const RegionSet e = io::load_region(tf.set);
            const Point p = point_arg(tf.point, e.dim(), "--point");
            run.config = thin_config();
            run.config["sphere_samples"] = ray_samples;
            run.config["budget"] = ray_budget;
            const ThinnessReport t = run_thin(e, p);
            const RayResult r = find_avoiding_ray(e, p, t, {ray_samples, ray_budget});
            run.payload = {{"thinness", thinness_payload(t)}, {"ray", ray_payload(r)}};
            if (!r.ok()) run.status = kVerdict;
        };
    });

    // multiscale
    auto* ms = app.add_subcommand("multiscale", "multiscale Riesz potential bound");
    std::string ms_measure, ms_candidates, ms_set;
    std::vector<double> ms_point;
    double ms_d = 0.0, ms_alpha = 1.5, ms_delta = 0.25, ms_lambda = 1.0, ms_eps = -1.0;
    int ms_start = 1, ms_shells = 8;
    std::size_t ms_samples = 200;
    ms->add_option("--measure", ms_measure, "measure CSV/JSON")->required();
    ms->add_option("--candidates", ms_candidates, "candidate base points CSV");
    ms->add_option("--point", ms_point, "single candidate point (default origin)")->delimiter(',');
    ms->add_option("--d", ms_d, "dimension parameter d < n - alpha")->required();
    ms->add_option("--alpha", ms_alpha, "kernel order in (1, n)");
    ms->add_option("--delta", ms_delta)->check(CLI::PositiveNumber);
    ms->add_option("--lambda", ms_lambda)->check(CLI::PositiveNumber);
    ms->add_option("--epsilon", ms_eps, "growth slack (default: half the fitted gap)");
    ms->add_option("--start", ms_start);
    ms->add_option("--shells", ms_shells);
    ms->add_option("--samples", ms_samples, "samples per shell");
    ms->add_option("--set", ms_set, "also search an avoiding ray for this region");
    add_common(ms);
    ms->callback([&] {
        action = [&] {
            const DiscreteMeasure mu = io::load_measure(ms_measure);
            PointCloud cand(mu.dim());
            if (!ms_candidates.empty())
                cand = io::load_points(ms_candidates);
            else
                cand.push_back(point_arg(ms_point, mu.dim(), "--point"));
            MultiscaleOptions o;
            o.start = ms_start;
            o.shells = ms_shells;
            o.lambda = ms_lambda;
            o.epsilon = ms_eps;
            o.samples_per_shell = ms_samples;
            o.workers = common.workers;
            run.config = {{"measure", ms_measure}, {"candidates", ms_candidates}, {"point", ms_point},
                          {"d", ms_d},             {"alpha", ms_alpha},           {"delta", ms_delta},
                          {"lambda", ms_lambda},   {"epsilon", ms_eps},           {"start", ms_start},
                          {"shells", ms_shells},   {"samples", ms_samples},       {"set", ms_set}};
            const MultiscaleReport r = multiscale_verify(mu, cand, ms_d, ms_alpha, ms_delta, o);
            if (r.refused) {
                run.payload = {{"refused", true}, {"reason", r.reason}};
                run.status = kVerdict;
                return;
            }
            std::vector<int> idx;
            std::vector<double> t1, t2, t2g, thr, fat, budget;
            std::vector<std::size_t> kept, exc;
            std::vector<bool> dom;
            std::vector<std::vector<double>> t3;
            for (const auto& sh : r.shells) {
                idx.push_back(sh.index);
                t1.push_back(sh.term1);
                t2.push_back(sh.term2);
                t2g.push_back(sh.term2_growth);
                thr.push_back(sh.threshold);
                fat.push_back(sh.fat_mass);
                budget.push_back(sh.budget);
                kept.push_back(sh.kept);
                exc.push_back(sh.exceptional.size() - sh.kept);
                dom.push_back(sh.bounds_dominate);
                t3.push_back(sh.term3);
            }
            run.payload = {{"refused", false},
                           {"base", r.base},
                           {"d", r.d},
                           {"epsilon", r.epsilon},
                           {"lambda", r.lambda},
                           {"growth", {{"constant", r.certificate.constant}, {"exponent", r.certificate.exponent},
                                       {"slope", r.growth_slope}, {"dyadic_slack", r.certificate.dyadic_slack}}},
                           {"c_star", r.c_star},
                           {"kept", r.kept},
                           {"exceptional", r.exceptional},
                           {"sphere_constant", r.sphere_constant},
                           {"budget_verdict", to_string(r.budget_verdict)},
                           {"budget_tail", {{"ratio", r.budget_tail.ratio}, {"tail", r.budget_tail.tail}}},
                           {"shells", shell_table({{"index", idx},
                                                   {"term1", t1},
                                                   {"term2", t2},
                                                   {"term2_growth", t2g},
                                                   {"threshold", thr},
                                                   {"fat_mass", fat},
                                                   {"budget", budget},
                                                   {"budget_term", r.budget_terms},
                                                   {"budget_partial_sum", r.budget_partial_sums},
                                                   {"kept", kept},
                                                   {"exceptional", exc},
                                                   {"bounds_dominate", dom}})},
                           {"term3", t3}};
            if (!ms_set.empty()) {
                const RegionSet e = io::load_region(ms_set);
                tf.alpha = ms_alpha;
                tf.delta = ms_delta;
                tf.start = ms_start;
                tf.shells = std::max(ms_shells, 5);
                const ThinnessReport t = run_thin(e, r.base);
                const RayResult ray_r = find_avoiding_ray(e, r.base, t);
                run.payload["ray"] = ray_payload(ray_r);
                // Along the ray the kept-sample bound gives u <= C_star s^{-(n-alpha-d)}.
                run.payload["ray_bound_exponent"] = static_cast<double>(mu.dim()) - ms_alpha - ms_d;
                if (!ray_r.ok()) run.status = kVerdict;
            }
        };
    });

    // loglimit
    auto* ll = app.add_subcommand("loglimit", "limit of the log potential ratio at a point");
    std::string ll_measure;
    std::vector<double> ll_point;
    double ll_delta = 0.1, ll_diam = 4.0;
    int ll_start = 1, ll_shells = 10;
    std::size_t ll_samples = 100;
    ll->add_option("--measure", ll_measure, "measure CSV/JSON")->required();
    ll->add_option("--point", ll_point, "base point (default origin)")->delimiter(',');
    ll->add_option("--delta", ll_delta);
    ll->add_option("--diameter", ll_diam, "D in log(D/|x-y|)")->check(CLI::PositiveNumber);
    ll->add_option("--start", ll_start);
    ll->add_option("--shells", ll_shells);
    ll->add_option("--samples", ll_samples, "samples per shell");
    add_common(ll);
    ll->callback([&] {
        action = [&] {
            const DiscreteMeasure mu = io::load_measure(ll_measure);
            const Point p = point_arg(ll_point, mu.dim(), "--point");
            LogLimitOptions o;
            o.start = ll_start;
            o.shells = ll_shells;
            o.samples_per_shell = ll_samples;
            o.workers = common.workers;
            run.config = {{"measure", ll_measure}, {"point", ll_point}, {"delta", ll_delta}, {"diameter", ll_diam},
                          {"start", ll_start},     {"shells", ll_shells}, {"samples", ll_samples}};
            const LogLimitReport r =
                log_limit_verify(mu, p, ll_delta, KernelSpec::log(static_cast<int>(mu.dim()), ll_diam), o);
            std::vector<int> idx;
            std::vector<double> mass, tail, weight, budget, rmin;
            std::vector<std::size_t> exc;
            for (const auto& sh : r.shells) {
                idx.push_back(sh.index);
                mass.push_back(sh.mass);
                tail.push_back(sh.tail);
                weight.push_back(sh.weight);
                budget.push_back(sh.budget);
                std::size_t e = 0;
                for (bool b : sh.exceptional) e += b;
                exc.push_back(e);
            }
            run.payload = {{"base", r.base},
                           {"atom_mass", r.atom_mass},
                           {"limit", r.limit},
                           {"slope", r.slope},
                           {"kept", r.kept},
                           {"exceptional", r.exceptional},
                           {"weighted_sum", r.weighted_sum},
                           {"weighted_bound", r.weighted_bound},
                           {"shells", shell_table({{"index", idx},
                                                   {"mass", mass},
                                                   {"tail", tail},
                                                   {"weight", weight},
                                                   {"budget", budget},
                                                   {"exceptional", exc}})},
                           {"fit", {{"x", r.fit_x}, {"ratio", r.fit_y}}}};
        };
    });

    // conformal
    auto* cf = app.add_subcommand("conformal", "length exponent and dimension dichotomy");
    std::string cf_kind = "scalar";
    int cf_n = 3;
    double cf_d = 0.0, cf_mass = 0.0, cf_c = 1.0, cf_l0 = 1.0;
    cf->add_option("--kind", cf_kind)->check(CLI::IsMember({"scalar", "q-curvature-high", "q-curvature-4"}));
    cf->add_option("--n", cf_n);
    cf->add_option("--d", cf_d, "singular-set dimension");
    cf->add_option("--mass", cf_mass, "atom mass (q-curvature-4)");
    cf->add_option("--const", cf_c, "potential-bound constant C");
    cf->add_option("--l0", cf_l0, "ray length");
    add_common(cf);
    cf->callback([&] {
        action = [&] {
            ConformalModel m{parse_equation_kind(cf_kind), cf_n, cf_d, cf_mass, cf_c, cf_l0};
            run.config = {{"kind", cf_kind}, {"n", cf_n}, {"d", cf_d}, {"mass", cf_mass}, {"const", cf_c}, {"l0", cf_l0}};
            const Dichotomy dd = dimension_dichotomy(m);
            const LengthVerdict lv = ray_length(m);
            run.payload = {{"exponent", dd.exponent},
                           {"verdict", dd.verdict},
                           {"threshold", dd.threshold},
                           {"length_finite", lv.finite},
                           {"length", lv.finite ? json(lv.length) : json("infinite")},
                           {"quadrature_error_bound", lv.error_bound}};
            if (m.kind == EquationKind::q_curvature_4) run.payload["min_atom_mass"] = dd.min_atom_mass;
        };
    });

    // sample
    auto* sm = app.add_subcommand("sample", "write a fixture set or measure");
    std::string sm_fixture, sm_out = "-";
    std::size_t sm_n = 3, sm_count = 2000;
    double sm_radius = 0.5, sm_delta = 0.5, sm_mass = 1.0, sm_total = 1.0;
    int sm_shells = 20;
    sm->add_option("--fixture", sm_fixture)
        ->required()
        ->check(CLI::IsMember({"sphere", "ball", "thin-family", "nonthin-family", "random-thin", "cone", "segment",
                               "disc", "atom-background", "uniform-ball", "sphere-measure"}));
    sm->add_option("--n", sm_n, "dimension")->check(CLI::Range(2, 8));
    sm->add_option("--count", sm_count, "points or atoms");
    sm->add_option("--radius", sm_radius);
    sm->add_option("--delta", sm_delta);
    sm->add_option("--shells", sm_shells, "members of a family");
    sm->add_option("--mass", sm_mass, "atom mass at the origin");
    sm->add_option("--total", sm_total, "total mass of the diffuse part");
    sm->add_option("--out", sm_out, "output file ('-' = stdout)");
    add_common(sm);
    sm->callback([&] {
        if (common.report == "-" && sm_out == "-") common.report = "";
        action = [&] {
            run.config = {{"fixture", sm_fixture}, {"n", sm_n},         {"count", sm_count}, {"radius", sm_radius},
                          {"delta", sm_delta},     {"shells", sm_shells}, {"mass", sm_mass}, {"total", sm_total},
                          {"out", sm_out}};
            std::optional<RegionSet> e;
            std::optional<DiscreteMeasure> mu;
            if (sm_fixture == "sphere") e = fixtures::sphere_fixture(sm_n, sm_count);
            else if (sm_fixture == "ball") e = fixtures::ball_fixture(sm_n, sm_radius);
            else if (sm_fixture == "thin-family") e = fixtures::thin_ball_family(sm_n, sm_delta, sm_shells);
            else if (sm_fixture == "nonthin-family") e = fixtures::nonthin_ball_family(sm_n, sm_delta, sm_shells);
            else if (sm_fixture == "random-thin") e = fixtures::random_thin_family(sm_n, sm_delta, sm_shells, common.seed);
            else if (sm_fixture == "cone") {
                require(sm_n == 3, "the cone fixture is three-dimensional");
                e = fixtures::cone_fixture(sm_delta, sm_shells);
            } else if (sm_fixture == "segment") {
                Point a(sm_n, 0.0), b(sm_n, 0.0);
                a[0] = -0.5;
                b[0] = 0.5;
                mu = segment_measure(a, b, sm_count, sm_total);
            } else if (sm_fixture == "disc") mu = fixtures::disc_measure(sm_n, sm_count, sm_total, common.seed);
            else if (sm_fixture == "atom-background")
                mu = fixtures::atom_with_background(sm_n, sm_mass, sm_count, sm_total, common.seed);
            else if (sm_fixture == "uniform-ball")
                mu = random_ball_measure(Point(sm_n, 0.0), sm_radius, sm_count, sm_total, common.seed);
            else mu = sphere_measure(sm_n, sm_count, sm_total);
            std::ostringstream out;
            if (e) {
                out << io::to_json(*e).dump(1) << '\n';
                run.payload = {{"kind", "region"}, {"primitives", e->primitives().size()}};
            } else {
                io::write_measure_csv(out, *mu);
                run.payload = {{"kind", "measure"}, {"atoms", mu->size()}, {"total_mass", mu->total_mass()}};
            }
            emit(sm_out, out.str());
            run.payload["out"] = sm_out;
        };
    });

    // replot
    auto* rp = app.add_subcommand("replot", "turn a report into plot-ready CSV");
    std::string rp_in, rp_out = "-";
    rp->add_option("--input", rp_in, "report JSON")->required();
    rp->add_option("--out", rp_out, "CSV path ('-' = stdout)");
    rp->callback([&] {
        common.report = "";
        action = [&] {
            const json rep = io::read_json_file(rp_in);
            if (!rep.is_object() || rep.value("tool", "") != "potcap" || !rep.contains("payload") || !rep.contains("command"))
                throw domain_error("'" + rp_in + "' is not a potcap report");
            const json* shells = nullptr;
            const json& pl = rep.at("payload");
            if (pl.contains("shells")) shells = &pl.at("shells");
            else if (pl.contains("thinness") && pl.at("thinness").contains("shells")) shells = &pl.at("thinness").at("shells");
            std::ostringstream out;
            out << std::setprecision(17);
            if (shells) {
                std::vector<std::string> cols;
                std::size_t rows = 0;
                for (const auto& [k, v] : shells->items()) {
                    if (!v.is_array()) throw domain_error("report shells." + k + " is not an array");
                    if (!cols.empty() && v.size() != rows) throw domain_error("report shells." + k + " has a different length");
                    rows = v.size();
                    cols.push_back(k);
                }
                for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << cols[c];
                out << '\n';
                for (std::size_t r = 0; r < rows; ++r) {
                    for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << shells->at(cols[c])[r].dump();
                    out << '\n';
                }
            } else {
                out << "key,value\n";
                for (const auto& [k, v] : pl.flatten().items()) out << k << ',' << v.dump() << '\n';
            }
            emit(rp_out, out.str());
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kDomain;
    }
    if (common.workers == 0) common.workers = default_workers();
    run.command = app.get_subcommands().front()->get_name();

    const auto t0 = std::chrono::steady_clock::now();
    try {
        action();
    } catch (const solver_error& e) {
        std::cerr << "potcap " << run.command << ": solver failure: " << e.what() << '\n';
        return kSolver;
    } catch (const std::invalid_argument& e) {
        std::cerr << "potcap " << run.command << ": " << e.what() << '\n';
        return kDomain;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "potcap " << run.command << ": " << e.what() << '\n';
        return kDomain;
    } catch (const std::exception& e) {
        std::cerr << "potcap " << run.command << ": " << e.what() << '\n';
        return kSolver;
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!common.report.empty()) {
        json rep{{"tool", "potcap"},
                 {"version", POTCAP_VERSION},
                 {"command", run.command},
                 {"config", run.config},
                 {"seed", common.seed},
                 {"workers", common.workers},
                 {"wall_time", wall},
                 {"payload", run.payload}};
        try {
            emit(common.report, rep.dump(2) + "\n");
        } catch (const std::exception& e) {
            std::cerr << "potcap " << run.command << ": " << e.what() << '\n';
            return kDomain;
        }
    }
    if (run.status == kVerdict) std::cerr << "potcap " << run.command << ": verdict failure\n";
    return run.status;
}
