#include "scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <limits>
#include <set>
#include <sstream>

#include "msf/errors.hpp"
#include "msf/oracle.hpp"
#include "msf/poly.hpp"

namespace msf::cli {

namespace {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Config parsing. Every helper carries the key path so schema violations
// name the offending node; JSON syntax errors keep nlohmann's line/column.

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ConfigError("config " + path + ": " + what);
}

void check_keys(const json& j, const std::string& path,
                const std::set<std::string>& allowed) {
    if (!j.is_object()) fail(path, "expected an object");
    for (const auto& item : j.items())
        if (!allowed.count(item.key()))
            fail(path + "." + item.key(), "unknown key");
}

const json* find(const json& j, const std::string& key) {
    auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
}

double get_number(const json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
}

double get_number(const json& j, const std::string& path, const char* key,
                  double fallback) {
    const json* v = find(j, key);
    return v ? get_number(*v, path + "." + key) : fallback;
}

int get_int(const json& j, const std::string& path) {
    if (!j.is_number_integer()) fail(path, "expected an integer");
    return j.get<int>();
}

int get_int(const json& j, const std::string& path, const char* key,
            int fallback) {
    const json* v = find(j, key);
    return v ? get_int(*v, path + "." + key) : fallback;
}

bool get_bool(const json& j, const std::string& path, const char* key,
              bool fallback) {
    const json* v = find(j, key);
    if (!v) return fallback;
    if (!v->is_boolean()) fail(path + "." + key, "expected a boolean");
    return v->get<bool>();
}

std::string get_string(const json& j, const std::string& path) {
    if (!j.is_string()) fail(path, "expected a string");
    return j.get<std::string>();
}

std::vector<double> get_number_array(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) fail(path, "expected a non-empty array of numbers");
    std::vector<double> out;
    out.reserve(j.size());
    for (size_t i = 0; i < j.size(); ++i)
        out.push_back(get_number(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

densities::DensityModel parse_density(const json& j, const std::string& path);

densities::DensityModel parse_mixture(const json& j, const std::string& path) {
    check_keys(j, path, {"kind", "weights", "components"});
    const json* w = find(j, "weights");
    const json* c = find(j, "components");
    if (!w || !c) fail(path, "mixture needs 'weights' and 'components'");
    densities::Mixture mix;
    mix.weights = get_number_array(*w, path + ".weights");
    if (!c->is_array() || c->size() != mix.weights.size())
        fail(path + ".components", "must list one component per weight");
    for (size_t i = 0; i < c->size(); ++i)
        mix.components.push_back(
            parse_density((*c)[i], path + ".components[" + std::to_string(i) + "]"));
    return densities::DensityModel{std::move(mix)};
}

densities::DensityModel parse_density(const json& j, const std::string& path) {
    if (!j.is_object()) fail(path, "expected a density object");
    const json* kind_j = find(j, "kind");
    if (!kind_j) fail(path, "density needs a 'kind'");
    const std::string kind = get_string(*kind_j, path + ".kind");

    if (kind == "gaussian") {
        check_keys(j, path, {"kind", "mean", "stddev"});
        const double sd = get_number(j, path, "stddev", 1.0);
        if (!(sd > 0.0)) fail(path + ".stddev", "must be > 0");
        return densities::Gaussian{get_number(j, path, "mean", 0.0), sd};
    }
    if (kind == "laplace") {
        check_keys(j, path, {"kind", "loc", "scale"});
        const double sc = get_number(j, path, "scale", 1.0);
        if (!(sc > 0.0)) fail(path + ".scale", "must be > 0");
        return densities::Laplace{get_number(j, path, "loc", 0.0), sc};
    }
    if (kind == "cauchy") {
        check_keys(j, path, {"kind", "loc", "scale"});
        const double sc = get_number(j, path, "scale", 1.0);
        if (!(sc > 0.0)) fail(path + ".scale", "must be > 0");
        return densities::Cauchy{get_number(j, path, "loc", 0.0), sc};
    }
    if (kind == "student_t") {
        check_keys(j, path, {"kind", "dof", "loc", "scale"});
        const double dof = get_number(j, path, "dof", 1.0);
        const double sc = get_number(j, path, "scale", 1.0);
        if (!(dof > 0.0)) fail(path + ".dof", "must be > 0");
        if (!(sc > 0.0)) fail(path + ".scale", "must be > 0");
        return densities::StudentT{dof, get_number(j, path, "loc", 0.0), sc};
    }
    if (kind == "exp_poly") {
        check_keys(j, path, {"kind", "lambda"});
        const json* lam = find(j, "lambda");
        if (!lam) fail(path, "exp_poly needs 'lambda'");
        return densities::ExpPoly{get_number_array(*lam, path + ".lambda")};
    }
    if (kind == "mixture") return parse_mixture(j, path);
    fail(path + ".kind", "unknown density kind '" + kind + "'");
}

filter::ProcessNoise parse_process_noise(const json& j, const std::string& path) {
    if (j.is_object() && find(j, "kind") &&
        get_string(*find(j, "kind"), path + ".kind") == "discrete") {
        check_keys(j, path, {"kind", "atoms", "probabilities"});
        const json* a = find(j, "atoms");
        const json* p = find(j, "probabilities");
        if (!a || !p) fail(path, "discrete noise needs 'atoms' and 'probabilities'");
        densities::DiscreteNoise n;
        n.atoms = get_number_array(*a, path + ".atoms");
        n.probabilities = get_number_array(*p, path + ".probabilities");
        if (n.atoms.size() != n.probabilities.size())
            fail(path, "atoms and probabilities differ in length");
        double total = 0.0;
        for (double q : n.probabilities) {
            if (!(q > 0.0)) fail(path + ".probabilities", "must be positive");
            total += q;
        }
        if (std::abs(total - 1.0) > 1e-12)
            fail(path + ".probabilities", "must sum to 1 within 1e-12");
        return n;
    }
    return parse_density(j, path);
}

std::vector<double> broadcastable(const json& j, const std::string& path) {
    if (j.is_number()) return {j.get<double>()};
    return get_number_array(j, path);
}

quadrature::QuadratureConfig parse_quadrature(const json& j, const std::string& path) {
    check_keys(j, path, {"abs_tol", "rel_tol", "max_intervals"});
    quadrature::QuadratureConfig q;
    q.abs_tol = get_number(j, path, "abs_tol", q.abs_tol);
    q.rel_tol = get_number(j, path, "rel_tol", q.rel_tol);
    q.max_intervals = get_int(j, path, "max_intervals", q.max_intervals);
    return q;
}

surrogate::SolverConfig parse_solver(const json& j, const std::string& path) {
    check_keys(j, path,
               {"grad_tol", "accept_tol", "max_iterations", "max_damping_steps",
                "damping_grow", "damping_shrink", "damping_floor", "jitter"});
    surrogate::SolverConfig s;
    s.grad_tol = get_number(j, path, "grad_tol", s.grad_tol);
    s.accept_tol = get_number(j, path, "accept_tol", s.accept_tol);
    s.max_iterations = get_int(j, path, "max_iterations", s.max_iterations);
    s.max_damping_steps = get_int(j, path, "max_damping_steps", s.max_damping_steps);
    s.damping_grow = get_number(j, path, "damping_grow", s.damping_grow);
    s.damping_shrink = get_number(j, path, "damping_shrink", s.damping_shrink);
    s.damping_floor = get_number(j, path, "damping_floor", s.damping_floor);
    s.jitter = get_number(j, path, "jitter", s.jitter);
    return s;
}

diagnostics::MaxentConfig parse_maxent(const json& j, const std::string& path) {
    check_keys(j, path,
               {"grad_tol", "accept_tol", "require_convergence", "max_iterations",
                "max_damping_steps", "damping_grow", "damping_shrink",
                "damping_floor", "jitter", "dip_floor"});
    diagnostics::MaxentConfig m;
    m.grad_tol = get_number(j, path, "grad_tol", m.grad_tol);
    m.accept_tol = get_number(j, path, "accept_tol", m.accept_tol);
    m.require_convergence =
        get_bool(j, path, "require_convergence", m.require_convergence);
    m.max_iterations = get_int(j, path, "max_iterations", m.max_iterations);
    m.max_damping_steps = get_int(j, path, "max_damping_steps", m.max_damping_steps);
    m.damping_grow = get_number(j, path, "damping_grow", m.damping_grow);
    m.damping_shrink = get_number(j, path, "damping_shrink", m.damping_shrink);
    m.damping_floor = get_number(j, path, "damping_floor", m.damping_floor);
    m.jitter = get_number(j, path, "jitter", m.jitter);
    m.dip_floor = get_number(j, path, "dip_floor", m.dip_floor);
    return m;
}

diagnostics::TvConfig parse_tv(const json& j, const std::string& path) {
    check_keys(j, path, {"initial_points", "max_refinements", "stability_tol"});
    diagnostics::TvConfig t;
    t.initial_points = get_int(j, path, "initial_points", t.initial_points);
    t.max_refinements = get_int(j, path, "max_refinements", t.max_refinements);
    t.stability_tol = get_number(j, path, "stability_tol", t.stability_tol);
    return t;
}

FitScenario parse_fit(const json& j, const std::string& path, int order,
                      const quadrature::QuadratureConfig& qcfg) {
    check_keys(j, path,
               {"target", "prior", "prior_c", "heavy_tail", "heavy_tail_scale",
                "truncation_radius", "density_points"});
    FitScenario fit;
    const json* target = find(j, "target");
    if (!target) fail(path, "fit scenario needs a 'target'");

    if (const json* radius = find(j, "truncation_radius")) {
        fit.truncation_radius = get_number(*radius, path + ".truncation_radius");
        if (!(*fit.truncation_radius > 0.0))
            fail(path + ".truncation_radius", "must be > 0");
    }

    if (target->is_object() && find(*target, "moments")) {
        check_keys(*target, path + ".target", {"moments"});
        fit.target = moments::MomentSequence{
            get_number_array(*find(*target, "moments"), path + ".target.moments")};
    } else {
        fit.truth = parse_density(*target, path + ".target");
        fit.target = moments::MomentSequence{
            fit.truncation_radius
                ? densities::truncated_moments(*fit.truth, order,
                                               *fit.truncation_radius, qcfg)
                : densities::moments(*fit.truth, order, qcfg)};
    }
    if (fit.target.order() != order)
        fail(path + ".target", "moment sequence order differs from 'order'");
    if (!fit.target.hankel_pd())
        fail(path + ".target", "moment sequence is not positive definite");

    if (const json* prior = find(j, "prior")) {
        if (!(prior->is_string() &&
              get_string(*prior, path + ".prior") == "auto"))
            fit.explicit_prior = parse_density(*prior, path + ".prior");
    }
    fit.prior_c = get_number(j, path, "prior_c", fit.prior_c);
    fit.heavy_tail_prior = get_bool(j, path, "heavy_tail", fit.heavy_tail_prior);
    fit.heavy_tail_scale =
        get_number(j, path, "heavy_tail_scale", fit.heavy_tail_scale);
    fit.density_points = get_int(j, path, "density_points", fit.density_points);
    if (fit.density_points < 2) fail(path + ".density_points", "must be >= 2");
    return fit;
}

OracleOptions parse_oracle(const json& j, const std::string& path) {
    check_keys(j, path, {"points", "window", "half_width_sds", "max_leak"});
    OracleOptions o;
    o.points = get_int(j, path, "points", o.points);
    if (o.points < 3) fail(path + ".points", "must be >= 3");
    if (const json* w = find(j, "window")) {
        const auto v = get_number_array(*w, path + ".window");
        if (v.size() != 2 || !(v[0] < v[1]))
            fail(path + ".window", "expected [lo, hi] with lo < hi");
        o.window = std::make_pair(v[0], v[1]);
    }
    o.half_width_sds = get_number(j, path, "half_width_sds", o.half_width_sds);
    o.max_leak = get_number(j, path, "max_leak", o.max_leak);
    return o;
}

FilterScenario parse_filter(const json& j, const std::string& path, int order,
                            const quadrature::QuadratureConfig& qcfg,
                            const surrogate::SolverConfig& scfg) {
    check_keys(j, path,
               {"system", "init", "observations", "prior_c", "heavy_tail",
                "heavy_tail_scale", "oracle"});
    FilterScenario fs;

    const json* sys_j = find(j, "system");
    if (!sys_j) fail(path, "filter scenario needs a 'system'");
    check_keys(*sys_j, path + ".system",
               {"f", "h", "process_noise", "obs_noise", "horizon"});
    const json* f = find(*sys_j, "f");
    const json* h = find(*sys_j, "h");
    const json* pn = find(*sys_j, "process_noise");
    const json* on = find(*sys_j, "obs_noise");
    const json* horizon = find(*sys_j, "horizon");
    if (!f || !h || !pn || !on || !horizon)
        fail(path + ".system", "needs f, h, process_noise, obs_noise, horizon");
    fs.system.f = broadcastable(*f, path + ".system.f");
    fs.system.h = broadcastable(*h, path + ".system.h");
    if (pn->is_array()) {
        for (size_t i = 0; i < pn->size(); ++i)
            fs.system.process_noise.push_back(parse_process_noise(
                (*pn)[i], path + ".system.process_noise[" + std::to_string(i) + "]"));
    } else {
        fs.system.process_noise.push_back(
            parse_process_noise(*pn, path + ".system.process_noise"));
    }
    if (on->is_array()) {
        for (size_t i = 0; i < on->size(); ++i)
            fs.system.obs_noise.push_back(parse_density(
                (*on)[i], path + ".system.obs_noise[" + std::to_string(i) + "]"));
    } else {
        fs.system.obs_noise.push_back(
            parse_density(*on, path + ".system.obs_noise"));
    }
    fs.system.horizon = get_int(*horizon, path + ".system.horizon");
    if (fs.system.horizon < 0) fail(path + ".system.horizon", "must be >= 0");

    const json* init = find(j, "init");
    if (!init) fail(path, "filter scenario needs an 'init'");
    if (init->is_object() && find(*init, "moments")) {
        check_keys(*init, path + ".init", {"moments"});
        fs.init_moments = moments::MomentSequence{
            get_number_array(*find(*init, "moments"), path + ".init.moments")};
    } else {
        fs.init_density = parse_density(*init, path + ".init");
    }

    if (const json* obs = find(j, "observations")) {
        fs.observations = obs->empty() && obs->is_array()
                              ? std::vector<double>{}
                              : get_number_array(*obs, path + ".observations");
        if (static_cast<int>(fs.observations->size()) > fs.system.horizon)
            fail(path + ".observations", "longer than system horizon");
    }

    fs.filter_cfg.order = order;
    fs.filter_cfg.quad = qcfg;
    fs.filter_cfg.solver = scfg;
    fs.filter_cfg.prior_c = get_number(j, path, "prior_c", fs.filter_cfg.prior_c);
    fs.filter_cfg.heavy_tail_prior =
        get_bool(j, path, "heavy_tail", fs.filter_cfg.heavy_tail_prior);
    fs.filter_cfg.heavy_tail_scale =
        get_number(j, path, "heavy_tail_scale", fs.filter_cfg.heavy_tail_scale);

    if (const json* o = find(j, "oracle"))
        fs.oracle = parse_oracle(*o, path + ".oracle");
    return fs;
}

}  // namespace

Scenario load_scenario(const std::filesystem::path& config_path) {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("cannot open config file " + config_path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(config_path.string() + ": " + e.what());
    }

    check_keys(j, "$",
               {"name", "mode", "order", "seed", "output_dir", "quadrature",
                "solver", "maxent", "tv", "fit", "filter"});
    Scenario sc;
    const json* name = find(j, "name");
    if (!name) fail("$", "scenario needs a 'name'");
    sc.name = get_string(*name, "$.name");
    if (sc.name.empty() || sc.name.find('/') != std::string::npos)
        fail("$.name", "must be a non-empty path-safe token");
    if (const json* mode = find(j, "mode")) sc.mode = get_string(*mode, "$.mode");
    const json* order = find(j, "order");
    if (!order) fail("$", "scenario needs an 'order'");
    sc.order = get_int(*order, "$.order");
    if (sc.order < 2 || sc.order > 16 || sc.order % 2 != 0)
        fail("$.order", "must be even, between 2 and 16");
    if (const json* seed = find(j, "seed")) {
        if (!seed->is_number_unsigned()) fail("$.seed", "expected a nonnegative integer");
        sc.seed = seed->get<std::uint64_t>();
    }
    if (const json* od = find(j, "output_dir"))
        sc.output_dir = get_string(*od, "$.output_dir");
    if (const json* q = find(j, "quadrature")) sc.quad = parse_quadrature(*q, "$.quadrature");
    if (const json* s = find(j, "solver")) sc.solver = parse_solver(*s, "$.solver");
    if (const json* m = find(j, "maxent")) sc.maxent = parse_maxent(*m, "$.maxent");
    if (const json* t = find(j, "tv")) sc.tv = parse_tv(*t, "$.tv");
    if (const json* fit = find(j, "fit"))
        sc.fit = parse_fit(*fit, "$.fit", sc.order, sc.quad);
    if (const json* filt = find(j, "filter"))
        sc.filter = parse_filter(*filt, "$.filter", sc.order, sc.quad, sc.solver);
    return sc;
}

// ---------------------------------------------------------------------------
// Output helpers.

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_text(const std::filesystem::path& file, const std::string& text) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw ConfigError("cannot write output file " + file.string());
    out << text;
}

json density_to_json(const densities::DensityModel& m);

json mixture_to_json(const densities::Mixture& mix) {
    json j{{"kind", "mixture"}};
    j["weights"] = mix.weights;
    j["components"] = json::array();
    for (const auto& c : mix.components) j["components"].push_back(density_to_json(c));
    return j;
}

json density_to_json(const densities::DensityModel& m) {
    using namespace densities;
    return std::visit(
        [](const auto& alt) -> json {
            using T = std::decay_t<decltype(alt)>;
            if constexpr (std::is_same_v<T, Gaussian>)
                return {{"kind", "gaussian"}, {"mean", alt.mean}, {"stddev", alt.stddev}};
            else if constexpr (std::is_same_v<T, Laplace>)
                return {{"kind", "laplace"}, {"loc", alt.loc}, {"scale", alt.scale}};
            else if constexpr (std::is_same_v<T, Cauchy>)
                return {{"kind", "cauchy"}, {"loc", alt.loc}, {"scale", alt.scale}};
            else if constexpr (std::is_same_v<T, StudentT>)
                return {{"kind", "student_t"},
                        {"dof", alt.dof},
                        {"loc", alt.loc},
                        {"scale", alt.scale}};
            else if constexpr (std::is_same_v<T, Mixture>)
                return mixture_to_json(alt);
            else if constexpr (std::is_same_v<T, RationalSurrogate>)
                return {{"kind", "rational_surrogate"},
                        {"lambda", alt.lambda},
                        {"log_norm", alt.log_norm},
                        {"prior", density_to_json(*alt.prior)}};
            else
                return {{"kind", "exp_poly"}, {"lambda", alt.lambda}};
        },
        m.v);
}

const char* status_name(surrogate::SolveStatus s) {
    return s == surrogate::SolveStatus::Converged ? "converged" : "stalled";
}

struct FitArtifacts {
    densities::DensityModel prior;
    densities::DensityModel surrogate_density;
    surrogate::SurrogateResult fit;
    diagnostics::MaxentResult maxent;
    diagnostics::BoundReport bound;
};

FitArtifacts run_fit_core(const Scenario& sc) {
    const FitScenario& f = *sc.fit;
    densities::DensityModel prior =
        f.explicit_prior
            ? *f.explicit_prior
            : (f.heavy_tail_prior
                   ? filter::choose_prior_heavy(f.target, f.heavy_tail_scale)
                   : filter::choose_prior(f.target, f.prior_c));
    auto fit = surrogate::solve({prior, f.target}, sc.quad, sc.solver);
    auto surrogate_density = surrogate::make_density(prior, fit);
    auto maxent = diagnostics::fit_maxent(f.target, sc.quad, sc.maxent);
    densities::DensityModel maxent_density{maxent.density};

    diagnostics::BoundReport bound = diagnostics::tv_upper_bound(
        surrogate_density, maxent_density, f.truth ? &*f.truth : nullptr, sc.quad);
    if (f.truth)
        bound.measured_tv =
            diagnostics::total_variation(surrogate_density, *f.truth, sc.quad, sc.tv);

    return FitArtifacts{std::move(prior), std::move(surrogate_density),
                        std::move(fit), std::move(maxent), bound};
}

json bound_to_json(const diagnostics::BoundReport& b, bool heavy_tail_truth) {
    json j{{"entropy_surrogate", b.entropy_surrogate},
           {"entropy_maxent", b.entropy_maxent},
           {"bound_value", b.bound_value},
           {"heavy_tail_truth", heavy_tail_truth}};
    if (b.entropy_truth) j["entropy_truth"] = *b.entropy_truth;
    if (b.measured_tv) j["measured_tv"] = *b.measured_tv;
    return j;
}

bool truth_is_heavy(const FitScenario& f) {
    return f.truth &&
           densities::tail(*f.truth).cls == densities::TailClass::Polynomial;
}

void write_density_csv(const std::filesystem::path& dir, const Scenario& sc,
                       const FitArtifacts& art, bool plot_data) {
    const FitScenario& f = *sc.fit;
    densities::DensityModel maxent_density{art.maxent.density};

    auto w = densities::mass_window(art.surrogate_density, 1e-9, sc.quad);
    const auto wm = densities::mass_window(maxent_density, 1e-9, sc.quad);
    w.first = std::min(w.first, wm.first);
    w.second = std::max(w.second, wm.second);
    if (f.truth) {
        // Heavy-tail truths have enormous 1e-9 windows; clip to the radius
        // actually fitted instead.
        if (f.truncation_radius) {
            w.first = std::min(w.first, -*f.truncation_radius);
            w.second = std::max(w.second, *f.truncation_radius);
        } else {
            const auto wt = densities::mass_window(*f.truth, 1e-9, sc.quad);
            w.first = std::min(w.first, wt.first);
            w.second = std::max(w.second, wt.second);
        }
    }

    std::ostringstream csv, plot;
    csv << "x,truth,surrogate,maxent\n";
    plot << "series,x,value\n";
    const int n = f.density_points;
    for (int i = 0; i < n; ++i) {
        const double x = w.first + (w.second - w.first) * i / (n - 1);
        const double st = f.truth ? densities::pdf(*f.truth, x)
                                  : std::numeric_limits<double>::quiet_NaN();
        const double ss = densities::pdf(art.surrogate_density, x);
        const double sm = densities::pdf(maxent_density, x);
        csv << fmt17(x) << ',' << fmt17(st) << ',' << fmt17(ss) << ','
            << fmt17(sm) << '\n';
        if (plot_data) {
            if (f.truth)
                plot << "truth," << fmt17(x) << ',' << fmt17(st) << '\n';
            plot << "surrogate," << fmt17(x) << ',' << fmt17(ss) << '\n'
                 << "maxent," << fmt17(x) << ',' << fmt17(sm) << '\n';
        }
    }
    write_text(dir / "density.csv", csv.str());
    if (plot_data) write_text(dir / "plot.csv", plot.str());
}

int run_fit(const Scenario& sc, const std::filesystem::path& dir,
            const RunOptions& opts, bool bound_only) {
    if (!sc.fit) throw ConfigError("config has no 'fit' block");
    FitArtifacts art = run_fit_core(sc);

    json summary{
        {"name", sc.name},
        {"mode", bound_only ? "bound" : "fit"},
        {"order", sc.order},
        {"prior", density_to_json(art.prior)},
        {"lambda", art.fit.lambda},
        {"log_norm", art.fit.log_norm},
        {"solver",
         {{"status", status_name(art.fit.status)},
          {"residual", art.fit.residual},
          {"iterations", art.fit.iterations}}},
        {"maxent",
         {{"status", status_name(art.maxent.status)},
          {"residual", art.maxent.residual},
          {"iterations", art.maxent.iterations},
          {"lambda", art.maxent.density.lambda}}},
        {"target_moments", sc.fit->target.sigma},
        {"bound", bound_to_json(art.bound, truth_is_heavy(*sc.fit))}};
    if (art.bound.measured_tv) summary["tv_to_truth"] = *art.bound.measured_tv;

    if (bound_only) {
        write_text(dir / "bound.json", summary.dump(2) + "\n");
    } else {
        write_text(dir / "summary.json", summary.dump(2) + "\n");
        write_density_csv(dir, sc, art, opts.plot_data);
    }
    return 0;
}

// Grid-oracle state threaded through the filter run.
struct OracleTrack {
    bool enabled = false;
    oracle::GridDensity grid;
    std::vector<double> tv;                        // per step
    std::vector<moments::MomentSequence> moments;  // per step, order 2n
};

int run_filter(const Scenario& sc, const std::filesystem::path& dir,
               const RunOptions& opts, bool force_oracle) {
    if (!sc.filter) throw ConfigError("config has no 'filter' block");
    const FilterScenario& fs = *sc.filter;
    const filter::FilterConfig& fcfg = fs.filter_cfg;

    // Observations: replayed from the config, or simulated from the seed.
    std::uint64_t seed = opts.seed_override.value_or(sc.seed);
    bool simulated = false;
    std::vector<double> obs;
    filter::Simulation sim;
    if (fs.observations) {
        obs = *fs.observations;
    } else {
        if (!fs.init_density)
            throw ConfigError(
                "simulating observations needs a density 'init' to draw x_0");
        sim = filter::simulate(fs.system, *fs.init_density, seed);
        obs = sim.observations;
        simulated = true;
    }

    filter::FilterState init =
        fs.init_moments ? filter::init_state(*fs.init_moments, fcfg)
                        : filter::init_state(*fs.init_density, fcfg);

    OracleTrack track;
    track.enabled = opts.oracle || force_oracle;
    if (track.enabled) {
        if (!fs.init_density)
            throw ConfigError("the grid oracle needs a density 'init'");
        double lo, hi;
        if (fs.oracle.window) {
            lo = fs.oracle.window->first;
            hi = fs.oracle.window->second;
        } else {
            const double m = init.pred_moments.mean();
            const double sd = std::sqrt(init.pred_moments.variance());
            lo = m - fs.oracle.half_width_sds * sd;
            hi = m + fs.oracle.half_width_sds * sd;
        }
        track.grid =
            oracle::to_grid(*fs.init_density, lo, hi, fs.oracle.points, false,
                            sc.quad)
                .grid;
    }

    auto states = filter::run(
        fs.system, init, obs, fcfg, [&](const filter::FilterState& st) {
            if (!track.enabled || st.t == 0) return;
            const int t = st.t - 1;  // observation index driving this state
            track.grid = oracle::grid_measurement_update(
                track.grid, fs.system.obs_noise_at(t), obs[t],
                fs.system.h_at(t));
            track.grid = oracle::grid_time_update(
                track.grid, fs.system.process_noise_at(t), fs.system.f_at(t),
                fs.oracle.max_leak);
            track.moments.push_back(oracle::grid_moments(track.grid, sc.order));
            track.tv.push_back(diagnostics::total_variation(
                st.prediction, track.grid, sc.quad, sc.tv));
        });

    // Per-step CSV: one row per observation, describing the post-step
    // prediction (the density carried to the next time).
    std::ostringstream csv;
    csv << "t,y";
    for (int k = 0; k <= sc.order; ++k) csv << ",sigma_" << k;
    if (track.enabled) csv << ",tv_oracle";
    csv << '\n';
    for (size_t i = 0; i < obs.size(); ++i) {
        const auto& st = states[i + 1];
        csv << i << ',' << fmt17(obs[i]);
        for (int k = 0; k <= sc.order; ++k) csv << ',' << fmt17(st.pred_moments[k]);
        if (track.enabled) csv << ',' << fmt17(track.tv[i]);
        csv << '\n';
    }
    write_text(dir / "steps.csv", csv.str());

    json steps = json::array();
    double max_tv = 0.0;
    double max_gap = 0.0;
    for (size_t i = 0; i < obs.size(); ++i) {
        const auto& st = states[i + 1];
        json row{{"t", i},
                 {"y", obs[i]},
                 {"normalizer", st.diag.normalizer},
                 {"refit", st.diag.refit}};
        if (st.diag.refit) {
            row["solver"] = {{"status", status_name(st.diag.solver_status)},
                             {"residual", st.diag.solver_residual},
                             {"iterations", st.diag.solver_iterations}};
        }
        if (track.enabled) {
            row["tv_oracle"] = track.tv[i];
            max_tv = std::max(max_tv, track.tv[i]);
            double gap = 0.0;
            for (int k = 1; k <= sc.order; ++k)
                gap = std::max(gap,
                               std::abs(st.pred_moments[k] - track.moments[i][k]) /
                                   std::max(1.0, std::abs(track.moments[i][k])));
            row["oracle_moment_gap"] = gap;
            max_gap = std::max(max_gap, gap);
        }
        steps.push_back(std::move(row));
    }

    json summary{{"name", sc.name},
                 {"mode", force_oracle ? "compare" : "filter"},
                 {"order", sc.order},
                 {"steps", std::move(steps)},
                 {"final_moments", states.back().pred_moments.sigma},
                 {"observations", simulated ? "simulated" : "replayed"}};
    if (simulated) summary["seed"] = seed;
    if (track.enabled) {
        summary["max_tv_oracle"] = max_tv;
        summary["max_oracle_moment_gap"] = max_gap;
    }
    write_text(dir / "summary.json", summary.dump(2) + "\n");

    if (opts.plot_data) {
        std::ostringstream plot;
        plot << "series,t,value\n";
        for (size_t i = 0; i < obs.size(); ++i) {
            const auto& st = states[i + 1];
            plot << "observation," << i << ',' << fmt17(obs[i]) << '\n';
            if (simulated)
                plot << "state," << i << ',' << fmt17(sim.states[i]) << '\n';
            plot << "pred_mean," << i << ',' << fmt17(st.pred_moments.mean())
                 << '\n'
                 << "pred_variance," << i << ','
                 << fmt17(st.pred_moments.variance()) << '\n';
            if (track.enabled) {
                plot << "oracle_mean," << i << ',' << fmt17(track.moments[i].mean())
                     << '\n'
                     << "tv_oracle," << i << ',' << fmt17(track.tv[i]) << '\n';
            }
        }
        write_text(dir / "plot.csv", plot.str());
    }
    return 0;
}

int classify_and_record(const std::filesystem::path& dir, const char* kind,
                        const std::string& message, int code) {
    std::cerr << "error (" << kind << "): " << message << "\n";
    json err{{"error", kind}, {"message", message}, {"exit_code", code}};
    std::error_code ignore;
    std::filesystem::create_directories(dir, ignore);
    std::ofstream out(dir / "error.json", std::ios::binary);
    if (out) out << err.dump(2) << "\n";
    return code;
}

}  // namespace

int run_scenario(const std::string& command,
                 const std::filesystem::path& config_path,
                 const RunOptions& opts) {
    std::filesystem::path dir = opts.out_dir.value_or("out");
    try {
        Scenario sc = load_scenario(config_path);
        if (sc.mode && *sc.mode != command)
            throw ConfigError("config declares mode '" + *sc.mode +
                              "' but was invoked as '" + command + "'");
        const std::filesystem::path root = opts.out_dir.value_or(
            std::filesystem::path(sc.output_dir.value_or("out")));
        dir = root / sc.name;
        std::filesystem::create_directories(dir);

        if (command == "fit") return run_fit(sc, dir, opts, false);
        if (command == "bound") return run_fit(sc, dir, opts, true);
        if (command == "filter") return run_filter(sc, dir, opts, false);
        if (command == "compare") return run_filter(sc, dir, opts, true);
        throw ConfigError("unknown command '" + command + "'");
    } catch (const ConfigError& e) {
        return classify_and_record(dir, "config", e.what(), 2);
    } catch (const WindowError& e) {
        return classify_and_record(dir, "window", e.what(), 2);
    } catch (const SolverError& e) {
        return classify_and_record(dir, "solver", e.what(), 3);
    } catch (const ConsistencyError& e) {
        return classify_and_record(dir, "consistency", e.what(), 3);
    } catch (const DegenerateObservationError& e) {
        return classify_and_record(dir, "degenerate_observation", e.what(), 4);
    } catch (const QuadratureError& e) {
        return classify_and_record(dir, "quadrature", e.what(), 5);
    } catch (const std::exception& e) {
        return classify_and_record(dir, "internal", e.what(), 1);
    }
}

}  // namespace msf::cli
