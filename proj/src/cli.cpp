#include "mixdecon/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <variant>

#include <boost/version.hpp>

#include "CLI11.hpp"
#include "json.hpp"
#include "mixdecon/deconvolution.hpp"
#include "mixdecon/errors.hpp"
#include "mixdecon/mixture_estimator.hpp"
#include "mixdecon/rate_lab.hpp"
#include "mixdecon/spec_string.hpp"

namespace mixdecon {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr const char* kVersion = "1.0.0";

std::string fmt(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// A domain error attributed to one command-line flag.
class FlagError : public DomainError {
public:
    FlagError(const std::string& flag, const std::string& what) : DomainError(flag + ": " + what) {}
};

template <class F>
auto flagged(const std::string& flag, F&& f) {
    try {
        return f();
    } catch (const FlagError&) {
        throw;
    } catch (const DomainError& e) {
        throw FlagError(flag, e.what());
    } catch (const StructuralError& e) {
        throw FlagError(flag, e.what());
    }
}

NormOrder parse_norm(double u) {
    return flagged("--u", [&] { return std::isinf(u) ? NormOrder::infinity() : NormOrder(u); });
}

struct Globals {
    std::uint64_t seed = 1;
    std::size_t grid_nodes = 1u << 14;
    double half_width = 16.0;
    std::string out_dir;
    std::size_t threads = 0;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* threads_opt = nullptr;
};

struct Context {
    Globals g;
    std::vector<std::string> argv;
    std::ostream* out = nullptr;
    std::string command;
};

GridBox make_grid(const Globals& g, std::size_t d) {
    return flagged("--grid-nodes", [&] { return GridBox::uniform(d, -g.half_width, g.half_width, g.grid_nodes); });
}

// Output names must stay inside --out-dir.
std::string out_path(const Context& ctx, const std::string& flag, const std::string& name) {
    if (name.empty() || name.find('/') != std::string::npos || name.find('\\') != std::string::npos ||
        name == "." || name == "..")
        throw FlagError(flag, "output '" + name + "' must be a plain file name inside --out-dir");
    return (fs::path(ctx.g.out_dir) / name).string();
}

void ensure_out_dir(const Context& ctx) {
    std::error_code ec;
    fs::create_directories(ctx.g.out_dir, ec);
    if (ec || !fs::is_directory(ctx.g.out_dir))
        throw FlagError("--out-dir", "cannot create directory '" + ctx.g.out_dir + "'");
}

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DomainError("cannot write '" + path + "'");
    return os;
}

json versions() {
    return json{{"mixdecon", kVersion},
                {"compiler", __VERSION__},
                {"boost", BOOST_LIB_VERSION},
                {"fft", fft_backend_version()},
                {"cli11", CLI11_VERSION}};
}

void write_manifest(const Context& ctx, const json& config, const std::vector<std::string>& outputs,
                    const json& results) {
    json m;
    m["command"] = ctx.command;
    m["argv"] = ctx.argv;
    m["seed"] = ctx.g.seed;
    m["grid_nodes"] = ctx.g.grid_nodes;
    m["grid_half_width"] = ctx.g.half_width;
    m["config"] = config;
    m["versions"] = versions();
    m["outputs"] = outputs;
    m["results"] = results;
    std::string name = ctx.command;
    std::replace(name.begin(), name.end(), ' ', '_');
    auto os = open_out(out_path(ctx, "--out-dir", name + "_manifest.json"));
    os << m.dump(2) << '\n';
}

std::string bound_header() {
    return "b,m,v_n,M_n,a_n,psi_star_l2,T,S,c_hat,c_hat_l1,c_lhs,c_left_measured,approx_term,c_right,"
           "transfer_term,rhs,implied_bound,error,smoothed_diff,chain_regularization,chain_transfer,young_bound,"
           "degenerate_regions,chain_ok,young_ok,c_lhs_positive,c_lhs_ge_half,finite";
}

std::string bound_row(const BoundReport& r) {
    std::ostringstream os;
    const auto b = [](bool v) { return v ? "true" : "false"; };
    for (double v : {r.b, r.m, r.v_n, r.M_n, r.a_n, r.psi_star_l2, r.T, r.S, r.c_hat, r.c_hat_l1, r.c_lhs,
                     r.c_left_measured, r.approx_term, r.c_right, r.transfer_term, r.rhs, r.implied_bound,
                     r.error, r.smoothed_diff, r.chain_regularization, r.chain_transfer, r.young_bound})
        os << fmt(v) << ',';
    os << r.degenerate_regions << ',' << b(r.chain_ok) << ',' << b(r.young_ok) << ',' << b(r.c_lhs_positive)
       << ',' << b(r.c_lhs_ge_half) << ',' << b(r.finite);
    return os.str();
}

json bound_json(const BoundReport& r) {
    return json{{"b", r.b}, {"v_n", r.v_n}, {"M_n", r.M_n}, {"psi_star_l2", r.psi_star_l2}, {"T", r.T},
                {"S", r.S}, {"c_lhs", std::isfinite(r.c_lhs) ? json(r.c_lhs) : json(fmt(r.c_lhs))},
                {"c_lhs_ge_half", r.c_lhs_ge_half}};
}

// ---------------------------------------------------------------- commands

struct KernelArgs {
    std::size_t d = 1;
    double M = 2.0, rho = 0.5, tol = 1e-3;
    int leg = 0, qmax = 6;
};

void run_kernel_check(Context& ctx, const KernelArgs& a) {
    const int leg = a.leg > 0 ? a.leg : a.qmax + 3;
    const FlatTopKernel K = flagged("--M/--rho/--leg", [&] { return build_kernel(a.d, a.M, a.rho, leg); });
    const MomentReport rep = flagged("--qmax", [&] { return verify_moments(K, a.qmax, a.tol); });
    std::ostringstream csv;
    csv << "moment_index,value,pass\n";
    csv << MultiIndex::zero(a.d).label() << ',' << fmt(rep.mass) << ',' << (rep.mass_pass ? "true" : "false") << '\n';
    for (const auto& m : rep.moments) csv << m.index << ',' << fmt(m.value) << ',' << (m.pass ? "true" : "false") << '\n';
    *ctx.out << csv.str();
    ensure_out_dir(ctx);
    auto os = open_out(out_path(ctx, "--out-dir", "kernel_check.csv"));
    os << csv.str();
    write_manifest(ctx, json{{"d", a.d}, {"M", a.M}, {"rho", a.rho}, {"leg", leg}, {"qmax", a.qmax}, {"tol", a.tol}},
                   {"kernel_check.csv"},
                   json{{"all_pass", rep.all_pass()}, {"absolute_moment", fmt(rep.absolute_moment)},
                        {"decay_exponent", rep.decay_exponent}});
}

struct EstimateArgs {
    std::string model = "gaussian", target = "bump";
    std::size_t d = 1, n = 4000, nodes = 40, max_iter = 200000;
    double width = 0.0;
    std::vector<std::string> out{"f_hat.csv", "p_hat.csv"};
};

void run_estimate(Context& ctx, const EstimateArgs& a) {
    if (a.out.size() != 2) throw FlagError("--out", "expects two file names: f_hat p_hat");
    const NoiseModel h = flagged("--model", [&] { return parse_noise_model(a.model, a.d); });
    const MixingDensity p = flagged("--target", [&] { return parse_target(a.target, a.d); });
    if (a.n == 0) throw FlagError("--n", "sample size must be positive");
    const GridBox space = make_grid(ctx.g, a.d);
    const std::string f_path = out_path(ctx, "--out", a.out[0]), p_path = out_path(ctx, "--out", a.out[1]);
    const auto X = sample_mixture(p, h, a.n, ctx.g.seed);
    SieveConfig cfg;
    cfg.nodes = a.nodes;
    cfg.width = a.width;
    cfg.max_iter = a.max_iter;
    std::tie(cfg.lo, cfg.hi) = p.support_1d();
    const SieveFit fit = flagged("--nodes", [&] { return fit_minimum_distance(X, h, cfg, space); });
    const GridFunction f_p = apply_noise(p.sample(space), h);
    const double a_n = measure_quality(fit.f_hat, f_p, NormOrder(1.0)).a_n;
    ensure_out_dir(ctx);
    {
        auto os = open_out(f_path);
        write_csv(fit.f_hat, os);
    }
    {
        auto os = open_out(p_path);
        write_csv(fit.p_hat, os);
    }
    *ctx.out << "n=" << a.n << " atoms=" << fit.mixing.atoms() << " iterations=" << fit.iterations
             << " objective=" << fmt(fit.objective) << " a_n(L1)=" << fmt(a_n) << '\n';
    write_manifest(ctx,
                   json{{"model", h.spec()}, {"target", p.spec()}, {"d", a.d}, {"n", a.n}, {"nodes", a.nodes},
                        {"max_iter", a.max_iter}, {"width", fit.mixing.width()}},
                   a.out,
                   json{{"iterations", fit.iterations}, {"objective", fit.objective}, {"a_n_l1", a_n},
                        {"mass", fit.mixing.total_weight()}});
}

struct DemoArgs {
    std::string model = "uniform(m=1)", target = "spline(qtilde=2)", shape = "bandlimited_bump";
    double a_n = 1e-3, xi = 0.5, u = 2.0;
    int leg = 1;
    std::vector<std::string> out{"report.csv", "estimate.csv"};
};

InjectionShape parse_shape(const std::string& s) {
    if (s == "bandlimited_bump") return InjectionShape::bandlimited_bump;
    if (s == "random_phase") return InjectionShape::random_phase;
    throw FlagError("--shape", "expected bandlimited_bump or random_phase");
}

void run_deconv_demo(Context& ctx, const DemoArgs& a) {
    if (a.out.size() != 2) throw FlagError("--out", "expects two file names: report estimate");
    const NoiseModel h = flagged("--model", [&] { return parse_noise_model(a.model, 1); });
    if (h.dim() != 1) throw FlagError("--model", "this command is one-dimensional (drop d=)");
    const MixingDensity p = flagged("--target", [&] { return parse_target(a.target, 1); });
    const NormOrder u = parse_norm(a.u);
    const InjectionShape shape = parse_shape(a.shape);
    const FlatTopKernel K = flagged("--leg", [&] { return build_kernel(1, 2.0, 0.5, a.leg); });
    const GridBox space = make_grid(ctx.g, 1);
    const std::string r_path = out_path(ctx, "--out", a.out[0]), e_path = out_path(ctx, "--out", a.out[1]);
    const GridFunction pg = p.sample(space);
    const BandwidthPlan plan =
        flagged("--a_n", [&] { return select_bandwidth(h, a.a_n, p.smoothness(), 1, a.xi); });
    const Injection inj = flagged("--a_n", [&] { return oracle_inject(pg, h, a.a_n, u, shape, ctx.g.seed); });
    const RegularizedTransfer tr = build_transfer(h, plan);
    const BoundReport rep = bound_report(inj.p_hat, pg, inj.f_hat, inj.f_p, tr, K, p.smoothness(), u);
    const GridFunction est = smoothed_estimate(inj.p_hat, plan, K);
    ensure_out_dir(ctx);
    {
        auto os = open_out(r_path);
        os << bound_header() << '\n' << bound_row(rep) << '\n';
    }
    {
        auto os = open_out(e_path);
        write_csv(est, os);
    }
    *ctx.out << bound_header() << '\n' << bound_row(rep) << '\n';
    write_manifest(ctx,
                   json{{"model", h.spec()}, {"target", p.spec()}, {"a_n", a.a_n}, {"xi", a.xi}, {"u", fmt(a.u)},
                        {"shape", a.shape}, {"leg", a.leg}},
                   a.out, bound_json(rep));
}

struct BoundsArgs {
    std::string model = "uniform(m=1)", target = "spline(qtilde=2)", plan_grid;
    std::vector<double> b;
    double xi = 0.5, a_n = 1e-3;
    int leg = 1;
    std::string out = "bounds.csv";
};

void run_bounds_report(Context& ctx, const BoundsArgs& a) {
    const NoiseModel h = flagged("--model", [&] { return parse_noise_model(a.model, 1); });
    if (h.dim() != 1) throw FlagError("--model", "this command is one-dimensional (drop d=)");
    const MixingDensity p = flagged("--target", [&] { return parse_target(a.target, 1); });
    const FlatTopKernel K = flagged("--leg", [&] { return build_kernel(1, 2.0, 0.5, a.leg); });
    // Plan grid entries are b, b:m or b:m:v_n; m is reached through the slack xi.
    struct Entry {
        double b, m, v_n;
    };
    std::vector<Entry> entries;
    for (double b : a.b) entries.push_back({b, NAN, NAN});
    if (!a.plan_grid.empty()) {
        std::stringstream ss(a.plan_grid);
        std::string item;
        while (std::getline(ss, item, ',')) {
            std::vector<double> parts;
            std::stringstream is(item);
            std::string part;
            try {
                while (std::getline(is, part, ':')) parts.push_back(std::stod(part));
            } catch (const std::exception&) {
                throw FlagError("--plan-grid", "cannot parse entry '" + item + "'");
            }
            if (parts.empty() || parts.size() > 3) throw FlagError("--plan-grid", "entry '" + item + "' is not b[:m[:v_n]]");
            parts.resize(3, NAN);
            entries.push_back({parts[0], parts[1], parts[2]});
        }
    }
    if (entries.empty()) entries = {{0.2, NAN, NAN}, {0.1, NAN, NAN}, {0.05, NAN, NAN}};
    const GridBox space = make_grid(ctx.g, 1);
    const std::string path = out_path(ctx, "--out", a.out);
    std::ostringstream csv;
    csv << bound_header() << '\n';
    json rows = json::array(), grid = json::array();
    for (const Entry& e : entries) {
        double xi = a.xi;
        if (!std::isnan(e.m)) {
            const auto* osc = std::get_if<Oscillatory>(&h.klass());
            if (!osc) throw FlagError("--plan-grid", "m can only be set for oscillatory noise");
            xi = e.m * (2.0 * osc->beta - 1.0) - osc->beta - 2.0 * osc->mu - 0.5;
        }
        BandwidthPlan plan = flagged("--plan-grid", [&] { return plan_for_bandwidth(h, e.b, xi); });
        if (!std::isnan(e.v_n)) {
            if (!(e.v_n > 0.0 && e.v_n < 1.0)) throw FlagError("--plan-grid", "v_n must lie in (0, 1)");
            plan.v_n = e.v_n;
        }
        const RegularizedTransfer tr = flagged("--plan-grid", [&] { return build_transfer(h, plan); });
        const BoundReport rep = bound_terms(tr, K, p.smoothness(), a.a_n, space);
        csv << bound_row(rep) << '\n';
        rows.push_back(bound_json(rep));
        grid.push_back(json{{"b", plan.b}, {"m", plan.m}, {"v_n", plan.v_n}});
    }
    *ctx.out << csv.str();
    ensure_out_dir(ctx);
    auto os = open_out(path);
    os << csv.str();
    write_manifest(ctx,
                   json{{"model", h.spec()}, {"target", p.spec()}, {"plan_grid", grid}, {"xi", a.xi}, {"a_n", a.a_n},
                        {"leg", a.leg}},
                   {a.out}, rows);
}

void run_rates_run(Context& ctx, const std::string& config_path) {
    StudyConfig cfg = flagged("--config", [&] { return load_study_config(config_path); });
    if (ctx.g.seed_opt && ctx.g.seed_opt->count()) cfg.seed = ctx.g.seed;
    if (ctx.g.threads_opt && ctx.g.threads_opt->count()) cfg.threads = ctx.g.threads;
    ctx.g.seed = cfg.seed;
    const StudyResult r = run_study(cfg);
    ensure_out_dir(ctx);
    const std::vector<std::string> files = write_study_outputs(r, ctx.g.out_dir);
    json summary = json::array();
    for (const auto& row : r.summary)
        summary.push_back(json{{"n", row.n}, {"median", fmt(row.median)}, {"mean", fmt(row.mean)},
                               {"bound", fmt(row.bound)}, {"count", row.count}});
    json results{{"predicted_exponent", r.predicted.exponent},
                 {"scale", r.predicted.scale == RateScale::algebraic ? "algebraic" : "logarithmic"},
                 {"slope_median", r.fit_median.slope},
                 {"slope_median_se", r.fit_median.std_error},
                 {"slope_mean", r.fit_mean.slope},
                 {"max_ratio_median", r.check_median.max_ratio},
                 {"non_diverging_median", r.check_median.non_diverging},
                 {"non_diverging_mean", r.check_mean.non_diverging},
                 {"pass", r.pass},
                 {"summary", summary}};
    json config{{"ini", to_ini(cfg)}, {"source", config_path}};
    write_manifest(ctx, config, files, results);
    *ctx.out << "n,median,mean,bound,ratio\n";
    for (const auto& row : r.summary)
        *ctx.out << fmt(row.n) << ',' << fmt(row.median) << ',' << fmt(row.mean) << ',' << fmt(row.bound) << ','
                 << fmt(row.ratio) << '\n';
    *ctx.out << "slope=" << fmt(r.fit_median.slope) << " +- " << fmt(r.fit_median.std_error)
             << " predicted=" << fmt(r.predicted.exponent) << " pass=" << (r.pass ? "true" : "false")
             << " runtime=" << r.runtime_seconds << "s\n";
}

struct FitArgs {
    std::string in, x = "a_n", y = "error", scale = "algebraic", out = "rates_fit.csv";
};

void run_rates_fit(Context& ctx, const FitArgs& a) {
    std::ifstream is(a.in);
    if (!is) throw FlagError("--in", "cannot open '" + a.in + "'");
    const RateScale scale = a.scale == "algebraic"     ? RateScale::algebraic
                            : a.scale == "logarithmic" ? RateScale::logarithmic
                                                       : throw FlagError("--scale", "expected algebraic or logarithmic");
    std::string line;
    if (!std::getline(is, line)) throw FlagError("--in", "empty file");
    std::vector<std::string> head;
    {
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) head.push_back(c);
    }
    const auto col = [&](const std::string& name, const std::string& flag) {
        const auto it = std::find(head.begin(), head.end(), name);
        if (it == head.end()) throw FlagError(flag, "column '" + name + "' not found");
        return static_cast<std::size_t>(it - head.begin());
    };
    const std::size_t cx = col(a.x, "--x"), cy = col(a.y, "--y");
    std::map<double, std::vector<double>> groups;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) cells.push_back(c);
        if (cells.size() != head.size()) throw FlagError("--in", "ragged row '" + line + "'");
        double xv, yv;
        try {
            xv = std::stod(cells[cx]);
            yv = std::stod(cells[cy]);
        } catch (const std::exception&) {
            throw FlagError("--in", "non-numeric entry in row '" + line + "'");
        }
        if (std::isfinite(yv)) groups[xv].push_back(yv);
    }
    std::vector<double> xs, es;
    for (auto& [xv, ys] : groups) {
        std::sort(ys.begin(), ys.end());
        const std::size_t n = ys.size();
        xs.push_back(xv);
        es.push_back(n % 2 ? ys[n / 2] : 0.5 * (ys[n / 2 - 1] + ys[n / 2]));
    }
    const RateFit f = flagged("--in", [&] { return fit_rate(xs, es, scale); });
    const std::string path = out_path(ctx, "--out", a.out);
    std::ostringstream csv;
    csv << "slope,std_error,intercept,points\n"
        << fmt(f.slope) << ',' << fmt(f.std_error) << ',' << fmt(f.intercept) << ',' << f.points << '\n';
    *ctx.out << csv.str();
    ensure_out_dir(ctx);
    auto os = open_out(path);
    os << csv.str();
    write_manifest(ctx, json{{"in", a.in}, {"x", a.x}, {"y", a.y}, {"scale", a.scale}}, {a.out},
                   json{{"slope", f.slope}, {"std_error", f.std_error}, {"points", f.points}});
}

void write_diagnostic(const Context& ctx, const std::exception& e, std::ostream& err) {
    std::string path = "(not written)";
    try {
        ensure_out_dir(ctx);
        path = (fs::path(ctx.g.out_dir) / "diagnostic.txt").string();
        std::ofstream os(path);
        os << "command: " << ctx.command << "\nargv:";
        for (const auto& s : ctx.argv) os << ' ' << s;
        os << "\nerror: " << e.what() << '\n';
        if (const auto* fe = dynamic_cast<const FitNotConverged*>(&e)) {
            os << "last_iterate:";
            for (double w : fe->last_iterate) os << ' ' << fmt(w);
            os << '\n';
        }
    } catch (const std::exception&) {
        path = "(not written)";
    }
    err << "numeric failure: " << e.what() << "\ndiagnostic: " << path << '\n';
}

}  // namespace

std::string default_out_dir() {
    const char* env = std::getenv("MIXDECON_OUT_DIR");
    return env && *env ? env : "mixdecon_out";
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Context ctx;
    ctx.argv = args;
    ctx.out = &out;
    ctx.g.out_dir = default_out_dir();

    CLI::App app{"Plug-in deconvolution toolkit"};
    app.name("mixdecon");
    app.require_subcommand(1);
    app.fallthrough();
    ctx.g.seed_opt = app.add_option("--seed", ctx.g.seed, "Master seed");
    app.add_option("--grid-nodes", ctx.g.grid_nodes, "Grid nodes per axis (power of two)");
    app.add_option("--grid-half-width", ctx.g.half_width, "Grid covers [-w, w) per axis");
    app.add_option("--out-dir", ctx.g.out_dir, "Output directory (default $MIXDECON_OUT_DIR)");
    ctx.g.threads_opt = app.add_option("--threads", ctx.g.threads, "Worker threads (0 = available parallelism)");

    KernelArgs ka;
    auto* kernel = app.add_subcommand("kernel", "Flat-top kernel tools")->require_subcommand(1);
    auto* kcheck = kernel->add_subcommand("check", "Moment report");
    kcheck->add_option("--d", ka.d, "Dimension");
    kcheck->add_option("--M", ka.M, "Kernel half-band");
    kcheck->add_option("--rho", ka.rho, "Flat fraction of the band");
    kcheck->add_option("--leg", ka.leg, "Leg smoothness r (0 = qmax + 3)");
    kcheck->add_option("--qmax", ka.qmax, "Highest moment order");
    kcheck->add_option("--tol", ka.tol, "Moment tolerance");

    EstimateArgs ea;
    auto* est = app.add_subcommand("estimate", "Sieve minimum-distance estimate from simulated samples");
    est->add_option("--model", ea.model, "Noise model spec");
    est->add_option("--target", ea.target, "Mixing density spec");
    est->add_option("--d", ea.d, "Dimension");
    est->add_option("--n", ea.n, "Sample size");
    est->add_option("--nodes", ea.nodes, "Sieve nodes per axis J");
    est->add_option("--width", ea.width, "Atom half-width (0 = automatic)");
    est->add_option("--max-iter", ea.max_iter, "Projected-gradient iteration cap");
    est->add_option("--out", ea.out, "Output files: f_hat p_hat")->expected(2);

    DemoArgs da;
    auto* deconv = app.add_subcommand("deconv", "Deconvolution tools")->require_subcommand(1);
    auto* demo = deconv->add_subcommand("demo", "Injected estimate, bound report and smoothed estimate");
    demo->add_option("--model", da.model, "Noise model spec");
    demo->add_option("--target", da.target, "Mixing density spec");
    demo->add_option("--a_n", da.a_n, "Injected error level");
    demo->add_option("--xi", da.xi, "Plan slack");
    demo->add_option("--u", da.u, "Norm order (inf allowed)");
    demo->add_option("--shape", da.shape, "bandlimited_bump or random_phase");
    demo->add_option("--leg", da.leg, "Kernel leg smoothness r");
    demo->add_option("--out", da.out, "Output files: report estimate")->expected(2);

    BoundsArgs ba;
    auto* bounds = app.add_subcommand("bounds", "Bound reports")->require_subcommand(1);
    auto* report = bounds->add_subcommand("report", "One row per bandwidth");
    report->add_option("--model", ba.model, "Noise model spec");
    report->add_option("--target", ba.target, "Mixing density spec (smoothness class)");
    report->add_option("--xi", ba.xi, "Plan slack");
    report->add_option("--b", ba.b, "Bandwidth (repeatable)");
    report->add_option("--plan-grid", ba.plan_grid, "Comma-separated b[:m[:v_n]] entries");
    report->add_option("--a_n", ba.a_n, "Error level for the transfer term");
    report->add_option("--leg", ba.leg, "Kernel leg smoothness r");
    report->add_option("--out", ba.out, "Output CSV");

    std::string config_path;
    FitArgs fa;
    auto* rates = app.add_subcommand("rates", "Monte Carlo rate studies")->require_subcommand(1);
    auto* rrun = rates->add_subcommand("run", "Run a study from a config file");
    rrun->add_option("--config", config_path, "Study config (INI)")->required();
    auto* rfit = rates->add_subcommand("fit", "Fit a rate to a CSV");
    rfit->add_option("--in", fa.in, "Input CSV")->required();
    rfit->add_option("--x", fa.x, "x column");
    rfit->add_option("--y", fa.y, "y column (median per x)");
    rfit->add_option("--scale", fa.scale, "algebraic or logarithmic");
    rfit->add_option("--out", fa.out, "Output CSV");

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }

    try {
        if (kcheck->parsed()) {
            ctx.command = "kernel check";
            run_kernel_check(ctx, ka);
        } else if (est->parsed()) {
            ctx.command = "estimate";
            run_estimate(ctx, ea);
        } else if (demo->parsed()) {
            ctx.command = "deconv demo";
            run_deconv_demo(ctx, da);
        } else if (report->parsed()) {
            ctx.command = "bounds report";
            run_bounds_report(ctx, ba);
        } else if (rrun->parsed()) {
            ctx.command = "rates run";
            run_rates_run(ctx, config_path);
        } else if (rfit->parsed()) {
            ctx.command = "rates fit";
            run_rates_fit(ctx, fa);
        }
    } catch (const NumericError& e) {
        write_diagnostic(ctx, e, err);
        return 2;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const StructuralError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

int dispatch(const std::vector<std::string>& args) { return dispatch(args, std::cout, std::cerr); }

}  // namespace mixdecon
