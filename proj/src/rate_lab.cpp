#include "mixdecon/rate_lab.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "mixdecon/rng.hpp"
#include "mixdecon/spec_string.hpp"

namespace mixdecon {

namespace {

std::string fmt(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double parse_number(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    if (t == "inf" || t == "infinity") return std::numeric_limits<double>::infinity();
    try {
        std::size_t pos = 0;
        const double v = std::stod(t, &pos);
        if (pos != t.size()) throw std::invalid_argument(t);
        return v;
    } catch (const std::exception&) {
        throw DomainError("config: key '" + key + "' expects a number, got '" + t + "'");
    }
}

// "a,b,c" and inclusive integer ranges "lo:hi".
std::vector<double> parse_list(const std::string& key, const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        const auto colon = item.find(':');
        if (colon == std::string::npos) {
            out.push_back(parse_number(key, item));
            continue;
        }
        const double lo = parse_number(key, item.substr(0, colon));
        const double hi = parse_number(key, item.substr(colon + 1));
        if (lo != std::floor(lo) || hi != std::floor(hi) || hi < lo)
            throw DomainError("config: key '" + key + "' has an invalid range '" + item + "'");
        for (double v = lo; v <= hi; v += 1.0) out.push_back(v);
    }
    return out;
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

const char* mode_name(StudyMode m) { return m == StudyMode::oracle_inject ? "oracle_inject" : "full_pipeline"; }

const char* law_name(AnLaw l) {
    switch (l) {
        case AnLaw::inverse_sqrt: return "inverse_sqrt";
        case AnLaw::log_adjusted: return "log_adjusted";
        case AnLaw::power: return "power";
    }
    return "";
}

}  // namespace

// ---------------------------------------------------------------- config

void StudyConfig::validate() const {
    if (n_grid.size() < 3) throw DomainError("config: n grid needs at least 3 points");
    for (std::size_t i = 0; i < n_grid.size(); ++i) {
        if (!(n_grid[i] >= 2.0) || !std::isfinite(n_grid[i])) throw DomainError("config: n values must be finite and >= 2");
        if (i > 0 && !(n_grid[i] > n_grid[i - 1])) throw DomainError("config: n grid must be strictly increasing");
    }
    if (replicates < 1) throw DomainError("config: replicates must be >= 1");
    if (!(u >= 1.0)) throw DomainError("config: u must be >= 1 or inf");
    if (deriv_order < 0) throw DomainError("config: deriv_order must be >= 0");
    if (d < 1 || d > 3) throw DomainError("config: d must be 1, 2 or 3");
    if (grid_nodes < 16 || (grid_nodes & (grid_nodes - 1)) != 0)
        throw DomainError("config: grid_nodes must be a power of two >= 16");
    if (!(grid_half_width > 0.0)) throw DomainError("config: grid_half_width must be positive");
    if (mode == StudyMode::full_pipeline && n_grid.back() > 1e8)
        throw DomainError("config: full_pipeline needs n <= 1e8 (use oracle_inject for virtual n)");
    if (law == AnLaw::power && !(law_delta > 0.0)) throw DomainError("config: delta must be positive");
    if (output.empty() || output.find('/') != std::string::npos || output.find("..") != std::string::npos)
        throw DomainError("config: output must be a plain file stem");
    parse_noise_model(model, d);
    parse_target(target, d);
}

double StudyConfig::a_n(double n) const {
    switch (law) {
        case AnLaw::inverse_sqrt: return 1.0 / std::sqrt(n);
        case AnLaw::log_adjusted: return std::pow(std::log(n), law_zeta) / std::sqrt(n);
        case AnLaw::power: return std::pow(n, -law_delta);
    }
    return 0.0;
}

MultiIndex StudyConfig::derivative() const {
    std::vector<int> s(d, 0);
    s[0] = deriv_order;
    return MultiIndex(s);
}

NormOrder StudyConfig::norm() const { return std::isinf(u) ? NormOrder::infinity() : NormOrder(u); }

GridBox StudyConfig::grid() const { return GridBox::uniform(d, -grid_half_width, grid_half_width, grid_nodes); }

StudyConfig parse_study_config(std::istream& is) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw DomainError(std::string("config: ") + e.message() + " at line " + std::to_string(e.line()));
    }
    const std::set<std::string> allowed_sections{"model", "target", "study"};
    const std::set<std::string> study_keys{
        "mode", "a_n_law", "zeta", "delta", "n", "n_log2", "replicates", "u", "deriv_order", "seed", "xi",
        "output", "d", "grid_nodes", "grid_half_width", "M", "rho", "kernel_leg", "shape", "omega",
        "sieve_nodes", "threads"};
    StudyConfig cfg;
    bool have_n = false;
    for (const auto& [section, body] : tree) {
        if (!allowed_sections.count(section)) throw DomainError("config: unknown section [" + section + "]");
        for (const auto& [key, node] : body) {
            const std::string val = trim(node.data());
            const std::string where = section + "." + key;
            if (section == "model" || section == "target") {
                if (key != "spec") throw DomainError("config: unknown key '" + where + "'");
                (section == "model" ? cfg.model : cfg.target) = val;
                continue;
            }
            if (!study_keys.count(key)) throw DomainError("config: unknown key '" + where + "'");
            if (key == "mode") {
                if (val == "oracle_inject") cfg.mode = StudyMode::oracle_inject;
                else if (val == "full_pipeline") cfg.mode = StudyMode::full_pipeline;
                else throw DomainError("config: study.mode must be oracle_inject or full_pipeline");
            } else if (key == "a_n_law") {
                if (val == "inverse_sqrt") cfg.law = AnLaw::inverse_sqrt;
                else if (val == "log_adjusted") cfg.law = AnLaw::log_adjusted;
                else if (val == "power") cfg.law = AnLaw::power;
                else throw DomainError("config: study.a_n_law must be inverse_sqrt, log_adjusted or power");
            } else if (key == "shape") {
                if (val == "bandlimited_bump") cfg.shape = InjectionShape::bandlimited_bump;
                else if (val == "random_phase") cfg.shape = InjectionShape::random_phase;
                else throw DomainError("config: study.shape must be bandlimited_bump or random_phase");
            } else if (key == "n" || key == "n_log2") {
                if (have_n) throw DomainError("config: give either study.n or study.n_log2");
                have_n = true;
                cfg.n_grid = parse_list(where, val);
                if (key == "n_log2")
                    for (auto& v : cfg.n_grid) v = std::ldexp(1.0, static_cast<int>(v));
            } else if (key == "output") {
                cfg.output = val;
            } else {
                const double v = parse_number(where, val);
                const auto whole = [&](double lo) {
                    if (v != std::floor(v) || v < lo) throw DomainError("config: " + where + " must be an integer >= " + fmt(lo));
                    return v;
                };
                if (key == "zeta") cfg.law_zeta = v;
                else if (key == "delta") cfg.law_delta = v;
                else if (key == "replicates") cfg.replicates = static_cast<std::size_t>(whole(1));
                else if (key == "u") cfg.u = v;
                else if (key == "deriv_order") cfg.deriv_order = static_cast<int>(whole(0));
                else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(whole(0));
                else if (key == "xi") cfg.xi = v;
                else if (key == "d") cfg.d = static_cast<std::size_t>(whole(1));
                else if (key == "grid_nodes") cfg.grid_nodes = static_cast<std::size_t>(whole(16));
                else if (key == "grid_half_width") cfg.grid_half_width = v;
                else if (key == "M") cfg.M = v;
                else if (key == "rho") cfg.rho = v;
                else if (key == "kernel_leg") cfg.kernel_leg = static_cast<int>(whole(1));
                else if (key == "omega") cfg.omega = v;
                else if (key == "sieve_nodes") cfg.sieve_nodes = static_cast<std::size_t>(whole(2));
                else if (key == "threads") cfg.threads = static_cast<std::size_t>(whole(0));
            }
        }
    }
    if (!have_n) throw DomainError("config: study.n (or study.n_log2) is required");
    cfg.validate();
    return cfg;
}

StudyConfig load_study_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DomainError("config: cannot open '" + path + "'");
    return parse_study_config(is);
}

std::string to_ini(const StudyConfig& cfg) {
    std::ostringstream os;
    os << "[model]\nspec = " << cfg.model << "\n\n[target]\nspec = " << cfg.target << "\n\n[study]\n";
    os << "mode = " << mode_name(cfg.mode) << "\n";
    os << "a_n_law = " << law_name(cfg.law) << "\n";
    os << "zeta = " << fmt(cfg.law_zeta) << "\n";
    os << "delta = " << fmt(cfg.law_delta) << "\n";
    os << "n = ";
    for (std::size_t i = 0; i < cfg.n_grid.size(); ++i) os << (i ? "," : "") << fmt(cfg.n_grid[i]);
    os << "\nreplicates = " << cfg.replicates << "\n";
    os << "u = " << fmt(cfg.u) << "\n";
    os << "deriv_order = " << cfg.deriv_order << "\n";
    os << "seed = " << cfg.seed << "\n";
    os << "xi = " << fmt(cfg.xi) << "\n";
    os << "output = " << cfg.output << "\n";
    os << "d = " << cfg.d << "\n";
    os << "grid_nodes = " << cfg.grid_nodes << "\n";
    os << "grid_half_width = " << fmt(cfg.grid_half_width) << "\n";
    os << "M = " << fmt(cfg.M) << "\nrho = " << fmt(cfg.rho) << "\nkernel_leg = " << cfg.kernel_leg << "\n";
    os << "shape = " << (cfg.shape == InjectionShape::bandlimited_bump ? "bandlimited_bump" : "random_phase") << "\n";
    os << "omega = " << fmt(cfg.omega) << "\n";
    os << "sieve_nodes = " << cfg.sieve_nodes << "\n";
    os << "threads = " << cfg.threads << "\n";
    return os.str();
}

// ---------------------------------------------------------------- fits

RateFit fit_rate(std::span<const double> x, std::span<const double> e, RateScale scale) {
    if (x.size() != e.size()) throw StructuralError("fit_rate: series lengths differ");
    if (x.size() < 3) throw DomainError("fit_rate: at least 3 pairs required");
    std::vector<double> X(x.size()), Y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(e[i] > 0.0)) throw DomainError("fit_rate: inputs must be positive");
        if (scale == RateScale::logarithmic) {
            if (!(x[i] < 1.0)) throw DomainError("fit_rate: logarithmic scale needs x in (0, 1)");
            X[i] = std::log(std::log(1.0 / x[i]));
        } else {
            X[i] = std::log(x[i]);
        }
        Y[i] = std::log(e[i]);
    }
    const double n = static_cast<double>(X.size());
    const double mx = std::accumulate(X.begin(), X.end(), 0.0) / n;
    const double my = std::accumulate(Y.begin(), Y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < X.size(); ++i) {
        sxx += (X[i] - mx) * (X[i] - mx);
        sxy += (X[i] - mx) * (Y[i] - my);
    }
    if (!(sxx > 0.0)) throw DomainError("fit_rate: x values must not all coincide");
    RateFit f;
    f.points = X.size();
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ssr = 0.0;
    for (std::size_t i = 0; i < X.size(); ++i) {
        const double r = Y[i] - f.intercept - f.slope * X[i];
        ssr += r * r;
    }
    f.std_error = std::sqrt(ssr / (n - 2.0) / sxx);
    return f;
}

UpperBoundCheck upper_bound_check(std::span<const double> errors, std::span<const double> bounds) {
    if (errors.size() != bounds.size()) throw StructuralError("upper_bound_check: series lengths differ");
    if (errors.empty()) throw DomainError("upper_bound_check: empty series");
    UpperBoundCheck c;
    for (std::size_t i = 0; i < errors.size(); ++i) c.ratios.push_back(errors[i] / bounds[i]);
    c.max_ratio = *std::max_element(c.ratios.begin(), c.ratios.end());
    c.non_diverging = std::isfinite(c.max_ratio) && c.ratios.back() <= 2.0 * c.ratios.front();
    return c;
}

// ---------------------------------------------------------------- runner

std::uint64_t replicate_seed(std::uint64_t master, std::size_t n_index, std::size_t replicate) {
    return derive_seed(master, n_index, replicate);
}

StudyResult run_study(const StudyConfig& cfg) {
    cfg.validate();
    const auto start = std::chrono::steady_clock::now();
    const NoiseModel h = parse_noise_model(cfg.model, cfg.d);
    const MixingDensity p = parse_target(cfg.target, cfg.d);
    const SmoothnessClass& klass = p.smoothness();
    const MultiIndex s = cfg.derivative();
    if (s.order() > klass.q) throw DomainError("study: deriv_order exceeds q of the target");
    const FlatTopKernel K = build_kernel(cfg.d, cfg.M, cfg.rho, cfg.kernel_leg);
    const GridBox space = cfg.grid();
    const NormOrder u = cfg.norm();
    const GridFunction pg = p.sample(space);
    const GridFunction truth = s.order() == 0 ? pg : p.sample_derivative(space, s);

    StudyResult res;
    res.config = cfg;
    const std::size_t N = cfg.n_grid.size(), R = cfg.replicates;
    res.records.resize(N * R);

    const auto task = [&](std::size_t idx) {
        const std::size_t i = idx / R, rep = idx % R;
        StudyRecord rec;
        rec.n = cfg.n_grid[i];
        rec.replicate = rep;
        rec.seed = replicate_seed(cfg.seed, i, rep);
        rec.a_n = cfg.a_n(rec.n);
        rec.deriv_order = s.order();
        rec.u = cfg.u;
        try {
            const BandwidthPlan plan = select_bandwidth(h, rec.a_n, klass, cfg.d, cfg.xi, cfg.M);
            rec.b = plan.b;
            GridFunction p_hat;
            if (cfg.mode == StudyMode::oracle_inject) {
                p_hat = oracle_inject(pg, h, rec.a_n, u, cfg.shape, rec.seed, cfg.omega).p_hat;
            } else {
                const auto X = sample_mixture(p, h, static_cast<std::size_t>(rec.n), rec.seed);
                SieveConfig sc;
                sc.nodes = cfg.sieve_nodes;
                const auto [lo, hi] = p.support_1d();
                sc.lo = lo;
                sc.hi = hi;
                sc.M = cfg.M;
                p_hat = fit_minimum_distance(X, h, sc, space).p_hat;
            }
            const GridFunction est = derivative_estimate(p_hat, plan, K, s, klass);
            rec.error = lp_distance(est, truth, u);
        } catch (const DomainError& e) {
            rec.skipped = true;
            rec.error = std::numeric_limits<double>::quiet_NaN();
            rec.note = e.what();
        }
        res.records[idx] = std::move(rec);
    };

    std::size_t workers = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, N * R);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    const auto worker = [&] {
        for (std::size_t idx; (idx = next.fetch_add(1)) < N * R;) {
            try {
                task(idx);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = N * R;
            }
        }
    };
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    const double zeta = select_bandwidth(h, cfg.a_n(cfg.n_grid.front()), klass, cfg.d, cfg.xi, cfg.M).zeta;
    res.predicted = predicted_exponent(h, klass, cfg.d, s, zeta);
    std::vector<double> xs, med, mean, bnd;
    for (std::size_t i = 0; i < N; ++i) {
        std::vector<double> e;
        for (std::size_t rep = 0; rep < R; ++rep) {
            const auto& r = res.records[i * R + rep];
            if (!r.skipped) e.push_back(r.error);
        }
        SummaryRow row;
        row.n = cfg.n_grid[i];
        row.a_n = cfg.a_n(row.n);
        row.count = e.size();
        row.bound = res.predicted.bound(row.a_n);
        if (e.empty()) {
            row.median = row.mean = row.ratio = std::numeric_limits<double>::quiet_NaN();
        } else {
            row.median = median_of(e);
            row.mean = std::accumulate(e.begin(), e.end(), 0.0) / static_cast<double>(e.size());
            row.ratio = row.median / row.bound;
            xs.push_back(row.a_n);
            med.push_back(row.median);
            mean.push_back(row.mean);
            bnd.push_back(row.bound);
        }
        res.summary.push_back(row);
    }
    if (xs.size() >= 3) {
        res.fit_median = fit_rate(xs, med, res.predicted.scale);
        res.fit_mean = fit_rate(xs, mean, res.predicted.scale);
        res.check_median = upper_bound_check(med, bnd);
        res.check_mean = upper_bound_check(mean, bnd);
        const bool slope_ok = res.predicted.scale == RateScale::algebraic
                                  ? res.fit_median.slope >= res.predicted.exponent - 0.1
                                  : std::abs(res.fit_median.slope + res.predicted.exponent) <= 0.2;
        res.pass = slope_ok && res.check_median.non_diverging && res.check_mean.non_diverging;
    }
    res.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

// ---------------------------------------------------------------- outputs

void write_results_csv(const StudyResult& r, std::ostream& os) {
    os << "n,replicate,seed,a_n,b,error,deriv_order,u\n";
    for (const auto& rec : r.records)
        os << fmt(rec.n) << ',' << rec.replicate << ',' << rec.seed << ',' << fmt(rec.a_n) << ',' << fmt(rec.b)
           << ',' << fmt(rec.error) << ',' << rec.deriv_order << ',' << fmt(rec.u) << '\n';
}

void write_summary_csv(const StudyResult& r, std::ostream& os) {
    os << "n,median,mean,bound,ratio\n";
    for (const auto& row : r.summary)
        os << fmt(row.n) << ',' << fmt(row.median) << ',' << fmt(row.mean) << ',' << fmt(row.bound) << ','
           << fmt(row.ratio) << '\n';
}

void write_plot_script(std::ostream& os, const std::string& csv, int xcol, int ycol, const std::string& title) {
    os << "set datafile separator ','\n"
       << "set key autotitle columnhead\n"
       << "set logscale xy\n"
       << "set title '" << title << "'\n"
       << "plot '" << csv << "' using " << xcol << ':' << ycol << " with linespoints\n";
}

std::vector<std::string> write_study_outputs(const StudyResult& r, const std::string& dir) {
    const std::string stem = r.config.output;
    const auto open = [&](const std::string& name) {
        std::ofstream os(dir + "/" + name, std::ios::binary);
        if (!os) throw DomainError("cannot write '" + dir + "/" + name + "'");
        return os;
    };
    const std::string results = stem + "_results.csv", summary = stem + "_summary.csv";
    {
        auto os = open(results);
        write_results_csv(r, os);
    }
    {
        auto os = open(summary);
        write_summary_csv(r, os);
    }
    {
        auto os = open(stem + "_results.gp");
        write_plot_script(os, results, 4, 6, "error against a_n");
    }
    {
        auto os = open(stem + "_summary.gp");
        write_plot_script(os, summary, 1, 2, "median error against n");
    }
    return {results, summary, stem + "_results.gp", stem + "_summary.gp"};
}

}  // namespace mixdecon
