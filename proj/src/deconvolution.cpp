#include "mixdecon/deconvolution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/special_functions/binomial.hpp>
#include <boost/math/tools/roots.hpp>

#include "mixdecon/errors.hpp"

namespace mixdecon {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct ModelRates {
    enum Kind { super_smooth, smooth, oscillatory, noiseless } kind;
    double alpha_bar = 0.0, k = 1.0, beta = 0.0;
    int mu = 0;
    double lambda = 1.0;
};

ModelRates rates_of(const NoiseModel& model) {
    ModelRates r{ModelRates::smooth};
    if (model.family() == NoiseFamily::identity) {
        r.kind = ModelRates::noiseless;
        return r;
    }
    if (const auto* ss = std::get_if<SuperSmooth>(&model.klass())) {
        r.kind = ModelRates::super_smooth;
        r.alpha_bar = ss->alpha_bar();
        r.k = ss->k;
    } else if (const auto* sm = std::get_if<Smooth>(&model.klass())) {
        r.kind = ModelRates::smooth;
        r.beta = sm->beta_bar();
    } else {
        const auto& osc = std::get<Oscillatory>(model.klass());
        r.kind = ModelRates::oscillatory;
        r.beta = osc.beta;
        r.mu = osc.mu;
        r.lambda = osc.lambda;
    }
    return r;
}

GridFunction real_part(const GridFunction& f) {
    return GridFunction(f.space_box(), f.domain(), f.real_values());
}

bool is_real(const GridFunction& f) { return f.max_abs_imag() == 0.0; }

// E(p) = int_X^inf s^{-p} e^{i w s} ds by its asymptotic series (w X large).
cplx oscillatory_tail(double p, double w, double X) {
    const cplx a = 1.0 / cplx(0.0, w);
    cplx sum = 0.0, term = a * std::pow(X, -p);
    double prev = kInf;
    for (int n = 0; n < 400; ++n) {
        const double mag = std::abs(term);
        if (mag > prev) break;
        sum += term;
        if (mag <= 1e-18 * std::abs(sum)) break;
        prev = mag;
        term *= (p + n) * a / X;
    }
    return -std::exp(cplx(0.0, w * X)) * sum;
}

// int_X^inf (sin s / s)^{2m} ds.
double sinc_power_tail(int m, double X) {
    constexpr double X_asym = 64.0;
    double head = 0.0;
    if (X < X_asym) {
        const auto f = [m](double s) {
            if (s == 0.0) return 1.0;
            return std::pow(std::sin(s) / s, 2 * m);
        };
        head = integrate_gl(f, X, X_asym, static_cast<std::size_t>(std::ceil((X_asym - X) * 2.0)) + 1);
        X = X_asym;
    }
    const int p = 2 * m;
    const double scale = std::ldexp(1.0, -p);
    double tail = scale * boost::math::binomial_coefficient<double>(p, m) * std::pow(X, 1.0 - p) / (p - 1);
    for (int k = 1; k <= m; ++k) {
        const double c = 2.0 * scale * boost::math::binomial_coefficient<double>(p, m - k);
        tail += (k % 2 ? -c : c) * oscillatory_tail(p, 2.0 * k, X).real();
    }
    return head + tail;
}

// 1-d integral of |h~|^2 over R and over |t| > M.
std::pair<double, double> energy_1d(const NoiseModel& model, double M) {
    const double p = model.param();
    switch (model.family()) {
        case NoiseFamily::gaussian:
            return {std::sqrt(kPi) / p, std::sqrt(kPi) / p * std::erfc(p * M)};
        case NoiseFamily::cauchy:
            return {1.0 / p, std::exp(-2.0 * p * M) / p};
        case NoiseFamily::exponential:
            return {kPi / p, 2.0 / p * std::atan(1.0 / (p * M))};
        case NoiseFamily::laplace: {
            const double x = p * M;
            double v;
            if (x > 10.0) {
                const double y = 1.0 / x, y2 = y * y;
                double pw = y * y2;
                v = 0.0;
                for (int k = 1; k <= 30; ++k, pw *= y2) v += (k % 2 ? 1.0 : -1.0) * (2.0 * k / (2.0 * k + 1.0)) * pw;
            } else {
                v = std::atan(1.0 / x) - x / (1.0 + x * x);
            }
            return {kPi / (2.0 * p), v / p};
        }
        case NoiseFamily::uniform: {
            const int m = model.order();
            return {2.0 * p * sinc_power_tail(m, 0.0), 2.0 * p * sinc_power_tail(m, M / p)};
        }
        case NoiseFamily::identity: return {kInf, kInf};
    }
    return {kInf, kInf};
}

// int_{-B}^{B} K~_1(tb)^2 / |h_1(t)|^2 dt with `h` the (regularized) transfer.
template <class H>
double filter_energy_1d(const FlatTopKernel& K, double b, const H& habs, std::vector<double> knots) {
    const double B = K.M() / b;
    knots.push_back(0.0);
    knots.push_back(K.flat_edge() / b);
    knots.push_back(B);
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
    const auto f = [&](double t) {
        const double k = K.transform_1d(t * b);
        if (k == 0.0) return 0.0;
        const double h = habs(t);
        return k * k / (h * h);
    };
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
        const double a = knots[i], c = knots[i + 1];
        if (a < 0.0 || c > B || !(c > a)) continue;
        total += integrate(f, a, c, 1e-10);
        if (!std::isfinite(total)) return kInf;
    }
    return 2.0 * total;
}

double root_solve(const std::function<double(double)>& f, double a, double c) {
    double fa = f(a), fc = f(c);
    if (fa == 0.0) return a;
    if (fc == 0.0) return c;
    std::uintmax_t iters = 200;
    const auto r = boost::math::tools::toms748_solve(f, a, c, fa, fc,
                                                     boost::math::tools::eps_tolerance<double>(52), iters);
    return 0.5 * (r.first + r.second);
}

}  // namespace

// ---------------------------------------------------------------- plans

BandwidthPlan plan_for_bandwidth(const NoiseModel& model, double b, double xi, double M) {
    if (!(b > 0.0) || !std::isfinite(b)) throw DomainError("plan: bandwidth b must be positive");
    if (!(M > 0.0)) throw DomainError("plan: kernel half-band M must be positive");
    const ModelRates r = rates_of(model);
    BandwidthPlan plan;
    plan.b = b;
    plan.M = M;
    plan.xi = xi;
    plan.model = model.spec();
    switch (r.kind) {
        case ModelRates::oscillatory: {
            if (!(r.beta > 0.5)) throw DomainError("plan: oscillatory decay beta must exceed 0.5");
            if (!(xi > 0.0)) throw DomainError("plan: slack xi must be positive for oscillatory noise");
            const double mu = r.mu, beta = r.beta;
            plan.delta = mu * (1.0 - 2.0 * beta) / (2.0 * mu + 1.0);
            plan.m = (beta + 2.0 * mu + 0.5 + xi) / (2.0 * beta - 1.0);
            plan.v_n = std::pow(b, 2.0 * mu * plan.m * (2.0 * beta - 1.0) / (2.0 * mu + 1.0));
            plan.zeta = 2.0 * mu * xi / (2.0 * mu + 1.0);
            plan.tilt = beta + plan.delta;
            break;
        }
        case ModelRates::smooth: {
            if (!(r.beta > 0.5)) throw DomainError("plan: smooth decay beta must exceed 0.5");
            plan.m = std::max(0.5, (r.beta + 0.5) / (2.0 * r.beta - 1.0) + xi);
            plan.v_n = envelope_inf(model, M / b);
            break;
        }
        case ModelRates::super_smooth:
        case ModelRates::noiseless:
            plan.m = 0.5;
            plan.v_n = envelope_inf(model, M / b);
            break;
    }
    plan.M_n = std::max(2.0 * M / std::pow(b, 2.0 * plan.m), M / b);
    return plan;
}

BandwidthPlan select_bandwidth(const NoiseModel& model, double a_n, const SmoothnessClass& klass,
                               std::size_t d, double xi, double M) {
    if (!(a_n > 0.0 && a_n < 1.0)) throw DomainError("select_bandwidth: a_n must lie in (0, 1)");
    if (d != model.dim()) throw StructuralError("select_bandwidth: dimension mismatch");
    const ModelRates r = rates_of(model);
    const double qt = klass.qtilde(), dd = static_cast<double>(d);
    double b = 1.0;
    switch (r.kind) {
        case ModelRates::super_smooth:
            b = std::pow(4.0 * dd * r.alpha_bar * std::pow(M, r.k) / std::log(1.0 / a_n), 1.0 / r.k);
            break;
        case ModelRates::smooth:
            if (!(r.beta > 0.5)) throw DomainError("select_bandwidth: smooth decay beta must exceed 0.5");
            b = std::pow(a_n, 1.0 / (qt + dd * r.beta + 0.5 * dd));
            break;
        case ModelRates::noiseless:
            b = std::pow(a_n, 1.0 / (qt + 0.5 * dd));
            break;
        case ModelRates::oscillatory: {
            if (!(r.beta > 0.5)) throw DomainError("select_bandwidth: oscillatory decay beta must exceed 0.5");
            if (!(xi > 0.0)) throw DomainError("select_bandwidth: slack xi must be positive");
            const double zeta = 2.0 * r.mu * xi / (2.0 * r.mu + 1.0);
            b = std::pow(a_n, 1.0 / (qt + r.beta + 2.0 * r.mu + 0.5 + zeta));
            break;
        }
    }
    BandwidthPlan plan = plan_for_bandwidth(model, b, xi, M);
    plan.a_n = a_n;
    return plan;
}

double RateDescriptor::bound(double a_n) const {
    if (scale == RateScale::algebraic) return std::pow(a_n, exponent);
    return std::pow(std::log(1.0 / a_n), -exponent);
}

RateDescriptor predicted_exponent(const NoiseModel& model, const SmoothnessClass& klass,
                                  std::size_t d, const MultiIndex& s, double zeta) {
    const int order = s.order();
    if (order > klass.q) throw DomainError("predicted_exponent: derivative order exceeds q");
    const ModelRates r = rates_of(model);
    const double qt = klass.qtilde(), dd = static_cast<double>(d);
    RateDescriptor out;
    switch (r.kind) {
        case ModelRates::super_smooth:
            out.scale = RateScale::logarithmic;
            out.base_exponent = qt / r.k;
            break;
        case ModelRates::smooth:
            out.base_exponent = qt / (qt + dd * r.beta + 0.5 * dd);
            break;
        case ModelRates::noiseless:
            out.base_exponent = qt / (qt + 0.5 * dd);
            break;
        case ModelRates::oscillatory:
            out.base_exponent = qt / (qt + r.beta + 2.0 * r.mu + 0.5 + zeta);
            break;
    }
    out.derivative_factor = (qt - order) / qt;
    out.exponent = out.base_exponent * out.derivative_factor;
    return out;
}

// ---------------------------------------------------------------- psi

PsiResult psi(const ScaledKernel& Kn, const NoiseModel& model, const GridBox& space) {
    if (Kn.dim() != model.dim() || space.dim() != model.dim())
        throw StructuralError("psi: dimension mismatch");
    if (const auto* osc = std::get_if<Oscillatory>(&model.klass())) {
        if (kPi * osc->lambda <= Kn.band())
            throw MustRegularize("psi: the transfer has a root inside the kernel band; use psi_star");
    }
    GridFunction spec = GridFunction::sample(space, Domain::frequency, [&](std::span<const double> t) {
        const double k = Kn.transform(t);
        if (k == 0.0) return cplx(0.0);
        const cplx h = model.htilde(t);
        const cplx v = k / h;
        if (std::abs(h) == 0.0 || !std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw NumericError("psi: K~_n / h~ is not representable on the band (h~ underflows)");
        return v;
    });
    GridFunction spatial = inverse_fourier(spec);
    return {std::move(spec), std::move(spatial)};
}

PsiL1Report psi_l1_report(const ScaledKernel& Kn, const NoiseModel& model, const GridBox& space) {
    const PsiResult r = psi(Kn, model, space);
    PsiL1Report rep;
    rep.numeric = lp_norm(r.spatial, NormOrder(1.0));
    const double b = Kn.b, B = Kn.band();
    const double e1 = filter_energy_1d(Kn.base, b, [&](double t) { return std::abs(model.htilde_1d(t)); }, {});
    const double d = static_cast<double>(model.dim());
    rep.mid = std::sqrt(std::pow(e1, d));
    const double inf_h = std::pow(std::abs(model.htilde_1d(B)), d);
    rep.coarse = std::pow(b, -0.5 * d) / inf_h;
    return rep;
}

// ---------------------------------------------------------------- regularized transfer

double Region::length() const {
    double L = 0.0;
    for (const auto& [a, c] : intervals) L += c - a;
    return L;
}

RegularizedTransfer::RegularizedTransfer(NoiseModel model, BandwidthPlan plan, TransferOptions options)
    : model_(std::move(model)), plan_(std::move(plan)), options_(options) {
    if (!(plan_.M_n > 0.0)) throw DomainError("transfer: band limit M_n must be positive");
    if (plan_.M_n < plan_.M / plan_.b * (1.0 - 1e-12))
        throw DomainError("transfer: band limit M_n must cover the kernel band M/b");
    if (trivial()) return;
    if (!(plan_.v_n > 0.0)) throw DomainError("transfer: threshold scale v_n must be positive");
    const auto& osc = std::get<Oscillatory>(model_.klass());
    const double Jd = std::floor(plan_.M_n / (kPi * osc.lambda));
    if (Jd > 9.0e18) throw DomainError("transfer: band limit too large");
    J_ = static_cast<std::int64_t>(Jd);
    const std::int64_t E = std::min<std::int64_t>(J_, options_.explicit_regions);
    regions_.reserve(static_cast<std::size_t>(E));
    for (std::int64_t j = 1; j <= E; ++j) {
        regions_.push_back(make_region(j));
        if (regions_.back().degenerate) ++degenerate_;
    }
    if (J_ > E) {
        // Degeneracy is monotone in j past the explicit range when the tilt is below the decay.
        if (E > 0 && regions_.back().degenerate) {
            degenerate_ += static_cast<std::size_t>(J_ - E);
        } else if (make_region(J_).degenerate) {
            std::int64_t lo = E, hi = J_;  // region lo is regular, region hi degenerate
            while (hi - lo > 1) {
                const std::int64_t mid = lo + (hi - lo) / 2;
                if (make_region(mid).degenerate) hi = mid; else lo = mid;
            }
            degenerate_ += static_cast<std::size_t>(J_ - hi + 1);
        }
    }
}

double RegularizedTransfer::threshold(std::int64_t j) const {
    const double a = static_cast<double>(j < 0 ? -j : j);
    return plan_.v_n / std::pow(a, plan_.tilt);
}

double RegularizedTransfer::min_threshold() const {
    if (trivial()) return plan_.v_n;
    if (J_ == 0) return kInf;
    return plan_.tilt > 0.0 ? threshold(J_) : threshold(1);
}

std::int64_t RegularizedTransfer::nearest_root(double t) const {
    if (trivial() || J_ == 0) return 0;
    const double lambda = model_.param();
    const double k = t / (kPi * lambda);
    std::int64_t j;
    if (std::abs(k) > static_cast<double>(J_)) {
        j = k > 0 ? J_ : -J_;
    } else {
        j = static_cast<std::int64_t>(std::ceil(k - 0.5));
        if (j == 0) j = t > 0.0 ? 1 : -1;
        j = std::clamp<std::int64_t>(j, -J_, J_);
    }
    return j;
}

cplx RegularizedTransfer::evaluate_1d(double t) const {
    if (std::abs(t) > plan_.M_n) return 0.0;
    const cplx h = model_.htilde_1d(t);
    if (trivial() || J_ == 0) return h;
    const double v = threshold(nearest_root(t));
    return std::abs(h) <= v ? cplx(v) : h;
}

cplx RegularizedTransfer::evaluate(std::span<const double> t) const {
    if (t.size() != model_.dim()) throw StructuralError("transfer: dimension mismatch");
    cplx v = 1.0;
    for (double x : t) v *= evaluate_1d(x);
    return v;
}

GridFunction RegularizedTransfer::spectrum(const GridBox& space) const {
    return GridFunction::sample(space, Domain::frequency, [&](std::span<const double> t) { return evaluate(t); });
}

std::pair<double, double> RegularizedTransfer::cell(std::int64_t j) const {
    const double lo = j == 1 ? -kPi : -0.5 * kPi;
    double hi = 0.5 * kPi;
    if (j == J_) hi = plan_.M_n / model_.param() - static_cast<double>(J_) * kPi;
    return {lo, hi};
}

double RegularizedTransfer::g(double x, double s) const {
    const double u = x * kPi + s;
    if (std::abs(u) < 1e-300) return 1.0;
    return std::pow(std::abs(std::sin(s)) / std::abs(u), model_.order());
}

namespace {
// Lobe maximum right of root x: tan s = x pi + s on (0, pi/2).
double lobe_peak(double x) {
    double s = 0.5 * kPi;
    for (int i = 0; i < 60; ++i) s = std::atan(x * kPi + s);
    return s;
}
}  // namespace

Region RegularizedTransfer::make_region(std::int64_t j) const {
    Region R;
    R.j = j;
    R.threshold = threshold(j);
    const double v = R.threshold;
    const double x = static_cast<double>(j);
    const auto [lo, hi] = cell(j);
    const auto f = [&](double s) { return g(x, s) - v; };
    const double s_peak = lobe_peak(x);
    R.degenerate = v >= g(x, s_peak);
    if (R.degenerate && options_.strict)
        throw DomainError("transfer: threshold v_{n," + std::to_string(j) + "} exceeds the lobe maximum");
    std::vector<std::pair<double, double>> iv;
    const double left = f(lo) <= 0.0 ? lo : root_solve(f, lo, 0.0);
    double right;
    if (hi <= s_peak) {
        right = f(hi) <= 0.0 ? hi : root_solve(f, 0.0, hi);
        iv.emplace_back(left, right);
    } else if (f(s_peak) <= 0.0) {
        iv.emplace_back(left, hi);
    } else {
        iv.emplace_back(left, root_solve(f, 0.0, s_peak));
        if (f(hi) < 0.0) iv.emplace_back(root_solve(f, s_peak, hi), hi);
    }
    const double lambda = model_.param();
    for (auto& [a, c] : iv) R.intervals.emplace_back(lambda * (x * kPi + a), lambda * (x * kPi + c));
    return R;
}

Region RegularizedTransfer::region(std::int64_t j) const {
    if (j < 1 || j > J_) throw DomainError("transfer: region index outside the band");
    if (j <= static_cast<std::int64_t>(regions_.size())) return regions_[static_cast<std::size_t>(j - 1)];
    return make_region(j);
}

double RegularizedTransfer::distortion(std::int64_t j) const {
    const Region R = region(j);
    const double lambda = model_.param(), x = static_cast<double>(j), v = R.threshold;
    const auto f = [&](double s) {
        const double e = v - g(x, s);
        return e > 0.0 ? e * e : 0.0;
    };
    double total = 0.0;
    for (const auto& [ta, tc] : R.intervals) {
        const double a = ta / lambda - x * kPi, c = tc / lambda - x * kPi;
        // Smooth on each side of the root; adaptive rules stall on the tiny magnitudes.
        if (a < 0.0 && c > 0.0) total += integrate_gl(f, a, 0.0, 4) + integrate_gl(f, 0.0, c, 4);
        else total += integrate_gl(f, a, c, 4);
    }
    return lambda * total;
}

double RegularizedTransfer::distortion_continuous(double x) const {
    const double v = plan_.v_n / std::pow(x, plan_.tilt);
    const double lo = -0.5 * kPi, hi = 0.5 * kPi;
    const auto f = [&](double s) { return g(x, s) - v; };
    const auto sq = [&](double s) {
        const double e = v - g(x, s);
        return e > 0.0 ? e * e : 0.0;
    };
    // Fixed Gauss-Legendre: the pieces are smooth, and a deterministic inner rule keeps the
    // outer adaptive integral over x from chasing quadrature noise.
    const auto quad = [&](double a, double c) { return integrate_gl(sq, a, c, 4); };
    const double s_peak = lobe_peak(x);
    const double left = f(lo) <= 0.0 ? lo : root_solve(f, lo, 0.0);
    double total = quad(left, 0.0);
    if (f(s_peak) <= 0.0) {
        total += quad(0.0, hi);
    } else {
        total += quad(0.0, root_solve(f, 0.0, s_peak));
        if (f(hi) < 0.0) total += quad(root_solve(f, s_peak, hi), hi);
    }
    return model_.param() * total;
}

RegularizedTransfer build_transfer(const NoiseModel& model, const BandwidthPlan& plan, TransferOptions options) {
    return RegularizedTransfer(model, plan, options);
}

// ---------------------------------------------------------------- T, S, psi*

double tail_T(const NoiseModel& model, double M_n) {
    if (!(M_n > 0.0)) throw DomainError("tail_T: M_n must be positive");
    const auto [A, tau] = energy_1d(model, M_n);
    if (!std::isfinite(A)) return kInf;
    const std::size_t d = model.dim();
    // A^d - (A - tau)^d without cancellation.
    double sum = 0.0;
    for (std::size_t k = 1; k <= d; ++k) {
        const double c = boost::math::binomial_coefficient<double>(static_cast<unsigned>(d), static_cast<unsigned>(k));
        const double term = c * std::pow(A, static_cast<double>(d - k)) * std::pow(tau, static_cast<double>(k));
        sum += (k % 2 ? term : -term);
    }
    return std::sqrt(std::max(0.0, sum));
}

double reg_S(const RegularizedTransfer& transfer) {
    if (transfer.trivial() || transfer.root_count() == 0) return 0.0;
    const std::int64_t J = transfer.root_count();
    const std::int64_t E = static_cast<std::int64_t>(transfer.regions().size());
    double sum = 0.0;
    for (std::int64_t j = 1; j <= E; ++j) sum += transfer.distortion(j);
    if (J > E) {
        if (J - 1 > E) {
            // Midpoint rule: sum_{j=E+1}^{J-1} F(j) ~ int_{E+1/2}^{J-1/2} F(x) dx, on a log scale.
            const auto h = [&](double y) {
                const double x = std::exp(y);
                return x * transfer.distortion_continuous(x);
            };
            sum += integrate(h, std::log(E + 0.5), std::log(static_cast<double>(J) - 0.5), 1e-9);
        }
        sum += transfer.distortion(J);
    }
    return std::sqrt(2.0 * sum);
}

double psi_star_l2(const ScaledKernel& Kn, const RegularizedTransfer& transfer) {
    if (transfer.band() < Kn.band() * (1.0 - 1e-12))
        throw DomainError("psi_star: transfer band must cover the kernel band");
    const double b = Kn.b;
    std::vector<double> knots;
    if (!transfer.trivial() && transfer.root_count() > 0) {
        const double lambda = transfer.model().param();
        const double B = Kn.band();
        const std::int64_t jmax = std::min<std::int64_t>(
            transfer.root_count(), static_cast<std::int64_t>(std::ceil(B / (kPi * lambda))) + 1);
        for (std::int64_t j = 1; j <= jmax; ++j) {
            knots.push_back(kPi * lambda * j);
            knots.push_back(kPi * lambda * (j + 0.5));
            for (const auto& [a, c] : transfer.region(j).intervals) {
                knots.push_back(a);
                knots.push_back(c);
            }
        }
        std::erase_if(knots, [&](double t) { return t <= 0.0 || t >= B; });
    }
    const double e1 = filter_energy_1d(Kn.base, b, [&](double t) { return std::abs(transfer.evaluate_1d(t)); }, knots);
    return std::sqrt(std::pow(e1, static_cast<double>(Kn.dim())));
}

PsiStarResult psi_star(const ScaledKernel& Kn, const RegularizedTransfer& transfer, const GridBox& space) {
    if (Kn.dim() != transfer.model().dim() || space.dim() != Kn.dim())
        throw StructuralError("psi_star: dimension mismatch");
    if (transfer.band() < Kn.band() * (1.0 - 1e-12))
        throw DomainError("psi_star: transfer band must cover the kernel band");
    GridFunction spec = GridFunction::sample(space, Domain::frequency, [&](std::span<const double> t) {
        const double k = Kn.transform(t);
        if (k == 0.0) return cplx(0.0);
        const cplx h = transfer.evaluate(t);
        const cplx v = k / h;
        if (std::abs(h) == 0.0 || !std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw NumericError("psi_star: zero or underflowing regularized transfer on the band");
        return v;
    });
    PsiStarResult out;
    out.spatial = inverse_fourier(spec);
    out.spectrum = std::move(spec);
    out.l2_norm = psi_star_l2(Kn, transfer);
    return out;
}

// ---------------------------------------------------------------- estimates

GridFunction smoothed_estimate(const GridFunction& p_hat, const BandwidthPlan& plan, const FlatTopKernel& K) {
    if (p_hat.domain() != Domain::spatial) throw StructuralError("smoothed_estimate: spatial input required");
    const ScaledKernel Kn = scale(K, plan.b);
    GridFunction out = inverse_fourier(fourier(p_hat) * kernel_spectrum(Kn, p_hat.space_box()));
    return is_real(p_hat) ? real_part(out) : out;
}

GridFunction derivative_estimate(const GridFunction& p_hat, const BandwidthPlan& plan, const FlatTopKernel& K,
                                 const MultiIndex& s, const SmoothnessClass& klass) {
    if (p_hat.domain() != Domain::spatial) throw StructuralError("derivative_estimate: spatial input required");
    if (s.order() > klass.q) throw DomainError("derivative_estimate: derivative order exceeds q of the class");
    if (s.order() > K.derivative_budget())
        throw DomainError("derivative_estimate: derivative order exceeds the kernel budget");
    const ScaledKernel Kn = scale(K, plan.b);
    GridFunction out = inverse_fourier(fourier(p_hat) * kernel_spectrum(Kn, p_hat.space_box(), s));
    return is_real(p_hat) ? real_part(out) : out;
}

// ---------------------------------------------------------------- bound report

namespace {

void fill_model_terms(BoundReport& rep, const RegularizedTransfer& transfer, const FlatTopKernel& K,
                      const SmoothnessClass& klass) {
    const BandwidthPlan& plan = transfer.plan();
    const ScaledKernel Kn = scale(K, plan.b);
    rep.b = plan.b;
    rep.m = plan.m;
    rep.v_n = plan.v_n;
    rep.M_n = plan.M_n;
    rep.psi_star_l2 = psi_star_l2(Kn, transfer);
    rep.T = tail_T(transfer.model(), plan.M_n);
    rep.S = reg_S(transfer);
    rep.approx_term = std::pow(plan.b, klass.q) * klass.modulus(plan.b);
    rep.degenerate_regions = transfer.degenerate_count();
}

void finish(BoundReport& rep) {
    rep.c_lhs = 1.0 - rep.c_hat * rep.psi_star_l2 * (rep.S + rep.T);
    if (std::isnan(rep.c_lhs)) rep.c_lhs = -kInf;
    rep.transfer_term = rep.psi_star_l2 * rep.a_n;
    rep.rhs = rep.c_right * rep.approx_term + rep.c_hat_l1 * rep.transfer_term;
    rep.c_lhs_positive = rep.c_lhs > 0.0;
    rep.c_lhs_ge_half = rep.c_lhs >= 0.5;
    rep.implied_bound = rep.c_lhs_positive ? rep.rhs / rep.c_lhs : kInf;
    rep.finite = std::isfinite(rep.psi_star_l2) && std::isfinite(rep.T) && std::isfinite(rep.S) &&
                 std::isfinite(rep.c_lhs) && std::isfinite(rep.rhs) && std::isfinite(rep.c_hat_l1);
}

}  // namespace

BoundReport bound_terms(const RegularizedTransfer& transfer, const FlatTopKernel& K,
                        const SmoothnessClass& klass, double a_n, const GridBox& space) {
    BoundReport rep;
    fill_model_terms(rep, transfer, K, klass);
    rep.a_n = a_n;
    rep.c_right = 1.0;
    const ScaledKernel Kn = scale(K, transfer.plan().b);
    try {
        const PsiStarResult ps = psi_star(Kn, transfer, space);
        const double l2_grid = lp_norm(ps.spatial, NormOrder(2.0));
        const double l2_spec = lp_norm(ps.spectrum, NormOrder(2.0));
        rep.c_hat = l2_grid / l2_spec;
        rep.c_hat_l1 = lp_norm(ps.spatial, NormOrder(1.0)) / rep.psi_star_l2;
    } catch (const NumericError&) {
        rep.c_hat = parseval_constant(K.dim());
        rep.c_hat_l1 = kInf;
    }
    finish(rep);
    return rep;
}

BoundReport bound_report(const GridFunction& p_hat, const GridFunction& p, const GridFunction& f_hat,
                         const GridFunction& f_p, const RegularizedTransfer& transfer, const FlatTopKernel& K,
                         const SmoothnessClass& klass, NormOrder u) {
    const GridBox& space = p_hat.space_box();
    if (p.space_box() != space || f_hat.space_box() != space || f_p.space_box() != space)
        throw StructuralError("bound_report: all inputs must share one grid");
    BoundReport rep;
    fill_model_terms(rep, transfer, K, klass);
    const ScaledKernel Kn = scale(K, transfer.plan().b);
    const PsiStarResult ps = psi_star(Kn, transfer, space);
    const double psi_l1 = lp_norm(ps.spatial, NormOrder(1.0));
    rep.c_hat = lp_norm(ps.spatial, NormOrder(2.0)) / lp_norm(ps.spectrum, NormOrder(2.0));
    rep.c_hat_l1 = psi_l1 / rep.psi_star_l2;

    const GridFunction diff = p_hat - p;
    const GridFunction fdiff = f_hat - f_p;
    const GridFunction Kspec = kernel_spectrum(Kn, space);
    const GridFunction Dspec = fourier(diff);
    rep.error = lp_norm(diff, u);
    rep.a_n = lp_norm(fdiff, u);
    rep.smoothed_diff = lp_norm(inverse_fourier(Kspec * Dspec), u);
    const GridFunction H = transfer_spectrum(transfer.model(), space);
    const GridFunction Hs = transfer.spectrum(space);
    rep.chain_regularization = lp_norm(inverse_fourier(ps.spectrum * (Hs - H) * Dspec), u);
    rep.chain_transfer = lp_norm(inverse_fourier(ps.spectrum * fourier(fdiff)), u);
    rep.young_bound = psi_l1 * rep.a_n;

    const double approx_hat = lp_norm(p_hat - smoothed_estimate(p_hat, transfer.plan(), K), u);
    const double approx_p = lp_norm(smoothed_estimate(p, transfer.plan(), K) - p, u);
    rep.c_right = rep.approx_term > 0.0 ? (approx_hat + approx_p) / rep.approx_term : 0.0;
    const double denom = rep.psi_star_l2 * (rep.S + rep.T) * rep.error;
    rep.c_left_measured = denom > 0.0 ? rep.chain_regularization / denom : 0.0;

    constexpr double slack = 1e-8;
    rep.chain_ok = rep.smoothed_diff <= rep.chain_regularization + rep.chain_transfer +
                                            slack * (1.0 + rep.smoothed_diff);
    rep.young_ok = rep.chain_transfer <= rep.young_bound + slack * (1.0 + rep.young_bound);
    finish(rep);
    return rep;
}

}  // namespace mixdecon
