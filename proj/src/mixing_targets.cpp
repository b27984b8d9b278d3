#include "mixdecon/mixing_targets.hpp"

#include <algorithm>
#include <boost/math/special_functions/binomial.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numbers>

#include "mixdecon/errors.hpp"
#include "mixdecon/rng.hpp"
#include "mixdecon/spec_string.hpp"

namespace mixdecon {

namespace {

constexpr double kTwoBumpCenter = 0.45;
constexpr double kTwoBumpWidth = 0.55;
constexpr double kTwoBumpPower = 3.0;
constexpr int kBumpOrder = 6;

double falling(double a, int i) {
    double v = 1.0;
    for (int j = 0; j < i; ++j) v *= a - j;
    return v;
}

double power_bump_const(double a) {
    return std::exp(std::lgamma(a + 1.5) - std::lgamma(a + 1.0)) / std::sqrt(std::numbers::pi);
}

// k-th derivative of C (1-u^2)^a on |u| < 1.
double power_bump(double a, double u, int k) {
    if (std::abs(u) >= 1.0) return 0.0;
    double s = 0.0;
    for (int i = 0; i <= k; ++i) {
        const double left = ((i % 2) ? -1.0 : 1.0) * falling(a, i) * std::pow(1.0 - u, a - i);
        const double right = falling(a, k - i) * std::pow(1.0 + u, a - (k - i));
        s += boost::math::binomial_coefficient<double>(k, i) * left * right;
    }
    return power_bump_const(a) * s;
}

using Poly = std::vector<double>;

double poly_eval(const Poly& p, double u) {
    double v = 0.0;
    for (std::size_t i = p.size(); i-- > 0;) v = v * u + p[i];
    return v;
}

Poly poly_mul(const Poly& a, const Poly& b) {
    Poly c(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) c[i + j] += a[i] * b[j];
    return c;
}

Poly poly_add(Poly a, const Poly& b) {
    if (b.size() > a.size()) a.resize(b.size(), 0.0);
    for (std::size_t i = 0; i < b.size(); ++i) a[i] += b[i];
    return a;
}

Poly poly_deriv(const Poly& p) {
    if (p.size() <= 1) return {0.0};
    Poly d(p.size() - 1);
    for (std::size_t i = 1; i < p.size(); ++i) d[i - 1] = static_cast<double>(i) * p[i];
    return d;
}

// Numerators Q_k with d^k/du^k exp(-1/(1-u^2)) = exp(-1/(1-u^2)) Q_k(u) / (1-u^2)^{2k}.
std::vector<Poly> bump_numerators(int kmax) {
    const Poly one_minus_u2{1.0, 0.0, -1.0};
    const Poly sq = poly_mul(one_minus_u2, one_minus_u2);
    std::vector<Poly> Q{{1.0}};
    for (int k = 0; k < kmax; ++k) {
        const Poly& q = Q.back();
        Poly next = poly_mul(Poly{0.0, -2.0}, q);
        next = poly_add(next, poly_mul(sq, poly_deriv(q)));
        next = poly_add(next, poly_mul(poly_mul(Poly{0.0, 4.0 * k}, one_minus_u2), q));
        Q.push_back(std::move(next));
    }
    return Q;
}

}  // namespace

double SmoothnessClass::modulus(double delta) const { return L * std::pow(delta, gamma); }

MixingDensity::MixingDensity(TargetFamily f, double param, double lo, double hi, std::size_t d)
    : family_(f), param_(param), lo_(lo), hi_(hi), d_(d) {
    if (d == 0) throw DomainError("target: dimension must be positive");
    if (!(lo < hi)) throw DomainError("target: support bounds must satisfy lo < hi");
    switch (f) {
        case TargetFamily::spline_holder:
            if (!(param > 0.0) || !std::isfinite(param))
                throw DomainError("spline target: qtilde must be positive");
            klass_.q = static_cast<int>(std::ceil(param)) - 1;
            klass_.gamma = param - klass_.q;
            break;
        case TargetFamily::smooth_bump: {
            bump_polys_ = bump_numerators(kBumpOrder + 1);
            const double z = integrate([](double u) { return std::exp(-1.0 / (1.0 - u * u)); },
                                       -1.0, 1.0, 1e-14);
            norm_ = 1.0 / z;
            klass_.q = kBumpOrder;
            klass_.gamma = 1.0;
            break;
        }
        case TargetFamily::two_bump:
            klass_.q = static_cast<int>(kTwoBumpPower) - 1;
            klass_.gamma = 1.0;
            break;
    }
    const double total = integrate([&](double y) { return value_1d(y); }, lo, hi, 1e-13);
    if (!(std::abs(total - 1.0) <= 1e-8))
        throw DomainError("target: density does not normalize (mass " + std::to_string(total) + ")");
    calibrate_modulus();
}

MixingDensity MixingDensity::smooth_bump(double lo, double hi, std::size_t d) {
    return MixingDensity(TargetFamily::smooth_bump, 0.0, lo, hi, d);
}

MixingDensity MixingDensity::spline_holder(double qtilde, double lo, double hi, std::size_t d) {
    return MixingDensity(TargetFamily::spline_holder, qtilde, lo, hi, d);
}

MixingDensity MixingDensity::two_bump(double lo, double hi, std::size_t d) {
    return MixingDensity(TargetFamily::two_bump, 0.0, lo, hi, d);
}

std::string MixingDensity::spec() const {
    SpecString s;
    switch (family_) {
        case TargetFamily::smooth_bump: s.name = "bump"; break;
        case TargetFamily::spline_holder:
            s.name = "spline";
            s.params["qtilde"] = param_;
            break;
        case TargetFamily::two_bump: s.name = "twobump"; break;
    }
    s.params["lo"] = lo_;
    s.params["hi"] = hi_;
    if (d_ != 1) s.params["d"] = static_cast<double>(d_);
    return s.str();
}

double MixingDensity::shape(double u, int k) const {
    if (std::abs(u) >= 1.0) return 0.0;
    switch (family_) {
        case TargetFamily::spline_holder: return power_bump(param_, u, k);
        case TargetFamily::smooth_bump: {
            const double s = 1.0 - u * u;
            const double logv = -1.0 / s - 2.0 * k * std::log(s);
            return norm_ * std::exp(logv) * poly_eval(bump_polys_[k], u);
        }
        case TargetFamily::two_bump: {
            const double inv = 1.0 / std::pow(kTwoBumpWidth, k + 1);
            return 0.5 * inv *
                   (power_bump(kTwoBumpPower, (u + kTwoBumpCenter) / kTwoBumpWidth, k) +
                    power_bump(kTwoBumpPower, (u - kTwoBumpCenter) / kTwoBumpWidth, k));
        }
    }
    return 0.0;
}

double MixingDensity::value_1d(double y) const { return derivative_1d(y, 0); }

double MixingDensity::derivative_1d(double y, int k) const {
    if (k < 0 || k > klass_.q)
        throw DomainError("target derivative order exceeds the smoothness class");
    const double w = 0.5 * (hi_ - lo_);
    const double c = 0.5 * (hi_ + lo_);
    return shape((y - c) / w, k) / std::pow(w, k + 1);
}

double MixingDensity::value(std::span<const double> y) const {
    if (y.size() != d_) throw StructuralError("target: dimension mismatch");
    double v = 1.0;
    for (double c : y) {
        v *= value_1d(c);
        if (v == 0.0) break;
    }
    return v;
}

double MixingDensity::derivative(std::span<const double> y, const MultiIndex& s) const {
    if (y.size() != d_ || s.dim() != d_) throw StructuralError("target: dimension mismatch");
    if (s.order() > klass_.q) throw DomainError("target derivative order exceeds the smoothness class");
    double v = 1.0;
    for (std::size_t a = 0; a < d_; ++a) v *= derivative_1d(y[a], s.s[a]);
    return v;
}

GridFunction MixingDensity::sample(const GridBox& space) const {
    return GridFunction::sample(space, Domain::spatial,
                                [&](std::span<const double> y) { return cplx(value(y)); });
}

GridFunction MixingDensity::sample_derivative(const GridBox& space, const MultiIndex& s) const {
    return GridFunction::sample(space, Domain::spatial,
                                [&](std::span<const double> y) { return cplx(derivative(y, s)); });
}

void MixingDensity::calibrate_modulus() {
    const int q = klass_.q;
    const double g = klass_.gamma;
    const double w = 0.5 * (hi_ - lo_);
    const double c = 0.5 * (hi_ + lo_);
    std::vector<double> ys;
    const int ny = 1200;
    for (int i = 0; i <= ny; ++i) ys.push_back(lo_ - 0.1 * w + 2.2 * w * i / ny);
    ys.push_back(lo_);
    ys.push_back(hi_);
    if (family_ == TargetFamily::two_bump)
        for (double k : {-1.0, 1.0})
            for (double e : {-1.0, 1.0}) ys.push_back(c + w * (k * kTwoBumpCenter + e * kTwoBumpWidth));
    double best = 0.0;
    for (int j = 0; j <= 60; ++j) {
        const double delta = w * std::pow(10.0, -5.0 + 5.3 * j / 60.0);
        const double dg = std::pow(delta, g);
        for (double y : ys) {
            const double a = derivative_1d(y, q);
            for (double sgn : {-1.0, 1.0}) {
                const double r = std::abs(derivative_1d(y + sgn * delta, q) - a) / dg;
                best = std::max(best, r);
            }
        }
    }
    double peak = 0.0;
    for (double y : ys) peak = std::max(peak, value_1d(y));
    klass_.L = 1.1 * best * std::pow(peak, static_cast<double>(d_ - 1));
}

MixingDensity make_target(const std::string& family, double param, double lo, double hi,
                          std::size_t d) {
    if (family == "bump" || family == "smooth_bump") return MixingDensity::smooth_bump(lo, hi, d);
    if (family == "spline" || family == "spline_holder")
        return MixingDensity::spline_holder(param, lo, hi, d);
    if (family == "twobump" || family == "two_bump") return MixingDensity::two_bump(lo, hi, d);
    throw DomainError("unknown target family '" + family + "'");
}

MixingDensity parse_target(const std::string& text, std::size_t d) {
    const SpecString s = SpecString::parse(text);
    const auto dim = static_cast<std::size_t>(s.get("d", static_cast<double>(d)));
    if (s.name == "spline" || s.name == "spline_holder") s.allow_only("qtilde,lo,hi,d");
    else s.allow_only("lo,hi,d");
    return make_target(s.name, s.get("qtilde", 2.0), s.get("lo", -1.0), s.get("hi", 1.0), dim);
}

GridFunction forward_density(const MixingDensity& p, const NoiseModel& h, const GridBox& space) {
    if (space.dim() != p.dim() || h.dim() != p.dim())
        throw StructuralError("forward_density: dimension mismatch");
    const double tail = h.family() == NoiseFamily::cauchy ? 5e-4 : 1e-12;
    const auto [elo, ehi] = h.effective_support_1d(tail);
    std::vector<Axis> axes;
    for (const auto& ax : space.axes()) {
        const auto [plo, phi] = p.support_1d();
        if (plo < ax.lo || phi > ax.hi)
            throw DomainError("forward_density: grid does not contain the support of p");
        const double dx = ax.spacing();
        const double lo = dx * std::floor(elo / dx);
        const auto need = static_cast<std::size_t>(std::ceil((ehi - lo) / dx)) + 1;
        const std::size_t n = next_pow2(std::max<std::size_t>(16, need));
        axes.push_back(Axis{lo, lo + static_cast<double>(n) * dx, n});
    }
    const GridBox hbox(std::move(axes));
    const GridFunction hs = GridFunction::sample(
        hbox, Domain::spatial, [&](std::span<const double> x) { return cplx(h.density(x)); });
    return convolve(p.sample(space), hs);
}

GridFunction apply_noise(const GridFunction& f, const NoiseModel& h) {
    if (f.domain() != Domain::spatial) throw StructuralError("apply_noise: expects a spatial function");
    const GridFunction out = inverse_fourier(fourier(f) * transfer_spectrum(h, f.space_box()));
    if (f.max_abs_imag() == 0.0) return map_values(out, [](cplx v) { return cplx(v.real()); });
    return out;
}

std::vector<double> sample_mixture(const MixingDensity& p, const NoiseModel& h, std::size_t n,
                                   std::uint64_t seed) {
    if (n == 0) throw DomainError("sample_mixture: n must be >= 1");
    if (h.dim() != p.dim()) throw StructuralError("sample_mixture: dimension mismatch");
    constexpr std::size_t N = 1u << 16;
    const auto [lo, hi] = p.support_1d();
    const double dy = (hi - lo) / static_cast<double>(N - 1);
    std::vector<double> cdf(N, 0.0);
    double prev = p.value_1d(lo);
    for (std::size_t i = 1; i < N; ++i) {
        const double cur = p.value_1d(lo + static_cast<double>(i) * dy);
        cdf[i] = cdf[i - 1] + 0.5 * (prev + cur) * dy;
        prev = cur;
    }
    for (auto& c : cdf) c /= cdf.back();

    Rng rng(seed);
    std::vector<double> x(n * p.dim());
    for (auto& v : x) {
        const double u = rng.uniform();
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        const std::size_t k = std::clamp<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), 1, N - 1);
        const double c0 = cdf[k - 1], c1 = cdf[k];
        const double frac = c1 > c0 ? (u - c0) / (c1 - c0) : 0.0;
        v = lo + (static_cast<double>(k - 1) + frac) * dy;
    }
    const std::vector<double> eps = sample_noise(h, n, rng);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += eps[i];
    return x;
}

}  // namespace mixdecon
