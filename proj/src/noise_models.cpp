#include "mixdecon/noise_models.hpp"

#include <algorithm>
#include <boost/math/special_functions/binomial.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/factorials.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "mixdecon/errors.hpp"
#include "mixdecon/spec_string.hpp"

namespace mixdecon {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Density of the sum of m independent Uniform[-c, c] variables.
double uniform_sum_density(int m, double c, double x) {
    const double ax = std::abs(x);
    const double edge = m * c;
    if (ax > edge) return 0.0;
    if (m == 1) return ax == edge ? 0.25 / c : 0.5 / c;
    const double z = (x + edge) / (2.0 * c);  // Irwin-Hall variable on [0, m]
    double s = 0.0;
    for (int k = 0; k <= static_cast<int>(std::floor(z)) && k <= m; ++k) {
        const double term = boost::math::binomial_coefficient<double>(m, k) * std::pow(z - k, m - 1);
        s += (k % 2 ? -term : term);
    }
    return std::max(0.0, s / boost::math::factorial<double>(m - 1) / (2.0 * c));
}

}  // namespace

double SuperSmooth::alpha_bar() const {
    return std::accumulate(alpha.begin(), alpha.end(), 0.0) / static_cast<double>(alpha.size());
}

double Smooth::beta_bar() const {
    return std::accumulate(beta.begin(), beta.end(), 0.0) / static_cast<double>(beta.size());
}

NoiseModel::NoiseModel(NoiseFamily f, std::size_t d, double param, int m)
    : family_(f), d_(d), param_(param), m_(m) {
    if (d == 0) throw DomainError("noise model: dimension must be positive");
    if (!(param > 0.0)) throw DomainError("noise model: scale parameter must be positive");
    switch (f) {
        case NoiseFamily::gaussian:
            klass_ = SuperSmooth{std::vector<double>(d, 0.5 * param * param), 2.0,
                                 std::vector<double>(d, 0.0)};
            break;
        case NoiseFamily::cauchy:
            klass_ = SuperSmooth{std::vector<double>(d, param), 1.0, std::vector<double>(d, 0.0)};
            break;
        case NoiseFamily::identity:
            klass_ = SuperSmooth{std::vector<double>(d, 0.0), 1.0, std::vector<double>(d, 0.0)};
            break;
        case NoiseFamily::exponential:
            klass_ = Smooth{std::vector<double>(d, 1.0)};
            c1_ = 1.0 / std::sqrt(1.0 + param * param);
            c2_ = 1.0 / param;
            onset_ = 1.0;
            break;
        case NoiseFamily::laplace:
            klass_ = Smooth{std::vector<double>(d, 2.0)};
            c1_ = 1.0 / (1.0 + param * param);
            c2_ = 1.0 / (param * param);
            onset_ = 1.0;
            break;
        case NoiseFamily::uniform:
            if (d != 1) throw UnsupportedVariant("oscillatory noise is implemented for d = 1 only");
            if (m < 1) throw DomainError("uniform noise: fold count m must be >= 1");
            klass_ = Oscillatory{m, static_cast<double>(m), param, 0.5 * kPi * param};
            c1_ = c2_ = std::pow(param, m);
            onset_ = 0.5 * kPi * param;
            break;
    }
}

NoiseModel NoiseModel::gaussian(std::size_t d, double sigma) {
    return NoiseModel(NoiseFamily::gaussian, d, sigma, 1);
}
NoiseModel NoiseModel::cauchy(std::size_t d, double scale) {
    return NoiseModel(NoiseFamily::cauchy, d, scale, 1);
}
NoiseModel NoiseModel::exponential(std::size_t d, double scale) {
    return NoiseModel(NoiseFamily::exponential, d, scale, 1);
}
NoiseModel NoiseModel::laplace(std::size_t d, double scale) {
    return NoiseModel(NoiseFamily::laplace, d, scale, 1);
}
NoiseModel NoiseModel::uniform(int m, double lambda) {
    return NoiseModel(NoiseFamily::uniform, 1, lambda, m);
}
NoiseModel NoiseModel::identity(std::size_t d) { return NoiseModel(NoiseFamily::identity, d, 1.0, 1); }

std::string NoiseModel::spec() const {
    SpecString s;
    switch (family_) {
        case NoiseFamily::gaussian: s.name = "gaussian"; s.params["sigma"] = param_; break;
        case NoiseFamily::cauchy: s.name = "cauchy"; s.params["scale"] = param_; break;
        case NoiseFamily::exponential: s.name = "exponential"; s.params["scale"] = param_; break;
        case NoiseFamily::laplace: s.name = "laplace"; s.params["scale"] = param_; break;
        case NoiseFamily::uniform:
            s.name = "uniform";
            s.params["m"] = m_;
            s.params["lambda"] = param_;
            break;
        case NoiseFamily::identity: s.name = "identity"; break;
    }
    if (d_ != 1) s.params["d"] = static_cast<double>(d_);
    return s.str();
}

cplx NoiseModel::htilde_1d(double t) const {
    switch (family_) {
        case NoiseFamily::gaussian: return std::exp(-0.5 * param_ * param_ * t * t);
        case NoiseFamily::cauchy: return std::exp(-param_ * std::abs(t));
        case NoiseFamily::exponential: return 1.0 / cplx(1.0, param_ * t);
        case NoiseFamily::laplace: return 1.0 / (1.0 + param_ * param_ * t * t);
        case NoiseFamily::uniform: {
            const double s = t / param_;
            if (s == 0.0) return 1.0;
            return std::pow(std::sin(s) / s, m_);
        }
        case NoiseFamily::identity: return 1.0;
    }
    return 0.0;
}

cplx NoiseModel::htilde(std::span<const double> t) const {
    if (t.size() != d_) throw StructuralError("htilde: dimension mismatch");
    cplx v = 1.0;
    for (double x : t) v *= htilde_1d(x);
    return v;
}

double NoiseModel::density_1d(double x) const {
    switch (family_) {
        case NoiseFamily::gaussian:
            return std::exp(-0.5 * x * x / (param_ * param_)) / (param_ * std::sqrt(2.0 * kPi));
        case NoiseFamily::cauchy: return param_ / (kPi * (param_ * param_ + x * x));
        case NoiseFamily::exponential:
            if (x < 0.0) return 0.0;
            return x == 0.0 ? 0.5 / param_ : std::exp(-x / param_) / param_;
        case NoiseFamily::laplace: return std::exp(-std::abs(x) / param_) / (2.0 * param_);
        case NoiseFamily::uniform: return uniform_sum_density(m_, 1.0 / param_, x);
        case NoiseFamily::identity:
            throw UnsupportedVariant("identity noise is a point mass without a density");
    }
    return 0.0;
}

double NoiseModel::density(std::span<const double> x) const {
    if (x.size() != d_) throw StructuralError("h_density: dimension mismatch");
    double v = 1.0;
    for (double c : x) v *= density_1d(c);
    return v;
}

std::pair<double, double> NoiseModel::support_1d() const {
    switch (family_) {
        case NoiseFamily::exponential: return {0.0, kInf};
        case NoiseFamily::uniform: return {-m_ / param_, m_ / param_};
        case NoiseFamily::identity: return {0.0, 0.0};
        default: return {-kInf, kInf};
    }
}

std::pair<double, double> NoiseModel::effective_support_1d(double tail) const {
    switch (family_) {
        case NoiseFamily::gaussian: {
            const double z = std::sqrt(2.0) * boost::math::erfc_inv(tail);
            return {-param_ * z, param_ * z};
        }
        case NoiseFamily::cauchy: {
            const double w = param_ * std::tan(0.5 * kPi * (1.0 - tail));
            return {-w, w};
        }
        case NoiseFamily::exponential: return {0.0, -param_ * std::log(tail)};
        case NoiseFamily::laplace: {
            const double w = -param_ * std::log(tail);
            return {-w, w};
        }
        default: return support_1d();
    }
}

double NoiseModel::envelope_1d(double t) const {
    const double a = std::abs(t);
    switch (family_) {
        case NoiseFamily::gaussian: return std::exp(-0.5 * param_ * param_ * a * a);
        case NoiseFamily::cauchy: return std::exp(-param_ * a);
        case NoiseFamily::exponential: return 1.0 / a;
        case NoiseFamily::laplace: return 1.0 / (a * a);
        case NoiseFamily::uniform: return std::pow(std::abs(std::sin(a / param_)), m_) * std::pow(a, -m_);
        case NoiseFamily::identity: return 1.0;
    }
    return 0.0;
}

NoiseModel parse_noise_model(const std::string& text, std::size_t d) {
    const SpecString s = SpecString::parse(text);
    const auto dim = static_cast<std::size_t>(s.get("d", static_cast<double>(d)));
    if (s.name == "gaussian" || s.name == "normal") {
        s.allow_only("sigma,d");
        return NoiseModel::gaussian(dim, s.get("sigma", 1.0));
    }
    if (s.name == "cauchy") {
        s.allow_only("scale,d");
        return NoiseModel::cauchy(dim, s.get("scale", 1.0));
    }
    if (s.name == "exponential") {
        s.allow_only("scale,d");
        return NoiseModel::exponential(dim, s.get("scale", 1.0));
    }
    if (s.name == "laplace") {
        s.allow_only("scale,d");
        return NoiseModel::laplace(dim, s.get("scale", 1.0));
    }
    if (s.name == "uniform" || s.name == "sinc") {
        s.allow_only("m,lambda,d");
        if (dim != 1) throw UnsupportedVariant("oscillatory noise is implemented for d = 1 only");
        const double m = s.get("m", 1.0);
        if (m != std::floor(m)) throw DomainError("uniform noise: m must be an integer");
        return NoiseModel::uniform(static_cast<int>(m), s.get("lambda", 1.0));
    }
    if (s.name == "identity" || s.name == "none") {
        s.allow_only("d");
        return NoiseModel::identity(dim);
    }
    throw DomainError("unknown noise model '" + s.name + "'");
}

cplx htilde(const NoiseModel& model, std::span<const double> t) { return model.htilde(t); }

double h_density(const NoiseModel& model, std::span<const double> x) { return model.density(x); }

double envelope_inf(const NoiseModel& model, std::span<const double> half_widths) {
    if (model.is_oscillatory())
        throw UnsupportedVariant("envelope_inf: oscillatory transfer has infimum 0 on any band past its first root");
    if (half_widths.size() != model.dim()) throw StructuralError("envelope_inf: dimension mismatch");
    double v = 1.0;
    for (double B : half_widths) v *= std::abs(model.htilde_1d(std::abs(B)));
    return v;
}

double envelope_inf(const NoiseModel& model, double half_width) {
    const std::vector<double> hw(model.dim(), half_width);
    return envelope_inf(model, hw);
}

std::vector<double> ZeroSet::roots() const {
    if (count > 10'000'000) throw DomainError("ZeroSet: too many roots to materialize");
    std::vector<double> r;
    const std::int64_t J = max_index();
    for (std::int64_t j = -J; j <= J; ++j)
        if (j != 0) r.push_back(root(j));
    return r;
}

ZeroSet zeros_in_band(const NoiseModel& model, double M_n) {
    const auto* osc = std::get_if<Oscillatory>(&model.klass());
    if (!osc) throw UnsupportedVariant("zeros_in_band: model has no zeros");
    if (!(M_n > 0.0)) throw DomainError("zeros_in_band: band must be positive");
    ZeroSet z;
    z.band = M_n;
    z.period = kPi * osc->lambda;
    z.count = 2 * static_cast<std::int64_t>(std::floor(M_n / z.period));
    z.separation = z.period;
    return z;
}

std::vector<double> sample_noise(const NoiseModel& model, std::size_t n, Rng& rng) {
    if (n == 0) throw DomainError("sample_noise: n must be >= 1");
    std::vector<double> out(n * model.dim());
    const double p = model.param();
    for (auto& v : out) {
        switch (model.family()) {
            case NoiseFamily::gaussian: v = p * rng.normal(); break;
            case NoiseFamily::cauchy: v = p * rng.cauchy(); break;
            case NoiseFamily::exponential: v = p * rng.exponential(); break;
            case NoiseFamily::laplace: v = p * rng.laplace(); break;
            case NoiseFamily::uniform: {
                double s = 0.0;
                for (int k = 0; k < model.order(); ++k) s += rng.uniform(-1.0 / p, 1.0 / p);
                v = s;
                break;
            }
            case NoiseFamily::identity: v = 0.0; break;
        }
    }
    return out;
}

GridFunction transfer_spectrum(const NoiseModel& model, const GridBox& space) {
    if (space.dim() != model.dim()) throw StructuralError("transfer_spectrum: dimension mismatch");
    return GridFunction::sample(space, Domain::frequency,
                                [&](std::span<const double> t) { return model.htilde(t); });
}

}  // namespace mixdecon
