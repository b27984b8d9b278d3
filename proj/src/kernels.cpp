#include "mixdecon/kernels.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/binomial.hpp>
#include <boost/math/special_functions/factorials.hpp>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>

#include "mixdecon/errors.hpp"

namespace mixdecon {

namespace {

constexpr double kPi = std::numbers::pi;

// D_k(y) = d^k/dy^k of sin(y) shifted: sin, cos, -sin, -cos.
double trig_cycle(int k, double y) {
    switch (k % 4) {
        case 0: return std::sin(y);
        case 1: return std::cos(y);
        case 2: return -std::sin(y);
        default: return -std::cos(y);
    }
}

// int_X^inf x^{-p} e^{i w x} dx via its asymptotic series (w X >> p).
cplx oscillatory_tail(double p, double w, double X) {
    const cplx z(0.0, -1.0 / (w * X));
    cplx term = 1.0;
    cplx sum = 0.0;
    double last = std::numeric_limits<double>::infinity();
    for (int n = 0; n < 400; ++n) {
        const double mag = std::abs(term);
        if (mag > last) break;
        sum += term;
        if (mag < 1e-18 * std::abs(sum)) break;
        last = mag;
        term *= (p + n) * z;
    }
    return cplx(0.0, 1.0 / w) * std::polar(std::pow(X, -p), w * X) * sum;
}

void enumerate_indices(std::size_t d, int order, std::vector<int>& cur, std::size_t axis,
                       std::vector<MultiIndex>& out) {
    if (axis + 1 == d) {
        cur[axis] = order;
        out.emplace_back(cur);
        return;
    }
    for (int k = order; k >= 0; --k) {
        cur[axis] = k;
        enumerate_indices(d, order - k, cur, axis + 1, out);
    }
}

}  // namespace

int MultiIndex::order() const {
    int o = 0;
    for (int v : s) o += v;
    return o;
}

std::string MultiIndex::label() const {
    std::ostringstream os;
    for (std::size_t a = 0; a < s.size(); ++a) os << (a ? "_" : "") << s[a];
    return os.str();
}

FlatTopKernel::FlatTopKernel(std::size_t d, double M, double rho, int r)
    : d_(d), M_(M), rho_(rho), r_(r) {
    if (d == 0) throw DomainError("build_kernel: dimension must be positive");
    if (!(M > 0.0)) throw DomainError("build_kernel: M must be positive");
    if (!(rho > 0.0 && rho < 1.0)) throw DomainError("build_kernel: rho must lie in (0,1)");
    if (r < 1) throw DomainError("build_kernel: leg smoothness r must be >= 1");

    // P(t) = 1 - I_u(r,r); dP/dt = -B(u)/l with B(u) = u^{r-1}(1-u)^{r-1}/Beta(r,r).
    const double l = leg_width();
    const double inv_beta = 1.0 / boost::math::beta(static_cast<double>(r), static_cast<double>(r));
    std::vector<double> B0(2 * r - 1, 0.0);  // B^{(m)}(0)
    for (int m = r - 1; m <= 2 * r - 2; ++m) {
        const int j = m - (r - 1);
        const double c = boost::math::binomial_coefficient<double>(r - 1, j) *
                         ((j % 2) ? -1.0 : 1.0) * inv_beta;
        B0[m] = boost::math::factorial<double>(m) * c;
    }
    dP_inner_.assign(2 * r, 0.0);
    dP_outer_.assign(2 * r, 0.0);
    dP_inner_[0] = 1.0;
    for (int k = 1; k <= 2 * r - 1; ++k) {
        const double lk = std::pow(l, -k);
        dP_inner_[k] = -lk * B0[k - 1];
        dP_outer_[k] = -lk * (((k - 1) % 2) ? -1.0 : 1.0) * B0[k - 1];
    }
    // Beyond x_switch every series term is below one, so the series rounding
    // error is below the absolute rounding floor of the quadrature branch.
    x_switch_ = 1.0 / l;
    for (int k = r; k <= 2 * r - 1; ++k)
        x_switch_ = std::max(x_switch_, std::pow(std::abs(dP_inner_[k]), 1.0 / (k + 1)));

    const auto panels = static_cast<std::size_t>(std::ceil(l * x_switch_ / 4.0)) + 4;
    const auto& xa = boost::math::quadrature::gauss<double, 20>::abscissa();
    const auto& wa = boost::math::quadrature::gauss<double, 20>::weights();
    const double h = l / static_cast<double>(panels);
    for (std::size_t p = 0; p < panels; ++p) {
        const double mid = flat_edge() + (static_cast<double>(p) + 0.5) * h;
        for (std::size_t i = 0; i < xa.size(); ++i)
            for (double sgn : {-1.0, 1.0}) {
                const double t = mid + sgn * 0.5 * h * xa[i];
                leg_nodes_.push_back(t);
                leg_weights_.push_back(0.5 * h * wa[i] * transform_1d(t));
            }
    }
}

FlatTopKernel build_kernel(std::size_t d, double M, double rho, int r) {
    return FlatTopKernel(d, M, rho, r);
}

int FlatTopKernel::derivative_budget() const {
    return r_ == 1 ? std::numeric_limits<int>::max() : r_ - 1;
}

double FlatTopKernel::transform_1d(double t) const {
    const double a = std::abs(t);
    if (a <= flat_edge()) return 1.0;
    if (a >= M_) return 0.0;
    const double u = (a - flat_edge()) / leg_width();
    if (r_ == 1) return 1.0 - u;
    return 1.0 - boost::math::ibeta(static_cast<double>(r_), static_cast<double>(r_), u);
}

double FlatTopKernel::transform(std::span<const double> t) const {
    double v = 1.0;
    for (double x : t) {
        v *= transform_1d(x);
        if (v == 0.0) break;
    }
    return v;
}

double FlatTopKernel::leg_integral_quadrature(double x) const {
    double s = 0.0;
    for (std::size_t i = 0; i < leg_nodes_.size(); ++i) s += leg_weights_[i] * std::cos(leg_nodes_[i] * x);
    return s;
}

double FlatTopKernel::value_series(double x) const {
    const double a = flat_edge();
    double s = 0.0;
    for (int k = 2 * r_ - 1; k >= r_; --k)
        s += (dP_outer_[k] * trig_cycle(k, M_ * x) - dP_inner_[k] * trig_cycle(k, a * x)) /
             std::pow(x, k + 1);
    return s / kPi;
}

double FlatTopKernel::value_1d(double x) const {
    x = std::abs(x);
    if (x >= x_switch_) return value_series(x);
    const double a = flat_edge();
    const double flat = x == 0.0 ? a : std::sin(a * x) / x;
    return (flat + leg_integral_quadrature(x)) / kPi;
}

double FlatTopKernel::value(std::span<const double> x) const {
    double v = 1.0;
    for (double c : x) v *= value_1d(c);
    return v;
}

double FlatTopKernel::tail_integral(int s, double X) const {
    const double a = flat_edge();
    double sum = 0.0;
    for (int k = r_; k <= 2 * r_ - 1; ++k) {
        const double p = static_cast<double>(k + 1 - s);
        auto part = [&](double w) {
            const cplx J = oscillatory_tail(p, w, X);
            switch (k % 4) {
                case 0: return J.imag();
                case 1: return J.real();
                case 2: return -J.imag();
                default: return -J.real();
            }
        };
        sum += dP_outer_[k] * part(M_) - dP_inner_[k] * part(a);
    }
    return sum / kPi;
}

std::vector<double> FlatTopKernel::moments_upto(int q) const {
    if (q < 0) throw DomainError("moments: order must be nonnegative");
    std::vector<double> m(q + 1, std::numeric_limits<double>::quiet_NaN());
    const double X = std::max({2.0 * x_switch_, (60.0 + 4.0 * r_) / flat_edge(), 50.0});
    const double width = std::min(1.0, 2.0 / M_);
    const auto panels = static_cast<std::size_t>(std::ceil(X / width));
    const int top = std::min(q, r_);
    std::vector<double> body(top + 1, 0.0);
    const auto& xa = boost::math::quadrature::gauss<double, 20>::abscissa();
    const auto& wa = boost::math::quadrature::gauss<double, 20>::weights();
    const double h = X / static_cast<double>(panels);
    for (std::size_t p = 0; p < panels; ++p) {
        const double mid = (static_cast<double>(p) + 0.5) * h;
        for (std::size_t i = 0; i < xa.size(); ++i)
            for (double sgn : {-1.0, 1.0}) {
                const double x = mid + sgn * 0.5 * h * xa[i];
                double w = 0.5 * h * wa[i] * value_1d(x);
                for (int s = 0; s <= top; ++s) {
                    body[s] += w;
                    w *= x;
                }
            }
    }
    for (int s = 0; s <= top; ++s) m[s] = (s % 2 == 1) ? 0.0 : 2.0 * (body[s] + tail_integral(s, X));
    return m;
}

double FlatTopKernel::moment_1d(int s) const { return moments_upto(s)[s]; }

double FlatTopKernel::absolute_moment_1d(int q) const {
    if (q + 1 >= r_) return std::numeric_limits<double>::infinity();
    const double X = std::max({2.0 * x_switch_, (60.0 + 4.0 * r_) / flat_edge(), 50.0});
    const double width = std::min(0.5, 1.0 / M_);
    const auto panels = static_cast<std::size_t>(std::ceil(X / width));
    const double body = integrate_gl(
        [&](double x) { return (std::pow(x, q) + std::pow(x, q + 1)) * std::abs(value_1d(x)); },
        0.0, X, panels);
    // |K_1(x)| <= sum_k 2|P^{(k)}| x^{-k-1} / pi beyond X; integrate the bound.
    double tail = 0.0;
    for (int k = r_; k <= 2 * r_ - 1; ++k) {
        const double c = 2.0 * std::abs(dP_inner_[k]) / kPi;
        tail += c * (std::pow(X, q - k) / (k - q) + std::pow(X, q + 1 - k) / (k - q - 1));
    }
    return 2.0 * (body + tail);
}

double ScaledKernel::transform(std::span<const double> t) const {
    double v = 1.0;
    for (double x : t) {
        v *= base.transform_1d(x * b);
        if (v == 0.0) break;
    }
    return v;
}

double ScaledKernel::value(std::span<const double> x) const {
    double v = 1.0;
    for (double c : x) v *= base.value_1d(c / b) / b;
    return v;
}

ScaledKernel scale(const FlatTopKernel& K, double b) {
    if (!(b > 0.0)) throw DomainError("scale: bandwidth must be positive");
    return ScaledKernel{K, b};
}

GridFunction kernel_spectrum(const ScaledKernel& Kn, const GridBox& space, const MultiIndex& s) {
    if (space.dim() != Kn.dim() || s.dim() != Kn.dim())
        throw StructuralError("kernel_spectrum: dimension mismatch");
    return GridFunction::sample(space, Domain::frequency, [&](std::span<const double> t) {
        cplx v = Kn.transform(t);
        for (std::size_t a = 0; a < t.size(); ++a)
            for (int k = 0; k < s.s[a]; ++k) v *= cplx(0.0, t[a]);
        return v;
    });
}

GridFunction kernel_spectrum(const ScaledKernel& Kn, const GridBox& space) {
    return kernel_spectrum(Kn, space, MultiIndex::zero(Kn.dim()));
}

GridFunction kernel_derivative(const ScaledKernel& Kn, const MultiIndex& s, const GridBox& space) {
    if (s.order() > Kn.base.derivative_budget())
        throw DomainError("kernel_derivative: derivative order exceeds the leg smoothness budget");
    return inverse_fourier(kernel_spectrum(Kn, space, s));
}

GridFunction sample_kernel(const ScaledKernel& Kn, const GridBox& space) {
    if (space.dim() != Kn.dim()) throw StructuralError("sample_kernel: dimension mismatch");
    return GridFunction::sample(space, Domain::spatial,
                                [&](std::span<const double> x) { return cplx(Kn.value(x)); });
}

bool MomentReport::all_pass() const {
    if (!mass_pass) return false;
    return std::all_of(moments.begin(), moments.end(), [](const auto& m) { return m.pass; });
}

MomentReport verify_moments(const FlatTopKernel& K, int q_max, double tol) {
    if (q_max < 1) throw DomainError("verify_moments: q_max must be >= 1");
    MomentReport rep;
    rep.tol = tol;
    rep.q = q_max;
    rep.decay_exponent = K.decay_exponent();
    const std::vector<double> m1 = K.moments_1d(q_max);
    rep.mass = std::pow(m1[0], static_cast<double>(K.dim()));
    rep.mass_pass = std::abs(rep.mass - 1.0) <= 1e-6;
    for (int order = 1; order <= q_max; ++order) {
        std::vector<MultiIndex> idx;
        std::vector<int> cur(K.dim(), 0);
        enumerate_indices(K.dim(), order, cur, 0, idx);
        for (const auto& s : idx) {
            MomentEntry e;
            e.index = s.label();
            e.order = order;
            e.value = 1.0;
            for (int v : s.s) e.value *= m1[v];
            e.integrable = std::isfinite(e.value);
            e.pass = e.integrable && std::abs(e.value) <= tol;
            rep.moments.push_back(e);
        }
    }
    rep.absolute_moment = K.absolute_moment_1d(q_max);
    return rep;
}

}  // namespace mixdecon
