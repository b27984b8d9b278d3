#include "mixdecon/numerics.hpp"

#include <fftw3.h>

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <mutex>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include "mixdecon/errors.hpp"

namespace mixdecon {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

bool same_spacing(double a, double b) {
    return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b));
}

std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

// In-place multi-dimensional DFT, row-major, unnormalized.
void dft_inplace(std::vector<cplx>& data, const std::vector<std::size_t>& shape, int sign) {
    std::vector<int> dims(shape.begin(), shape.end());
    auto* buf = reinterpret_cast<fftw_complex*>(data.data());
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        plan = fftw_plan_dft(static_cast<int>(dims.size()), dims.data(), buf, buf, sign,
                             FFTW_ESTIMATE);
    }
    if (plan == nullptr) throw NumericError("FFT planning failed");
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
}

double frac(double x) { return x - std::floor(x); }

// exp(sign * i * t_j * lo) for every node j of one axis, with the angle reduced
// before evaluating so that large |t lo| keeps full relative accuracy.
std::vector<cplx> phase_factors(const Axis& ax, double sign) {
    const double c1 = ax.lo / ax.spacing();
    const double c2 = ax.lo / (ax.hi - ax.lo);
    const double base = frac(-0.5 * c1);
    std::vector<cplx> out(ax.n);
    for (std::size_t j = 0; j < ax.n; ++j) {
        const double turns = frac(base + frac(static_cast<double>(j) * c2));
        out[j] = std::polar(1.0, sign * kTwoPi * turns);
    }
    return out;
}

// Multiply data (row-major over shape) by the outer product of per-axis factors.
void apply_axis_factors(std::vector<cplx>& data, const std::vector<std::vector<cplx>>& factors) {
    const std::size_t d = factors.size();
    std::vector<std::size_t> idx(d, 0);
    for (std::size_t flat = 0; flat < data.size(); ++flat) {
        cplx w = 1.0;
        for (std::size_t a = 0; a < d; ++a) w *= factors[a][idx[a]];
        data[flat] *= w;
        for (std::size_t a = d; a-- > 0;) {
            if (++idx[a] < factors[a].size()) break;
            idx[a] = 0;
        }
    }
}

std::vector<cplx> alternating(std::size_t n) {
    std::vector<cplx> s(n);
    for (std::size_t k = 0; k < n; ++k) s[k] = (k % 2 == 0) ? 1.0 : -1.0;
    return s;
}

void require_same(const GridFunction& f, const GridFunction& g, const char* what) {
    if (f.domain() != g.domain() || f.space_box() != g.space_box())
        throw StructuralError(std::string(what) + ": grids or domain tags differ");
}

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

GridBox::GridBox(std::vector<Axis> axes) : axes_(std::move(axes)) {
    if (axes_.empty()) throw DomainError("GridBox: dimension must be positive");
    for (const auto& ax : axes_) {
        if (!(ax.lo < ax.hi)) throw DomainError("GridBox: lower bound must be below upper bound");
        if (ax.n < 16 || !is_pow2(ax.n))
            throw DomainError("GridBox: point count must be a power of two >= 16");
    }
}

GridBox GridBox::uniform(std::size_t d, double lo, double hi, std::size_t n) {
    return GridBox(std::vector<Axis>(d, Axis{lo, hi, n}));
}

std::size_t GridBox::size() const {
    std::size_t s = 1;
    for (const auto& ax : axes_) s *= ax.n;
    return s;
}

double GridBox::cell_volume() const {
    double v = 1.0;
    for (const auto& ax : axes_) v *= ax.spacing();
    return v;
}

std::vector<std::size_t> GridBox::shape() const {
    std::vector<std::size_t> s;
    for (const auto& ax : axes_) s.push_back(ax.n);
    return s;
}

GridBox GridBox::frequency_box() const {
    std::vector<Axis> f;
    for (const auto& ax : axes_) {
        const double nyq = std::numbers::pi / ax.spacing();
        f.push_back(Axis{-nyq, nyq, ax.n});
    }
    return GridBox(std::move(f));
}

void GridBox::coordinates(std::size_t flat, std::span<double> out) const {
    for (std::size_t a = axes_.size(); a-- > 0;) {
        const std::size_t n = axes_[a].n;
        out[a] = axes_[a].node(flat % n);
        flat /= n;
    }
}

std::vector<double> GridBox::coordinates(std::size_t flat) const {
    std::vector<double> x(dim());
    coordinates(flat, x);
    return x;
}

bool GridBox::operator==(const GridBox& other) const {
    if (axes_.size() != other.axes_.size()) return false;
    for (std::size_t a = 0; a < axes_.size(); ++a) {
        const auto& x = axes_[a];
        const auto& y = other.axes_[a];
        if (x.n != y.n || x.lo != y.lo || x.hi != y.hi) return false;
    }
    return true;
}

GridFunction::GridFunction(GridBox space, Domain domain, std::vector<cplx> values)
    : space_(std::move(space)), domain_(domain), values_(std::move(values)) {
    if (values_.size() != space_.size())
        throw StructuralError("GridFunction: value count does not match the grid");
}

GridFunction::GridFunction(GridBox space, Domain domain, const std::vector<double>& values)
    : GridFunction(std::move(space), domain, std::vector<cplx>(values.begin(), values.end())) {}

GridFunction GridFunction::sample(const GridBox& space, Domain domain, const Sampler& f) {
    const GridBox b = domain == Domain::spatial ? space : space.frequency_box();
    std::vector<cplx> v(b.size());
    std::vector<double> x(b.dim());
    for (std::size_t i = 0; i < v.size(); ++i) {
        b.coordinates(i, x);
        v[i] = f(x);
    }
    return GridFunction(space, domain, std::move(v));
}

GridBox GridFunction::box() const {
    return domain_ == Domain::spatial ? space_ : space_.frequency_box();
}

std::vector<double> GridFunction::real_values() const {
    std::vector<double> r(values_.size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = values_[i].real();
    return r;
}

double GridFunction::max_abs_imag() const {
    double m = 0.0;
    for (const auto& v : values_) m = std::max(m, std::abs(v.imag()));
    return m;
}

NormOrder::NormOrder(double u) : u_(u) {
    if (std::isinf(u) && u > 0) {
        infinite_ = true;
        return;
    }
    if (!(u >= 1.0)) throw DomainError("NormOrder: u must be >= 1");
}

NormOrder NormOrder::infinity() {
    NormOrder n;
    n.u_ = std::numeric_limits<double>::infinity();
    n.infinite_ = true;
    return n;
}

double lp_norm(const GridFunction& f, NormOrder u) {
    if (u.is_infinite()) {
        double m = 0.0;
        for (const auto& v : f.values()) m = std::max(m, std::abs(v));
        return m;
    }
    const double p = u.value();
    double s = 0.0;
    if (p == 1.0) {
        for (const auto& v : f.values()) s += std::abs(v);
        return s * f.cell_volume();
    }
    if (p == 2.0) {
        for (const auto& v : f.values()) s += std::norm(v);
        return std::sqrt(s * f.cell_volume());
    }
    for (const auto& v : f.values()) s += std::pow(std::abs(v), p);
    return std::pow(s * f.cell_volume(), 1.0 / p);
}

double lp_distance(const GridFunction& f, const GridFunction& g, NormOrder u) {
    require_same(f, g, "lp_distance");
    return lp_norm(f - g, u);
}

double hellinger(const GridFunction& p1, const GridFunction& p2, double eps_mass) {
    require_same(p1, p2, "hellinger");
    double s = 0.0;
    for (std::size_t i = 0; i < p1.size(); ++i) {
        const double a = p1[i].real();
        const double b = p2[i].real();
        if (a < -eps_mass || b < -eps_mass)
            throw DomainError("hellinger: negative density value");
        const double d = std::sqrt(std::max(a, 0.0)) - std::sqrt(std::max(b, 0.0));
        s += d * d;
    }
    return std::sqrt(s * p1.cell_volume());
}

double mass(const GridFunction& f) {
    double s = 0.0;
    for (const auto& v : f.values()) s += v.real();
    return s * f.cell_volume();
}

bool is_density(const GridFunction& f, double eps_mass) {
    if (f.domain() != Domain::spatial) return false;
    for (const auto& v : f.values())
        if (v.real() < -eps_mass || std::abs(v.imag()) > eps_mass) return false;
    return std::abs(mass(f) - 1.0) <= eps_mass;
}

double sup_error(const GridFunction& f, const GridFunction& g) {
    return lp_distance(f, g, NormOrder::infinity());
}

GridFunction operator+(const GridFunction& f, const GridFunction& g) {
    require_same(f, g, "operator+");
    std::vector<cplx> v(f.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = f[i] + g[i];
    return GridFunction(f.space_box(), f.domain(), std::move(v));
}

GridFunction operator-(const GridFunction& f, const GridFunction& g) {
    require_same(f, g, "operator-");
    std::vector<cplx> v(f.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = f[i] - g[i];
    return GridFunction(f.space_box(), f.domain(), std::move(v));
}

GridFunction operator*(const GridFunction& f, const GridFunction& g) {
    require_same(f, g, "operator*");
    std::vector<cplx> v(f.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = f[i] * g[i];
    return GridFunction(f.space_box(), f.domain(), std::move(v));
}

GridFunction operator*(double a, const GridFunction& f) {
    std::vector<cplx> v(f.values());
    for (auto& x : v) x *= a;
    return GridFunction(f.space_box(), f.domain(), std::move(v));
}

GridFunction map_values(const GridFunction& f, const std::function<cplx(cplx)>& op) {
    std::vector<cplx> v(f.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = op(f[i]);
    return GridFunction(f.space_box(), f.domain(), std::move(v));
}

GridFunction multiply_by(const GridFunction& f, const GridFunction::Sampler& g) {
    const GridBox b = f.box();
    std::vector<cplx> v(f.size());
    std::vector<double> x(b.dim());
    for (std::size_t i = 0; i < v.size(); ++i) {
        b.coordinates(i, x);
        v[i] = f[i] * g(x);
    }
    return GridFunction(f.space_box(), f.domain(), std::move(v));
}

GridFunction fourier(const GridFunction& f) {
    if (f.domain() != Domain::spatial) throw StructuralError("fourier: expects a spatial function");
    const GridBox& b = f.space_box();
    std::vector<cplx> data(f.values());
    std::vector<std::vector<cplx>> pre, post;
    for (const auto& ax : b.axes()) {
        pre.push_back(alternating(ax.n));
        auto ph = phase_factors(ax, -1.0);
        for (auto& p : ph) p *= ax.spacing();
        post.push_back(std::move(ph));
    }
    apply_axis_factors(data, pre);
    dft_inplace(data, b.shape(), FFTW_FORWARD);
    apply_axis_factors(data, post);
    return GridFunction(b, Domain::frequency, std::move(data));
}

GridFunction inverse_fourier(const GridFunction& F) {
    if (F.domain() != Domain::frequency)
        throw StructuralError("inverse_fourier: expects a frequency function");
    const GridBox& b = F.space_box();
    std::vector<cplx> data(F.values());
    std::vector<std::vector<cplx>> pre, post;
    for (const auto& ax : b.axes()) {
        pre.push_back(phase_factors(ax, 1.0));
        auto s = alternating(ax.n);
        const double scale = 1.0 / (static_cast<double>(ax.n) * ax.spacing());
        for (auto& x : s) x *= scale;
        post.push_back(std::move(s));
    }
    apply_axis_factors(data, pre);
    dft_inplace(data, b.shape(), FFTW_BACKWARD);
    apply_axis_factors(data, post);
    return GridFunction(b, Domain::spatial, std::move(data));
}

GridFunction convolve(const GridFunction& f, const GridFunction& g) {
    if (f.domain() != Domain::spatial || g.domain() != Domain::spatial)
        throw StructuralError("convolve: expects spatial functions");
    const GridBox& bf = f.space_box();
    const GridBox& bg = g.space_box();
    if (bf.dim() != bg.dim()) throw StructuralError("convolve: dimension mismatch");
    const std::size_t d = bf.dim();
    std::vector<Axis> out_axes;
    for (std::size_t a = 0; a < d; ++a) {
        const double dx = bf.axis(a).spacing();
        if (!same_spacing(dx, bg.axis(a).spacing()))
            throw StructuralError("convolve: grid spacing differs between inputs");
        const std::size_t n = next_pow2(std::max<std::size_t>(16, bf.axis(a).n + bg.axis(a).n - 1));
        const double lo = bf.axis(a).lo + bg.axis(a).lo;
        out_axes.push_back(Axis{lo, lo + static_cast<double>(n) * dx, n});
    }
    const GridBox out(std::move(out_axes));
    const auto shape = out.shape();

    auto embed = [&](const GridFunction& src) {
        std::vector<cplx> buf(out.size(), 0.0);
        const auto sshape = src.space_box().shape();
        std::vector<std::size_t> idx(d, 0);
        for (std::size_t flat = 0; flat < src.size(); ++flat) {
            std::size_t o = 0;
            for (std::size_t a = 0; a < d; ++a) o = o * shape[a] + idx[a];
            buf[o] = src[flat];
            for (std::size_t a = d; a-- > 0;) {
                if (++idx[a] < sshape[a]) break;
                idx[a] = 0;
            }
        }
        return buf;
    };
    auto a = embed(f);
    auto c = embed(g);
    dft_inplace(a, shape, FFTW_FORWARD);
    dft_inplace(c, shape, FFTW_FORWARD);
    const double scale = bf.cell_volume() / static_cast<double>(out.size());
    for (std::size_t i = 0; i < a.size(); ++i) a[i] *= c[i] * scale;
    dft_inplace(a, shape, FFTW_BACKWARD);
    if (f.max_abs_imag() == 0.0 && g.max_abs_imag() == 0.0)
        for (auto& v : a) v = v.real();
    return GridFunction(out, Domain::spatial, std::move(a));
}

GridFunction resample_aligned(const GridFunction& f, const GridBox& target) {
    if (f.domain() != Domain::spatial) throw StructuralError("resample_aligned: expects spatial");
    const GridBox& src = f.space_box();
    if (src.dim() != target.dim()) throw StructuralError("resample_aligned: dimension mismatch");
    const std::size_t d = src.dim();
    std::vector<long long> offset(d);
    for (std::size_t a = 0; a < d; ++a) {
        const double dx = src.axis(a).spacing();
        if (!same_spacing(dx, target.axis(a).spacing()))
            throw StructuralError("resample_aligned: spacing differs");
        const double shift = (target.axis(a).lo - src.axis(a).lo) / dx;
        const double r = std::round(shift);
        if (std::abs(shift - r) > 1e-6) throw StructuralError("resample_aligned: nodes not aligned");
        offset[a] = static_cast<long long>(r);
    }
    std::vector<cplx> v(target.size(), 0.0);
    const auto tshape = target.shape();
    const auto sshape = src.shape();
    std::vector<std::size_t> idx(d, 0);
    for (std::size_t flat = 0; flat < v.size(); ++flat) {
        std::size_t s = 0;
        bool inside = true;
        for (std::size_t a = 0; a < d; ++a) {
            const long long k = static_cast<long long>(idx[a]) + offset[a];
            if (k < 0 || k >= static_cast<long long>(sshape[a])) {
                inside = false;
                break;
            }
            s = s * sshape[a] + static_cast<std::size_t>(k);
        }
        if (inside) v[flat] = f[s];
        for (std::size_t a = d; a-- > 0;) {
            if (++idx[a] < tshape[a]) break;
            idx[a] = 0;
        }
    }
    return GridFunction(target, Domain::spatial, std::move(v));
}

double parseval_constant(std::size_t d) {
    return std::pow(kTwoPi, -0.5 * static_cast<double>(d));
}

std::string fft_backend_version() { return fftw_version; }

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

double integrate(const std::function<double(double)>& f, double a, double b, double rel_tol,
                 double* error_estimate) {
    double err = 0.0;
    const double v =
        boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 20, rel_tol, &err);
    if (error_estimate) *error_estimate = err;
    return v;
}

double integrate_gl(const std::function<double(double)>& f, double a, double b,
                    std::size_t panels) {
    panels = std::max<std::size_t>(panels, 1);
    const double h = (b - a) / static_cast<double>(panels);
    double s = 0.0;
    for (std::size_t i = 0; i < panels; ++i) {
        const double lo = a + static_cast<double>(i) * h;
        s += boost::math::quadrature::gauss<double, 20>::integrate(f, lo, lo + h);
    }
    return s;
}

void write_csv(const GridFunction& f, std::ostream& os) {
    const GridBox b = f.box();
    const std::size_t d = b.dim();
    for (std::size_t a = 0; a < d; ++a) os << "axis" << a << ',';
    os << "value_re,value_im\n";
    std::vector<double> x(d);
    for (std::size_t i = 0; i < f.size(); ++i) {
        b.coordinates(i, x);
        for (double c : x) os << fmt17(c) << ',';
        os << fmt17(f[i].real()) << ',' << fmt17(f[i].imag()) << '\n';
    }
}

GridFunction read_csv(std::istream& is, const GridBox& space, Domain domain) {
    const GridBox b = domain == Domain::spatial ? space : space.frequency_box();
    const std::size_t d = b.dim();
    std::string line;
    if (!std::getline(is, line)) throw StructuralError("read_csv: missing header");
    std::vector<cplx> v;
    v.reserve(b.size());
    std::vector<double> x(d);
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> cols;
        while (std::getline(ss, cell, ',')) cols.push_back(std::stod(cell));
        if (cols.size() != d + 2) throw StructuralError("read_csv: wrong column count");
        if (v.size() >= b.size()) throw StructuralError("read_csv: too many rows");
        b.coordinates(v.size(), x);
        for (std::size_t a = 0; a < d; ++a)
            if (std::abs(cols[a] - x[a]) > 1e-9 * std::max(1.0, std::abs(x[a])))
                throw StructuralError("read_csv: node coordinates do not match the grid");
        v.emplace_back(cols[d], cols[d + 1]);
    }
    return GridFunction(space, domain, std::move(v));
}

}  // namespace mixdecon
