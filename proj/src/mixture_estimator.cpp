#include "mixdecon/mixture_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "mixdecon/kernels.hpp"
#include "mixdecon/rng.hpp"

namespace mixdecon {

namespace {

const MixingDensity& unit_bump() {
    static const MixingDensity g = MixingDensity::smooth_bump(-1.0, 1.0, 1);
    return g;
}

GridFunction real_grid(const GridFunction& f) {
    return GridFunction(f.space_box(), f.domain(), f.real_values());
}

std::vector<double> lattice_centers(std::size_t d, std::size_t J, double lo, double hi, double w) {
    std::vector<double> axis(J);
    for (std::size_t i = 0; i < J; ++i)
        axis[i] = lo + w + (hi - lo - 2.0 * w) * static_cast<double>(i) / static_cast<double>(J - 1);
    std::size_t total = 1;
    for (std::size_t a = 0; a < d; ++a) total *= J;
    std::vector<double> c(total * d);
    for (std::size_t k = 0; k < total; ++k) {
        std::size_t r = k;
        for (std::size_t a = d; a-- > 0;) {
            c[k * d + a] = axis[r % J];
            r /= J;
        }
    }
    return c;
}

}  // namespace

// ---------------------------------------------------------------- sieve mixing

SieveMixing::SieveMixing(std::size_t d, std::vector<double> centers, std::vector<double> weights, double width)
    : d_(d), centers_(std::move(centers)), weights_(std::move(weights)), width_(width),
      atom_(MixingDensity::smooth_bump(-width, width, 1)) {
    if (d == 0 || centers_.size() != weights_.size() * d)
        throw StructuralError("sieve: centers and weights do not match");
    if (!(width > 0.0)) throw DomainError("sieve: atom width must be positive");
    for (double w : weights_)
        if (w < 0.0) throw DomainError("sieve: weights must be nonnegative");
}

double SieveMixing::total_weight() const { return std::accumulate(weights_.begin(), weights_.end(), 0.0); }

double SieveMixing::value(std::span<const double> y) const {
    if (y.size() != d_) throw StructuralError("sieve: dimension mismatch");
    double v = 0.0;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        if (weights_[i] == 0.0) continue;
        double a = weights_[i];
        for (std::size_t k = 0; k < d_ && a != 0.0; ++k) a *= atom_.value_1d(y[k] - centers_[i * d_ + k]);
        v += a;
    }
    return v;
}

double SieveMixing::bump_transform(double s) {
    const auto f = [s](double u) { return std::cos(s * u) * unit_bump().value_1d(u); };
    return integrate_gl(f, -1.0, 1.0, 16 + static_cast<std::size_t>(std::ceil(std::abs(s))));
}

cplx SieveMixing::transform(std::span<const double> t) const {
    if (t.size() != d_) throw StructuralError("sieve: dimension mismatch");
    double env = 1.0;
    for (double x : t) env *= bump_transform(x * width_);
    cplx v = 0.0;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        double phase = 0.0;
        for (std::size_t k = 0; k < d_; ++k) phase -= t[k] * centers_[i * d_ + k];
        v += weights_[i] * std::polar(1.0, phase);
    }
    return env * v;
}

GridFunction SieveMixing::sample(const GridBox& space) const {
    if (space.dim() != d_) throw StructuralError("sieve: dimension mismatch");
    return GridFunction::sample(space, Domain::spatial, [&](std::span<const double> y) { return cplx(value(y)); });
}

SmoothnessClass SieveMixing::smoothness() const {
    SmoothnessClass k = unit_bump().smoothness();
    k.L /= std::pow(width_, k.qtilde() + 1.0);
    return k;
}

// ---------------------------------------------------------------- criterion

SieveCriterion::SieveCriterion(std::span<const double> samples, const NoiseModel& h, const SieveConfig& cfg)
    : d_(h.dim()) {
    if (cfg.nodes < 2) throw DomainError("sieve: node count J must be >= 2");
    if (samples.empty() || samples.size() % d_ != 0) throw DomainError("sieve: samples must be nonempty rows of length d");
    if (!(cfg.hi > cfg.lo)) throw DomainError("sieve: support bounds must satisfy lo < hi");
    if (!(cfg.b0 > 0.0) || !(cfg.M > 0.0)) throw DomainError("sieve: window parameters must be positive");
    const std::size_t n = samples.size() / d_;
    const std::size_t Jax = cfg.nodes;
    const double spacing = (cfg.hi - cfg.lo) / static_cast<double>(Jax - 1);
    width_ = cfg.width > 0.0 ? cfg.width : 3.0 * spacing;
    if (2.0 * width_ >= cfg.hi - cfg.lo) throw DomainError("sieve: atom width too large for the support");
    centers_ = lattice_centers(d_, Jax, cfg.lo, cfg.hi, width_);
    J_ = centers_.size() / d_;

    const std::size_t T = cfg.freq_nodes ? cfg.freq_nodes : (d_ == 1 ? 513 : 65);
    if (T < 3) throw DomainError("sieve: at least 3 window nodes per axis required");
    const double B = cfg.M / cfg.b0;
    const double dt = 2.0 * B / static_cast<double>(T - 1);
    const FlatTopKernel K = build_kernel(1, cfg.M, 0.5, 1);
    std::vector<double> tax(T), wax(T), gax(T);
    for (std::size_t j = 0; j < T; ++j) {
        tax[j] = -B + dt * static_cast<double>(j);
        wax[j] = K.transform_1d(tax[j] * cfg.b0) * dt;
        gax[j] = SieveMixing::bump_transform(tax[j] * width_);
    }
    std::size_t Tn = 1;
    for (std::size_t a = 0; a < d_; ++a) Tn *= T;

    // Empirical characteristic function on the axis lattice, per axis by recurrence.
    std::vector<cplx> phi(Tn, 0.0);
    std::vector<std::vector<cplx>> ax(d_, std::vector<cplx>(T));
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t a = 0; a < d_; ++a) {
            const double x = samples[s * d_ + a];
            cplx e = std::polar(1.0, B * x);
            const cplx step = std::polar(1.0, -dt * x);
            for (std::size_t j = 0; j < T; ++j, e *= step) ax[a][j] = e;
        }
        if (d_ == 1) {
            for (std::size_t j = 0; j < T; ++j) phi[j] += ax[0][j];
        } else {
            for (std::size_t k = 0; k < Tn; ++k) {
                std::size_t r = k;
                cplx v = 1.0;
                for (std::size_t a = d_; a-- > 0;) {
                    v *= ax[a][r % T];
                    r /= T;
                }
                phi[k] += v;
            }
        }
    }
    for (auto& v : phi) v /= static_cast<double>(n);

    // Design matrix rows A_k. = omega_k^{1/2} * atom~ h~ e^{-i t c}.
    std::vector<cplx> A(Tn * J_);
    std::vector<double> t(d_);
    for (std::size_t k = 0; k < Tn; ++k) {
        std::size_t r = k;
        double weight = 1.0, env = 1.0;
        for (std::size_t a = d_; a-- > 0;) {
            const std::size_t j = r % T;
            r /= T;
            t[a] = tax[j];
            weight *= wax[j];
            env *= gax[j];
        }
        const double sw = std::sqrt(std::max(0.0, weight));
        const cplx base = sw * env * h.htilde(t);
        for (std::size_t i = 0; i < J_; ++i) {
            double phase = 0.0;
            for (std::size_t a = 0; a < d_; ++a) phase -= t[a] * centers_[i * d_ + a];
            A[k * J_ + i] = base * std::polar(1.0, phase);
        }
        phi[k] *= sw;
        phi_energy_ += std::norm(phi[k]);
    }
    G_.assign(J_ * J_, 0.0);
    c_.assign(J_, 0.0);
    for (std::size_t k = 0; k < Tn; ++k) {
        const cplx* row = &A[k * J_];
        for (std::size_t i = 0; i < J_; ++i) {
            const cplx ci = std::conj(row[i]);
            c_[i] += (ci * phi[k]).real();
            double* Gi = &G_[i * J_];
            for (std::size_t l = i; l < J_; ++l) Gi[l] += (ci * row[l]).real();
        }
    }
    for (std::size_t i = 0; i < J_; ++i)
        for (std::size_t l = 0; l < i; ++l) G_[i * J_ + l] = G_[l * J_ + i];

    // Largest eigenvalue of G by power iteration; gradient Lipschitz constant is 2 lambda.
    std::vector<double> v(J_, 1.0 / std::sqrt(static_cast<double>(J_))), w(J_);
    double lam = 0.0;
    for (int it = 0; it < 200; ++it) {
        for (std::size_t i = 0; i < J_; ++i)
            w[i] = std::inner_product(v.begin(), v.end(), G_.begin() + static_cast<std::ptrdiff_t>(i * J_), 0.0);
        const double nrm = std::sqrt(std::inner_product(w.begin(), w.end(), w.begin(), 0.0));
        if (nrm == 0.0) break;
        const double prev = lam;
        lam = nrm;
        for (std::size_t i = 0; i < J_; ++i) v[i] = w[i] / nrm;
        if (std::abs(lam - prev) <= 1e-12 * lam) break;
    }
    lipschitz_ = 2.0 * lam * 1.01;
}

double SieveCriterion::value(std::span<const double> w) const {
    if (w.size() != J_) throw StructuralError("sieve: weight vector length mismatch");
    double q = phi_energy_;
    for (std::size_t i = 0; i < J_; ++i) {
        const double Gw = std::inner_product(w.begin(), w.end(), G_.begin() + static_cast<std::ptrdiff_t>(i * J_), 0.0);
        q += w[i] * Gw - 2.0 * c_[i] * w[i];
    }
    return std::max(0.0, q);
}

std::vector<double> SieveCriterion::gradient(std::span<const double> w) const {
    if (w.size() != J_) throw StructuralError("sieve: weight vector length mismatch");
    std::vector<double> g(J_);
    for (std::size_t i = 0; i < J_; ++i)
        g[i] = 2.0 * (std::inner_product(w.begin(), w.end(), G_.begin() + static_cast<std::ptrdiff_t>(i * J_), 0.0) - c_[i]);
    return g;
}

std::vector<double> SieveCriterion::project(const MixingDensity& p) const {
    if (p.dim() != d_) throw StructuralError("sieve: dimension mismatch");
    std::vector<double> w(J_);
    for (std::size_t i = 0; i < J_; ++i) w[i] = p.value(std::span<const double>(&centers_[i * d_], d_));
    const double s = std::accumulate(w.begin(), w.end(), 0.0);
    if (!(s > 0.0)) throw DomainError("sieve: target vanishes at every node");
    for (auto& x : w) x /= s;
    return w;
}

std::vector<double> project_simplex(std::span<const double> v) {
    if (v.empty()) throw DomainError("project_simplex: empty vector");
    std::vector<double> u(v.begin(), v.end());
    std::sort(u.begin(), u.end(), std::greater<>());
    double cum = 0.0, theta = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        cum += u[k];
        const double t = (cum - 1.0) / static_cast<double>(k + 1);
        if (u[k] - t > 0.0) theta = t;
    }
    std::vector<double> w(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) w[i] = std::max(0.0, v[i] - theta);
    return w;
}

SieveFit fit_minimum_distance(std::span<const double> samples, const NoiseModel& h, const SieveConfig& cfg,
                              const GridBox& space) {
    if (space.dim() != h.dim()) throw StructuralError("fit_minimum_distance: grid dimension mismatch");
    const SieveCriterion Q(samples, h, cfg);
    const std::size_t J = Q.atoms();
    std::vector<double> w(J, 1.0 / static_cast<double>(J));
    const double scale = std::max(Q.value(std::vector<double>(J, 0.0)), 1e-300);
    const double step = 1.0 / Q.lipschitz();
    double q = Q.value(w);
    std::vector<double> trace{q};
    bool converged = false;
    std::size_t it = 0;
    std::vector<double> y(J);
    for (; it < cfg.max_iter; ++it) {
        const std::vector<double> g = Q.gradient(w);
        for (std::size_t i = 0; i < J; ++i) y[i] = w[i] - step * g[i];
        std::vector<double> next = project_simplex(y);
        const double qn = Q.value(next);
        trace.push_back(qn);
        const double drop = q - qn;
        w = std::move(next);
        q = qn;
        if (drop <= cfg.tol * scale) {
            converged = true;
            ++it;
            break;
        }
    }
    if (!converged)
        throw FitNotConverged("fit_minimum_distance: no convergence within " + std::to_string(cfg.max_iter) +
                                  " projected-gradient iterations",
                              w);
    SieveMixing mix(h.dim(), Q.centers(), w, Q.width());
    GridFunction p_hat = mix.sample(space);
    GridFunction f_hat = apply_noise(p_hat, h);
    return SieveFit{std::move(mix), std::move(p_hat), std::move(f_hat), q, it, std::move(trace)};
}

// ---------------------------------------------------------------- oracle injection

Injection oracle_inject(const GridFunction& p, const NoiseModel& h, double a_n, NormOrder u, InjectionShape shape,
                        std::uint64_t seed, double omega) {
    if (p.domain() != Domain::spatial) throw StructuralError("oracle_inject: spatial density required");
    if (!(a_n >= 0.0) || !std::isfinite(a_n)) throw DomainError("oracle_inject: a_n must be nonnegative");
    const GridBox& space = p.space_box();
    const std::vector<double> pv = p.real_values();

    std::vector<double> amp, freq, phase;
    if (shape == InjectionShape::bandlimited_bump) {
        amp = {1.0};
        freq = {omega};
        phase = {0.0};
    } else {
        Rng rng(seed);
        for (int k = 0; k < 6; ++k) {
            amp.push_back(rng.uniform(0.5, 1.0));
            freq.push_back(omega * rng.uniform(0.25, 1.0));
            phase.push_back(rng.uniform(0.0, 2.0 * std::numbers::pi));
        }
        const double s = std::accumulate(amp.begin(), amp.end(), 0.0);
        for (auto& a : amp) a /= s;
    }
    std::vector<double> phi(pv.size());
    std::vector<double> x(space.dim());
    for (std::size_t i = 0; i < pv.size(); ++i) {
        space.coordinates(i, x);
        const double z = std::accumulate(x.begin(), x.end(), 0.0);
        double v = 0.0;
        for (std::size_t k = 0; k < amp.size(); ++k) v += amp[k] * std::sin(freq[k] * z + phase[k]);
        phi[i] = v;
    }
    double mp = 0.0, mpp = 0.0;
    for (std::size_t i = 0; i < pv.size(); ++i) {
        mp += pv[i];
        mpp += pv[i] * phi[i];
    }
    if (!(mp > 0.0)) throw DomainError("oracle_inject: density has no mass on the grid");
    const double c = mpp / mp;
    std::vector<double> eta(pv.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < pv.size(); ++i) {
        eta[i] = pv[i] * (phi[i] - c);
        if (pv[i] > 0.0) worst = std::max(worst, c - phi[i]);
    }
    const double A_max = worst > 0.0 ? 1.0 / worst : std::numeric_limits<double>::infinity();

    const GridFunction f_p = apply_noise(p, h);
    const GridFunction g = apply_noise(GridFunction(space, Domain::spatial, eta), h);
    const double g_norm = lp_norm(g, u);
    Injection out;
    out.f_p = f_p;
    out.max_feasible = A_max * g_norm;
    if (a_n == 0.0) {
        out.p_hat = p;
        out.f_hat = f_p;
        return out;
    }
    if (!(g_norm > 0.0)) throw DomainError("oracle_inject: perturbation is invisible through the noise");
    if (a_n > out.max_feasible)
        throw DomainError("oracle_inject: a_n = " + std::to_string(a_n) +
                          " exceeds the max feasible a_n = " + std::to_string(out.max_feasible) +
                          " under the nonnegativity cap");

    const auto achieved = [&](double A) { return lp_norm(A * g, u); };
    double A = a_n / g_norm;
    double err = achieved(A) - a_n;
    if (std::abs(err) > 1e-9) {
        double lo = 0.5 * A, hi = std::min(2.0 * A, A_max);
        for (int k = 0; k < 60 && std::abs(err) > 1e-9; ++k) {
            A = 0.5 * (lo + hi);
            err = achieved(A) - a_n;
            (err > 0.0 ? hi : lo) = A;
            out.bisection_steps = k + 1;
        }
    }
    out.amplitude = A;
    out.p_hat = real_grid(p + A * GridFunction(space, Domain::spatial, eta));
    out.f_hat = real_grid(f_p + A * g);
    out.achieved = lp_distance(out.f_hat, f_p, u);
    return out;
}

EstimateQuality measure_quality(const GridFunction& f_hat, const GridFunction& f_p, NormOrder u) {
    return EstimateQuality{u, lp_distance(f_hat, f_p, u), QualityMode::measured};
}

}  // namespace mixdecon
