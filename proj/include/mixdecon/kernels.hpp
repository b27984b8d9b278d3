#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "mixdecon/numerics.hpp"

namespace mixdecon {

struct MultiIndex {
    std::vector<int> s;

    MultiIndex() = default;
    MultiIndex(std::initializer_list<int> v) : s(v) {}
    explicit MultiIndex(std::vector<int> v) : s(std::move(v)) {}
    static MultiIndex zero(std::size_t d) { return MultiIndex(std::vector<int>(d, 0)); }

    std::size_t dim() const { return s.size(); }
    int order() const;
    std::string label() const;
};

// Product flat-top kernel: per axis K~ = 1 on |t| <= rho*M, 0 beyond M, and on the
// leg K~ = 1 - I_u(r, r) with u = (|t| - rho*M) / ((1-rho)*M). r = 1 is the trapezoid.
class FlatTopKernel {
public:
    FlatTopKernel(std::size_t d, double M, double rho, int r);

    std::size_t dim() const { return d_; }
    double M() const { return M_; }
    double rho() const { return rho_; }
    int leg() const { return r_; }
    double flat_edge() const { return rho_ * M_; }
    double leg_width() const { return (1.0 - rho_) * M_; }

    // Spatial decay exponent: |K(x)| ~ |x|^{-(r+1)} per axis.
    int decay_exponent() const { return r_ + 1; }

    // Largest derivative order allowed by the leg smoothness (unbounded for r = 1).
    int derivative_budget() const;

    double transform_1d(double t) const;
    double transform(std::span<const double> t) const;
    double value_1d(double x) const;
    double value(std::span<const double> x) const;

    // Integral over R of x^s K_1(x); NaN when the integral does not exist.
    double moment_1d(int s) const;
    std::vector<double> moments_1d(int q_max) const { return moments_upto(q_max); }
    // int (|x|^q + |x|^{q+1}) |K_1(x)| dx; infinity when not integrable.
    double absolute_moment_1d(int q) const;

private:
    std::vector<double> moments_upto(int q) const;
    double leg_integral_quadrature(double x) const;
    double value_series(double x) const;
    double tail_integral(int s, double X) const;

    std::size_t d_;
    double M_, rho_;
    int r_;
    std::vector<double> dP_inner_;  // P^{(k)}(rho M), k = 0..2r-1
    std::vector<double> dP_outer_;  // P^{(k)}(M)
    double x_switch_ = 0.0;
    std::vector<double> leg_nodes_;    // Gauss-Legendre nodes in t on the leg
    std::vector<double> leg_weights_;  // weights times K~ at the node
};

FlatTopKernel build_kernel(std::size_t d, double M = 2.0, double rho = 0.5, int r = 1);

struct ScaledKernel {
    FlatTopKernel base;
    double b;

    std::size_t dim() const { return base.dim(); }
    double band() const { return base.M() / b; }
    double transform(std::span<const double> t) const;
    double value(std::span<const double> x) const;
};

ScaledKernel scale(const FlatTopKernel& K, double b);

// Frequency samples of (it)^s K~_n(t) on the dual grid of `space`.
GridFunction kernel_spectrum(const ScaledKernel& Kn, const GridBox& space, const MultiIndex& s);
GridFunction kernel_spectrum(const ScaledKernel& Kn, const GridBox& space);

// Spatial samples of K_n^{(s)} = inverse_fourier((it)^s K~_n).
GridFunction kernel_derivative(const ScaledKernel& Kn, const MultiIndex& s, const GridBox& space);

// Spatial samples of K_n from the closed form.
GridFunction sample_kernel(const ScaledKernel& Kn, const GridBox& space);

struct MomentEntry {
    std::string index;
    int order = 0;
    double value = 0.0;
    bool integrable = true;
    bool pass = true;
};

struct MomentReport {
    double mass = 0.0;
    bool mass_pass = false;
    std::vector<MomentEntry> moments;
    int q = 0;
    double absolute_moment = 0.0;  // int (|x|^q + |x|^{q+1}) |K_1|, per axis
    int decay_exponent = 0;
    double tol = 0.0;
    bool all_pass() const;
};

MomentReport verify_moments(const FlatTopKernel& K, int q_max, double tol);

}  // namespace mixdecon
