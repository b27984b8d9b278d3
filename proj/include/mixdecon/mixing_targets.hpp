#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mixdecon/kernels.hpp"
#include "mixdecon/noise_models.hpp"
#include "mixdecon/numerics.hpp"

namespace mixdecon {

// Holder class: q derivatives, the q-th with modulus w_q(delta) = L delta^gamma.
struct SmoothnessClass {
    int q = 0;
    double gamma = 1.0;
    double L = 1.0;
    double qtilde() const { return q + gamma; }
    double modulus(double delta) const;
};

enum class TargetFamily { smooth_bump, spline_holder, two_bump };

// Compactly supported product density p(y) = prod_j g((y_j - c)/w) / w on [lo, hi]^d.
class MixingDensity {
public:
    static MixingDensity smooth_bump(double lo = -1.0, double hi = 1.0, std::size_t d = 1);
    // g(u) = C (1 - u^2)_+^qtilde: Holder order exactly qtilde at u = +-1.
    static MixingDensity spline_holder(double qtilde, double lo = -1.0, double hi = 1.0,
                                       std::size_t d = 1);
    // Equal mixture of two overlapping qtilde = 3 power bumps.
    static MixingDensity two_bump(double lo = -1.0, double hi = 1.0, std::size_t d = 1);

    TargetFamily family() const { return family_; }
    std::size_t dim() const { return d_; }
    std::pair<double, double> support_1d() const { return {lo_, hi_}; }
    const SmoothnessClass& smoothness() const { return klass_; }
    std::string spec() const;

    double value_1d(double y) const;
    // k-th derivative, k <= q (order beyond q is a domain error).
    double derivative_1d(double y, int k) const;
    double value(std::span<const double> y) const;
    double derivative(std::span<const double> y, const MultiIndex& s) const;

    GridFunction sample(const GridBox& space) const;
    GridFunction sample_derivative(const GridBox& space, const MultiIndex& s) const;

private:
    MixingDensity(TargetFamily f, double param, double lo, double hi, std::size_t d);
    double shape(double u, int k) const;  // k-th derivative of g in u
    void calibrate_modulus();

    TargetFamily family_;
    double param_;  // qtilde for spline_holder
    double lo_, hi_;
    std::size_t d_;
    double norm_ = 1.0;
    std::vector<std::vector<double>> bump_polys_;  // smooth bump derivative numerators
    SmoothnessClass klass_;
};

MixingDensity make_target(const std::string& family, double param = 2.0, double lo = -1.0,
                          double hi = 1.0, std::size_t d = 1);
MixingDensity parse_target(const std::string& spec, std::size_t d = 1);

// h * p by spatial linear convolution of sampled densities; `space` must contain
// the support of p. The output box covers the Minkowski sum of the supports.
GridFunction forward_density(const MixingDensity& p, const NoiseModel& h, const GridBox& space);

// h * f on the same grid by spectral multiplication with the closed-form h~.
GridFunction apply_noise(const GridFunction& f, const NoiseModel& h);

// n draws X = Y + eps (rows of length d); Y by inverse CDF on a 2^16-node grid.
std::vector<double> sample_mixture(const MixingDensity& p, const NoiseModel& h, std::size_t n,
                                   std::uint64_t seed);

}  // namespace mixdecon
