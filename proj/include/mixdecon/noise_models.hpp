#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "mixdecon/numerics.hpp"
#include "mixdecon/rng.hpp"

namespace mixdecon {

enum class NoiseFamily { gaussian, cauchy, exponential, laplace, uniform, identity };

// |h~(t)| ~ prod |t_j|^{beta_j} exp(-sum alpha_j |t_j|^k)
struct SuperSmooth {
    std::vector<double> alpha;
    double k = 2.0;
    std::vector<double> beta;
    double alpha_bar() const;
};

// |h~(t)| ~ prod |t_j|^{-beta_j}
struct Smooth {
    std::vector<double> beta;
    double beta_bar() const;
};

// |h~(t)| ~ |sin(t/lambda)|^mu |t|^{-beta}, zeros at j*pi*lambda, h~ != 0 on |t| <= onset.
struct Oscillatory {
    int mu = 1;
    double beta = 1.0;
    double lambda = 1.0;
    double onset = 0.0;
};

using NoiseClass = std::variant<SuperSmooth, Smooth, Oscillatory>;

class NoiseModel {
public:
    static NoiseModel gaussian(std::size_t d = 1, double sigma = 1.0);
    static NoiseModel cauchy(std::size_t d = 1, double scale = 1.0);
    static NoiseModel exponential(std::size_t d = 1, double scale = 1.0);
    static NoiseModel laplace(std::size_t d = 1, double scale = 1.0);
    static NoiseModel uniform(int m = 1, double lambda = 1.0);
    // h = point mass at 0, h~ = 1: the noiseless reference model.
    static NoiseModel identity(std::size_t d = 1);

    NoiseFamily family() const { return family_; }
    std::size_t dim() const { return d_; }
    const NoiseClass& klass() const { return klass_; }
    bool is_oscillatory() const { return std::holds_alternative<Oscillatory>(klass_); }
    double param() const { return param_; }
    int order() const { return m_; }
    std::string spec() const;

    cplx htilde_1d(double t) const;
    cplx htilde(std::span<const double> t) const;
    double density_1d(double x) const;
    double density(std::span<const double> x) const;
    bool has_density() const { return family_ != NoiseFamily::identity; }

    // Per-axis support [lo, hi] of h (infinite where unbounded).
    std::pair<double, double> support_1d() const;
    // Per-axis interval carrying all but `tail` of the mass.
    std::pair<double, double> effective_support_1d(double tail) const;

    // Model envelope (per axis) and sandwich constants C1 <= |h~|/env <= C2 for |t| >= onset.
    double envelope_1d(double t) const;
    double c1() const { return c1_; }
    double c2() const { return c2_; }
    double onset() const { return onset_; }

private:
    NoiseModel(NoiseFamily f, std::size_t d, double param, int m);

    NoiseFamily family_;
    std::size_t d_;
    double param_;  // sigma, scale, or lambda
    int m_;         // fold count for the uniform family
    NoiseClass klass_;
    double c1_ = 1.0, c2_ = 1.0, onset_ = 0.0;
};

NoiseModel parse_noise_model(const std::string& spec, std::size_t d = 1);

cplx htilde(const NoiseModel& model, std::span<const double> t);
double h_density(const NoiseModel& model, std::span<const double> x);

// inf |h~| over the box prod [-B_j, B_j] from the monotone envelope.
double envelope_inf(const NoiseModel& model, std::span<const double> half_widths);
double envelope_inf(const NoiseModel& model, double half_width);

struct ZeroSet {
    double band = 0.0;
    double period = 0.0;       // distance between consecutive roots
    std::int64_t count = 0;    // N(M_n) = 2 floor(M_n / period)
    double separation = 0.0;
    std::int64_t max_index() const { return count / 2; }
    double root(std::int64_t j) const { return static_cast<double>(j) * period; }
    std::vector<double> roots() const;  // sorted; throws beyond 10^7 roots
};

ZeroSet zeros_in_band(const NoiseModel& model, double M_n);

// n draws from h; rows of length dim() in row-major order.
std::vector<double> sample_noise(const NoiseModel& model, std::size_t n, Rng& rng);

// Frequency samples of h~ on the dual grid of `space`.
GridFunction transfer_spectrum(const NoiseModel& model, const GridBox& space);

}  // namespace mixdecon
