#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mixdecon/errors.hpp"
#include "mixdecon/mixing_targets.hpp"
#include "mixdecon/noise_models.hpp"
#include "mixdecon/numerics.hpp"

namespace mixdecon {

// p_hat = sum_i w_i atom_i, atoms are smooth bumps of half-width `width` at the centers.
class SieveMixing {
public:
    SieveMixing(std::size_t d, std::vector<double> centers, std::vector<double> weights, double width);

    std::size_t dim() const { return d_; }
    std::size_t atoms() const { return weights_.size(); }
    const std::vector<double>& centers() const { return centers_; }  // atoms() rows of length d
    const std::vector<double>& weights() const { return weights_; }
    double width() const { return width_; }
    double total_weight() const;

    double value(std::span<const double> y) const;
    cplx transform(std::span<const double> t) const;
    GridFunction sample(const GridBox& space) const;
    SmoothnessClass smoothness() const;

    // Transform of the unit smooth bump on [-1, 1].
    static double bump_transform(double s);

private:
    std::size_t d_;
    std::vector<double> centers_;
    std::vector<double> weights_;
    double width_;
    MixingDensity atom_;
};

struct SieveConfig {
    std::size_t nodes = 40;        // atoms per axis
    double width = 0.0;            // atom half-width; 0 picks 3 node spacings
    double lo = -1.0, hi = 1.0;    // compact support of the mixing density
    double b0 = 0.5;               // reference bandwidth of the frequency window
    double M = 2.0;
    std::size_t freq_nodes = 0;    // window nodes per axis; 0 picks 513 (d=1) or 65
    std::size_t max_iter = 200000;
    double tol = 1e-10;            // stop when the normalized objective drops by less
};

// Window-weighted characteristic-function least squares over the simplex.
class SieveCriterion {
public:
    SieveCriterion(std::span<const double> samples, const NoiseModel& h, const SieveConfig& cfg);

    std::size_t dim() const { return d_; }
    std::size_t atoms() const { return J_; }
    const std::vector<double>& centers() const { return centers_; }
    double width() const { return width_; }
    // Q(w) = sum_k omega_k |sum_i A_ki w_i - phi_n(t_k)|^2.
    double value(std::span<const double> w) const;
    std::vector<double> gradient(std::span<const double> w) const;
    double lipschitz() const { return lipschitz_; }
    // Weights proportional to p at the centers (the truth projected on the sieve).
    std::vector<double> project(const MixingDensity& p) const;

private:
    std::size_t d_, J_;
    double width_;
    std::vector<double> centers_;
    std::vector<double> G_;  // J x J, real part of A^H Omega A
    std::vector<double> c_;  // Re(A^H Omega phi)
    double phi_energy_ = 0.0;
    double lipschitz_ = 0.0;
};

struct SieveFit {
    SieveMixing mixing;
    GridFunction p_hat;
    GridFunction f_hat;  // h * p_hat on the same grid
    double objective = 0.0;
    std::size_t iterations = 0;
    std::vector<double> trace;  // objective per iterate
};

class FitNotConverged : public NumericError {
public:
    FitNotConverged(const std::string& what, std::vector<double> last) : NumericError(what), last_iterate(std::move(last)) {}
    std::vector<double> last_iterate;
};

// Euclidean projection onto {w >= 0, sum w = 1}.
std::vector<double> project_simplex(std::span<const double> v);

SieveFit fit_minimum_distance(std::span<const double> samples, const NoiseModel& h, const SieveConfig& cfg,
                              const GridBox& space);

enum class InjectionShape { bandlimited_bump, random_phase };

struct Injection {
    GridFunction p_hat;
    GridFunction f_hat;
    GridFunction f_p;
    double amplitude = 0.0;
    double achieved = 0.0;  // ||f_hat - f_p||_u
    int bisection_steps = 0;
    double max_feasible = 0.0;
};

// p_hat = p (1 + A (phi - c)) with int p (phi - c) = 0 and A capped by p_hat >= 0.
Injection oracle_inject(const GridFunction& p, const NoiseModel& h, double a_n, NormOrder u,
                        InjectionShape shape, std::uint64_t seed = 0, double omega = 2.0);

enum class QualityMode { measured, injected };

struct EstimateQuality {
    NormOrder u = NormOrder(1.0);
    double a_n = 0.0;
    QualityMode mode = QualityMode::measured;
};

EstimateQuality measure_quality(const GridFunction& f_hat, const GridFunction& f_p, NormOrder u);

}  // namespace mixdecon
