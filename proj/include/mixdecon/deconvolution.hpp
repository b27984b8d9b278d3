#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mixdecon/kernels.hpp"
#include "mixdecon/mixing_targets.hpp"
#include "mixdecon/noise_models.hpp"
#include "mixdecon/numerics.hpp"

namespace mixdecon {

struct BandwidthPlan {
    double b = 1.0;
    double M = 2.0;      // kernel half-band
    double M_n = 0.0;    // band limit of the regularized transfer
    double m = 0.5;
    double v_n = 0.0;    // threshold scale
    double delta = 0.0;  // threshold tilt
    double xi = 0.0;
    double zeta = 0.0;
    double tilt = 0.0;   // thresholds v_{n,j} = v_n / j^tilt (beta + delta)
    double a_n = 0.0;    // error level the plan was built for (0 when b was given)
    std::string model;
};

// Schedule for a given bandwidth: m, M_n, v_n, delta and zeta per noise class.
BandwidthPlan plan_for_bandwidth(const NoiseModel& model, double b, double xi = 0.5,
                                 double M = 2.0);

// The bandwidth balancing approximation and transfer terms for error level a_n.
BandwidthPlan select_bandwidth(const NoiseModel& model, double a_n, const SmoothnessClass& klass,
                               std::size_t d, double xi = 0.5, double M = 2.0);

enum class RateScale { algebraic, logarithmic };

struct RateDescriptor {
    RateScale scale = RateScale::algebraic;
    double exponent = 0.0;          // includes the derivative factor
    double base_exponent = 0.0;     // s = 0
    double derivative_factor = 1.0; // (q~ - [s]) / q~
    // a_n^exponent or log(1/a_n)^{-exponent}.
    double bound(double a_n) const;
};

RateDescriptor predicted_exponent(const NoiseModel& model, const SmoothnessClass& klass,
                                  std::size_t d, const MultiIndex& s, double zeta = 0.0);

struct PsiResult {
    GridFunction spectrum;  // psi~ on the dual grid
    GridFunction spatial;   // psi on the spatial grid
};

// psi_n = inverse transform of K~_n / h~. Requires h~ != 0 on the kernel band.
PsiResult psi(const ScaledKernel& Kn, const NoiseModel& model, const GridBox& space);

struct PsiL1Report {
    double numeric = 0.0;  // ||psi_n||_1 on the grid
    double mid = 0.0;      // (int_band |K~(tb)|^2 |h~|^{-2} dt)^{1/2}
    double coarse = 0.0;   // sup_band |h~|^{-1} b^{-d/2}
    double ratio() const { return numeric / mid; }
};

PsiL1Report psi_l1_report(const ScaledKernel& Kn, const NoiseModel& model, const GridBox& space);

struct Region {
    std::int64_t j = 0;  // positive root index; negative roots mirror it
    double threshold = 0.0;
    std::vector<std::pair<double, double>> intervals;  // in t, within the cell of root j
    bool degenerate = false;
    double length() const;
};

struct TransferOptions {
    bool strict = false;                   // throw on degenerate regions instead of clamping
    std::int64_t explicit_regions = 2048;  // regions materialized and summed exactly
};

// Band-limited transfer with |h~| floored at v_{n,j} near the j-th root.
class RegularizedTransfer {
public:
    RegularizedTransfer(NoiseModel model, BandwidthPlan plan, TransferOptions options = {});

    const NoiseModel& model() const { return model_; }
    const BandwidthPlan& plan() const { return plan_; }
    double band() const { return plan_.M_n; }
    bool trivial() const { return !model_.is_oscillatory(); }
    std::int64_t root_count() const { return J_; }  // positive roots in the band
    double threshold(std::int64_t j) const;
    double min_threshold() const;
    // Signed index of the nearest in-band root (0 when there is none).
    std::int64_t nearest_root(double t) const;
    const std::vector<Region>& regions() const { return regions_; }
    std::size_t degenerate_count() const { return degenerate_; }

    cplx evaluate_1d(double t) const;
    cplx evaluate(std::span<const double> t) const;
    GridFunction spectrum(const GridBox& space) const;

    // Region of root j >= 1 (materialized on demand beyond the explicit count).
    Region region(std::int64_t j) const;
    // int over the cell of root j of ((v_{n,j} - |h~|)_+)^2 dt.
    double distortion(std::int64_t j) const;
    double distortion_continuous(double x) const;

private:
    // Cell of root j in the reduced variable s = t/lambda - j pi.
    std::pair<double, double> cell(std::int64_t j) const;
    double g(double x, double s) const;  // |h~| at t = lambda (x pi + s)
    Region make_region(std::int64_t j) const;

    NoiseModel model_;
    BandwidthPlan plan_;
    TransferOptions options_;
    std::int64_t J_ = 0;
    std::vector<Region> regions_;
    std::size_t degenerate_ = 0;
};

RegularizedTransfer build_transfer(const NoiseModel& model, const BandwidthPlan& plan,
                                   TransferOptions options = {});

// ||h~ - h~ 1[|t| <= M_n]||_2 (box [-M_n, M_n]^d).
double tail_T(const NoiseModel& model, double M_n);

// ||h~ - h~*||_2 inside the band.
double reg_S(const RegularizedTransfer& transfer);

struct PsiStarResult {
    GridFunction spectrum;
    GridFunction spatial;
    double l2_norm = 0.0;  // ||psi~*||_2 by quadrature
};

PsiStarResult psi_star(const ScaledKernel& Kn, const RegularizedTransfer& transfer,
                       const GridBox& space);
double psi_star_l2(const ScaledKernel& Kn, const RegularizedTransfer& transfer);

// K_n * p_hat and K_n^{(s)} * p_hat by spectral multiplication.
GridFunction smoothed_estimate(const GridFunction& p_hat, const BandwidthPlan& plan,
                               const FlatTopKernel& K);
GridFunction derivative_estimate(const GridFunction& p_hat, const BandwidthPlan& plan,
                                 const FlatTopKernel& K, const MultiIndex& s,
                                 const SmoothnessClass& klass);

struct BoundReport {
    double b = 0.0, m = 0.0, v_n = 0.0, M_n = 0.0, a_n = 0.0;
    double psi_star_l2 = 0.0;
    double T = 0.0, S = 0.0;
    double c_hat = 0.0;      // Parseval ratio ||psi*||_2 / ||psi~*||_2 on the grid
    double c_hat_l1 = 0.0;   // ||psi*||_1 / ||psi~*||_2
    double c_lhs = 0.0;      // 1 - c_hat ||psi~*||_2 (S + T)
    double c_left_measured = 0.0;  // ||psi* * (h* - h) * (p_hat - p)||_u / (||psi~*||_2 (S+T) ||p_hat - p||_u)
    double approx_term = 0.0;      // b^q w_q(b)
    double c_right = 0.0;          // measured approximation constant
    double transfer_term = 0.0;    // ||psi~*||_2 a_n
    double rhs = 0.0;              // c_right approx_term + c_hat_l1 transfer_term
    double implied_bound = 0.0;    // rhs / c_lhs (infinite when c_lhs <= 0)
    double error = 0.0;            // ||p_hat - p||_u
    double smoothed_diff = 0.0;    // ||K_n * (p_hat - p)||_u
    double chain_regularization = 0.0;
    double chain_transfer = 0.0;   // ||psi* * (f_hat - f_p)||_u
    double young_bound = 0.0;      // ||psi*||_1 ||f_hat - f_p||_u
    std::size_t degenerate_regions = 0;
    bool chain_ok = false;
    bool young_ok = false;
    bool c_lhs_positive = false;
    bool c_lhs_ge_half = false;
    bool finite = false;
};

// All grids share one spatial box; f_hat and f_p are the observed-scale densities.
BoundReport bound_report(const GridFunction& p_hat, const GridFunction& p,
                         const GridFunction& f_hat, const GridFunction& f_p,
                         const RegularizedTransfer& transfer, const FlatTopKernel& K,
                         const SmoothnessClass& klass, NormOrder u);

// Model-only terms for error level a_n; `space` is only used for the grid constants.
BoundReport bound_terms(const RegularizedTransfer& transfer, const FlatTopKernel& K,
                        const SmoothnessClass& klass, double a_n, const GridBox& space);

}  // namespace mixdecon
