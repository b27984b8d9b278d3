#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mixdecon/deconvolution.hpp"
#include "mixdecon/mixture_estimator.hpp"

namespace mixdecon {

enum class StudyMode { oracle_inject, full_pipeline };
// a_n = n^{-1/2}, n^{-1/2} (log n)^zeta, or n^{-delta}.
enum class AnLaw { inverse_sqrt, log_adjusted, power };

struct StudyConfig {
    std::string model = "exponential(scale=1)";
    std::string target = "spline(qtilde=2)";
    StudyMode mode = StudyMode::oracle_inject;
    AnLaw law = AnLaw::inverse_sqrt;
    double law_zeta = 0.0;
    double law_delta = 0.5;
    std::vector<double> n_grid;
    std::size_t replicates = 10;
    double u = 2.0;  // infinity allowed
    int deriv_order = 0;
    std::uint64_t seed = 1;
    double xi = 0.5;
    std::string output = "study";
    std::size_t d = 1;
    std::size_t grid_nodes = 1u << 14;  // per axis
    double grid_half_width = 16.0;
    double M = 2.0;
    double rho = 0.5;
    int kernel_leg = 1;
    InjectionShape shape = InjectionShape::bandlimited_bump;
    double omega = 2.0;
    std::size_t sieve_nodes = 40;
    std::size_t threads = 0;  // 0 = available parallelism

    void validate() const;
    double a_n(double n) const;
    MultiIndex derivative() const;
    NormOrder norm() const;
    GridBox grid() const;
};

// INI text with sections [model], [target], [study]; unknown keys are rejected.
StudyConfig parse_study_config(std::istream& is);
StudyConfig load_study_config(const std::string& path);
std::string to_ini(const StudyConfig& cfg);

struct StudyRecord {
    double n = 0.0;
    std::size_t replicate = 0;
    std::uint64_t seed = 0;
    double a_n = 0.0;
    double b = 0.0;
    double error = 0.0;
    int deriv_order = 0;
    double u = 2.0;
    bool skipped = false;
    std::string note;
};

struct SummaryRow {
    double n = 0.0;
    double a_n = 0.0;
    double median = 0.0;
    double mean = 0.0;
    double bound = 0.0;
    double ratio = 0.0;  // median / bound
    std::size_t count = 0;
};

struct RateFit {
    double slope = 0.0;
    double std_error = 0.0;
    double intercept = 0.0;
    std::size_t points = 0;
    double lo() const { return slope - 2.0 * std_error; }
    double hi() const { return slope + 2.0 * std_error; }
};

// OLS of log e on log x (algebraic) or on log log(1/x) (logarithmic).
RateFit fit_rate(std::span<const double> x, std::span<const double> e, RateScale scale);

struct UpperBoundCheck {
    std::vector<double> ratios;
    double max_ratio = 0.0;
    bool non_diverging = false;  // last / first <= 2
};

UpperBoundCheck upper_bound_check(std::span<const double> errors, std::span<const double> bounds);

struct StudyResult {
    StudyConfig config;
    std::vector<StudyRecord> records;
    std::vector<SummaryRow> summary;
    RateDescriptor predicted;
    RateFit fit_median;
    RateFit fit_mean;
    UpperBoundCheck check_median;
    UpperBoundCheck check_mean;
    bool pass = false;
    double runtime_seconds = 0.0;
};

StudyResult run_study(const StudyConfig& cfg);

std::uint64_t replicate_seed(std::uint64_t master, std::size_t n_index, std::size_t replicate);

void write_results_csv(const StudyResult& r, std::ostream& os);
void write_summary_csv(const StudyResult& r, std::ostream& os);
// Gnuplot script plotting column `ycol` against column `xcol` of `csv`.
void write_plot_script(std::ostream& os, const std::string& csv, int xcol, int ycol, const std::string& title);

// Writes <stem>_results.csv, <stem>_summary.csv and their plot scripts into `dir`.
std::vector<std::string> write_study_outputs(const StudyResult& r, const std::string& dir);

}  // namespace mixdecon
