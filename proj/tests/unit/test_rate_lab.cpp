#include "doctest.h"

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "mixdecon/rate_lab.hpp"

using namespace mixdecon;

namespace {

StudyConfig parse(const std::string& text) {
    std::istringstream is(text);
    return parse_study_config(is);
}

const char* small_study =
    "[model]\nspec = exponential(scale=1)\n"
    "[target]\nspec = spline(qtilde=2)\n"
    "[study]\nmode = oracle_inject\nn_log2 = 10, 12, 14\nreplicates = 2\nu = 2\nseed = 7\n"
    "grid_nodes = 4096\nthreads = 1\n";

}  // namespace

TEST_SUITE("rate_lab") {
    TEST_CASE("fit_rate recovers an exact power law") {
        const std::vector<double> x{1e-1, 1e-2, 1e-3, 1e-4, 1e-5};
        std::vector<double> e;
        for (double v : x) e.push_back(std::sqrt(v));
        const RateFit f = fit_rate(x, e, RateScale::algebraic);
        CHECK(f.slope == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(f.std_error < 1e-10);
        CHECK(f.points == 5);
    }

    TEST_CASE("fit_rate on the logarithmic scale") {
        const std::vector<double> x{1e-2, 1e-4, 1e-8, 1e-16, 1e-32};
        std::vector<double> e;
        for (double v : x) e.push_back(std::pow(std::log(1.0 / v), -2.0));
        const RateFit f = fit_rate(x, e, RateScale::logarithmic);
        CHECK(std::abs(f.slope + 2.0) <= 1e-10);
    }

    TEST_CASE("fit_rate recovers a noisy slope within its band") {
        std::mt19937_64 rng(2024);
        std::normal_distribution<double> noise(0.0, 0.01);
        std::vector<double> x, e;
        for (int i = 0; i < 6; ++i) {
            const double v = std::pow(10.0, -1.0 - i);
            x.push_back(v);
            e.push_back(std::pow(v, 0.57) * std::exp(noise(rng)));
        }
        const RateFit f = fit_rate(x, e, RateScale::algebraic);
        CHECK(f.lo() <= 0.57);
        CHECK(f.hi() >= 0.57);
        CHECK(std::abs(f.slope - 0.57) < 0.02);
    }

    TEST_CASE("fit_rate rejects bad input") {
        const std::vector<double> x{0.1, 0.01, 0.001}, bad{1.0, -1.0, 1.0}, two{0.1, 0.2};
        CHECK_THROWS_AS(fit_rate(x, bad, RateScale::algebraic), DomainError);
        CHECK_THROWS_AS(fit_rate(two, two, RateScale::algebraic), DomainError);
        CHECK_THROWS_AS(fit_rate(x, two, RateScale::algebraic), StructuralError);
        const std::vector<double> big{2.0, 3.0, 4.0};
        CHECK_THROWS_AS(fit_rate(big, big, RateScale::logarithmic), DomainError);
    }

    TEST_CASE("upper_bound_check ratios") {
        const std::vector<double> B{1.0, 0.5, 0.25};
        const UpperBoundCheck same = upper_bound_check(B, B);
        CHECK(same.max_ratio == doctest::Approx(1.0));
        CHECK(same.non_diverging);
        const std::vector<double> half{0.5, 0.25, 0.125};
        CHECK(upper_bound_check(half, B).max_ratio == doctest::Approx(0.5));
        const std::vector<double> growing{0.1, 0.2, 0.3};
        CHECK_FALSE(upper_bound_check(growing, B).non_diverging);
    }

    TEST_CASE("config parsing") {
        const StudyConfig c = parse(small_study);
        CHECK(c.model == "exponential(scale=1)");
        CHECK(c.n_grid == std::vector<double>{1024.0, 4096.0, 16384.0});
        CHECK(c.replicates == 2);
        CHECK(c.seed == 7);
        CHECK(c.a_n(1024.0) == doctest::Approx(1.0 / 32.0));
        const StudyConfig r = parse("[study]\nn = 2:4, 100\nu = inf\n");
        CHECK(r.n_grid == std::vector<double>{2.0, 3.0, 4.0, 100.0});
        CHECK(std::isinf(r.u));
        CHECK_THROWS_AS(parse("[study]\nn = 100, 2:4\n"), DomainError);  // not increasing
    }

    TEST_CASE("config errors") {
        CHECK_THROWS_AS(parse("[study]\nn = 1,2,3\nbogus = 1\n"), DomainError);
        CHECK_THROWS_AS(parse("[extra]\nx = 1\n[study]\nn = 4,8,16\n"), DomainError);
        CHECK_THROWS_AS(parse("[study]\nreplicates = 2\n"), DomainError);
        CHECK_THROWS_AS(parse("[study]\nn = 4,8,16\nreplicates = 1.5\n"), DomainError);
        CHECK_THROWS_AS(parse("[study]\nn = 4,x,16\n"), DomainError);
        CHECK_THROWS_AS(parse("[study]\nn = 4,8,16\nmode = magic\n"), DomainError);
        StudyConfig c = parse(small_study);
        c.n_grid = {8.0, 16.0};
        CHECK_THROWS_AS(c.validate(), DomainError);
        c = parse(small_study);
        c.replicates = 0;
        CHECK_THROWS_AS(c.validate(), DomainError);
    }

    TEST_CASE("ini round trip") {
        const StudyConfig c = parse(small_study);
        const StudyConfig back = parse(to_ini(c));
        CHECK(to_ini(back) == to_ini(c));
        CHECK(back.n_grid == c.n_grid);
    }

    TEST_CASE("replicate seeds are distinct and order independent") {
        CHECK(replicate_seed(1, 0, 0) == replicate_seed(1, 0, 0));
        CHECK(replicate_seed(1, 0, 1) != replicate_seed(1, 1, 0));
        CHECK(replicate_seed(1, 2, 3) != replicate_seed(2, 2, 3));
    }

    TEST_CASE("study is deterministic and well formed") {
        StudyConfig c = parse(small_study);
        const StudyResult a = run_study(c);
        c.threads = 2;
        const StudyResult b = run_study(c);
        std::ostringstream sa, sb, ma, mb;
        write_results_csv(a, sa);
        write_results_csv(b, sb);
        write_summary_csv(a, ma);
        write_summary_csv(b, mb);
        CHECK(sa.str() == sb.str());
        CHECK(ma.str() == mb.str());
        REQUIRE(a.records.size() == 6);
        REQUIRE(a.summary.size() == 3);
        for (const auto& r : a.records) {
            CHECK_FALSE(r.skipped);
            CHECK(r.error > 0.0);
        }
        CHECK(a.summary[2].median < a.summary[0].median);
        CHECK(sa.str().rfind("n,replicate,seed,a_n,b,error,deriv_order,u\n", 0) == 0);
        CHECK(ma.str().rfind("n,median,mean,bound,ratio\n", 0) == 0);
        CHECK(a.predicted.scale == RateScale::algebraic);
    }

    TEST_CASE("plot script references columns only") {
        std::ostringstream os;
        write_plot_script(os, "s_summary.csv", 1, 2, "median");
        CHECK(os.str().find("using 1:2") != std::string::npos);
    }
}
