#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "mixdecon/errors.hpp"
#include "mixdecon/kernels.hpp"
#include "mixdecon/mixture_estimator.hpp"

using namespace mixdecon;

namespace {

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

const GridBox& fit_box() {
    static const GridBox box = GridBox::uniform(1, -16.0, 16.0, 1 << 12);
    return box;
}

}  // namespace

TEST_SUITE("mixture_estimator") {
    TEST_CASE("simplex projection") {
        const std::vector<double> v{0.5, -0.2, 0.9, 0.1};
        const auto w = project_simplex(v);
        double s = 0.0;
        for (double x : w) {
            CHECK(x >= 0.0);
            s += x;
        }
        CHECK(s == doctest::Approx(1.0).epsilon(1e-15));
        const std::vector<double> inside{0.25, 0.25, 0.5};
        CHECK(project_simplex(inside) == inside);
        CHECK_THROWS_AS(project_simplex(std::vector<double>{}), DomainError);
    }

    TEST_CASE("sieve mixing is a smooth density") {
        const SieveMixing m(1, {-0.5, 0.0, 0.5}, {0.2, 0.5, 0.3}, 0.2);
        CHECK(m.total_weight() == doctest::Approx(1.0));
        const GridBox box = GridBox::uniform(1, -2.0, 2.0, 1 << 12);
        CHECK(std::abs(mass(m.sample(box)) - 1.0) <= 1e-8);
        const double t[1] = {0.0};
        CHECK(std::abs(m.transform(t) - cplx(1.0)) <= 1e-12);
        CHECK(SieveMixing::bump_transform(0.0) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(m.smoothness().qtilde() >= 6.0);
        CHECK_THROWS_AS(SieveMixing(1, {0.0}, {-1.0}, 0.2), DomainError);
    }

    TEST_CASE("fit is a density with an objective below the truth projection") {
        const auto p = MixingDensity::smooth_bump();
        const NoiseModel h = NoiseModel::gaussian();
        const auto x = sample_mixture(p, h, 4000, 3);
        SieveConfig cfg;
        cfg.nodes = 40;
        const SieveFit fit = fit_minimum_distance(x, h, cfg, fit_box());
        CHECK(fit.mixing.atoms() == 40);
        CHECK(std::abs(fit.mixing.total_weight() - 1.0) <= 1e-12);
        CHECK(std::abs(mass(fit.p_hat) - 1.0) <= 1e-8);
        const SieveCriterion crit(x, h, cfg);
        CHECK(crit.value(crit.project(p)) >= fit.objective);
        CHECK(fit.objective == doctest::Approx(crit.value(fit.mixing.weights())).epsilon(1e-12));
        for (std::size_t k = 1; k < fit.trace.size(); ++k) CHECK(fit.trace[k] <= fit.trace[k - 1] + 1e-15);
        CHECK(sup_error(fit.f_hat, apply_noise(fit.p_hat, h)) <= 1e-10);
    }

    TEST_CASE("fit errors") {
        const NoiseModel h = NoiseModel::gaussian();
        const auto x = sample_mixture(MixingDensity::smooth_bump(), h, 500, 1);
        SieveConfig cfg;
        cfg.nodes = 1;
        CHECK_THROWS_AS(fit_minimum_distance(x, h, cfg, fit_box()), DomainError);
        CHECK_THROWS_AS(fit_minimum_distance(std::vector<double>{}, h, SieveConfig{}, fit_box()), DomainError);
        cfg.nodes = 40;
        cfg.max_iter = 3;
        try {
            fit_minimum_distance(x, h, cfg, fit_box());
            FAIL("expected FitNotConverged");
        } catch (const FitNotConverged& e) {
            CHECK(e.last_iterate.size() == 40);
        }
    }

    TEST_CASE("measured error decreases with n") {
        const auto p = MixingDensity::smooth_bump();
        const NoiseModel h = NoiseModel::gaussian();
        const auto fp = apply_noise(p.sample(fit_box()), h);
        std::vector<double> med;
        for (std::size_t n : {1000u, 4000u, 16000u}) {
            std::vector<double> e;
            for (std::uint64_t seed = 1; seed <= 10; ++seed) {
                const SieveFit fit = fit_minimum_distance(sample_mixture(p, h, n, seed), h, SieveConfig{}, fit_box());
                e.push_back(measure_quality(fit.f_hat, fp, NormOrder(1.0)).a_n);
            }
            med.push_back(median(e));
        }
        CHECK(med[1] < med[0]);
        CHECK(med[2] < med[1]);
    }

    TEST_CASE("oracle injection hits the target level") {
        const GridBox box = GridBox::uniform(1, -16.0, 16.0, 1 << 13);
        const auto p = MixingDensity::spline_holder(2.0).sample(box);
        for (const auto& h : {NoiseModel::exponential(), NoiseModel::uniform(1), NoiseModel::gaussian()})
            for (NormOrder u : {NormOrder(1.0), NormOrder(2.0), NormOrder::infinity()})
                for (auto shape : {InjectionShape::bandlimited_bump, InjectionShape::random_phase}) {
                    const Injection inj = oracle_inject(p, h, 1e-3, u, shape, 4);
                    CHECK(std::abs(lp_distance(inj.f_hat, inj.f_p, u) - 1e-3) <= 1e-6);
                    CHECK(inj.bisection_steps <= 60);
                    CHECK(sup_error(inj.f_hat, apply_noise(inj.p_hat, h)) <= 1e-10);
                    CHECK(std::abs(mass(inj.p_hat) - mass(p)) <= 1e-12);
                    for (double v : inj.p_hat.real_values()) CHECK(v >= 0.0);
                }
    }

    TEST_CASE("oracle injection limits and errors") {
        const GridBox box = GridBox::uniform(1, -16.0, 16.0, 1 << 12);
        const auto p = MixingDensity::smooth_bump().sample(box);
        const NoiseModel h = NoiseModel::laplace();
        const Injection zero = oracle_inject(p, h, 0.0, NormOrder(2.0), InjectionShape::bandlimited_bump);
        CHECK(sup_error(zero.p_hat, p) == 0.0);
        CHECK(sup_error(zero.f_hat, zero.f_p) == 0.0);
        const auto a = oracle_inject(p, h, 1e-3, NormOrder(2.0), InjectionShape::random_phase, 8);
        const auto b = oracle_inject(p, h, 1e-3, NormOrder(2.0), InjectionShape::random_phase, 8);
        CHECK(sup_error(a.f_hat, b.f_hat) == 0.0);
        try {
            oracle_inject(p, h, 10.0, NormOrder(2.0), InjectionShape::bandlimited_bump);
            FAIL("expected DomainError");
        } catch (const DomainError& e) {
            CHECK(std::string(e.what()).find("max feasible") != std::string::npos);
        }
        CHECK_THROWS_AS(oracle_inject(p, h, -1.0, NormOrder(2.0), InjectionShape::bandlimited_bump), DomainError);
    }

    TEST_CASE("estimate smoothness supports the kernel approximation") {
        const SieveMixing m(1, {-0.4, 0.1, 0.5}, {0.3, 0.4, 0.3}, 0.3);
        const GridBox box = GridBox::uniform(1, -16.0, 16.0, 1 << 14);
        const auto ps = m.sample(box);
        const FlatTopKernel K = build_kernel(1);
        double prev = INFINITY;
        // Faster than any fixed power once b is small: each halving gains more than b^2.
        for (double b : {0.05, 0.025, 0.0125, 0.00625}) {
            const auto sm = inverse_fourier(fourier(ps) * kernel_spectrum(scale(K, b), box));
            const double e = lp_distance(sm, ps, NormOrder::infinity());
            CHECK(e < prev / 4.0);
            prev = e;
        }
    }

    TEST_CASE("measure quality") {
        const GridBox box = GridBox::uniform(1, -1.0, 1.0, 64);
        const auto f = GridFunction::sample(box, Domain::spatial, [](std::span<const double>) { return cplx(1.0); });
        const auto g = GridFunction::sample(box, Domain::spatial, [](std::span<const double>) { return cplx(0.0); });
        const EstimateQuality q = measure_quality(f, g, NormOrder(1.0));
        CHECK(q.a_n == doctest::Approx(2.0));
        CHECK(q.mode == QualityMode::measured);
    }
}
