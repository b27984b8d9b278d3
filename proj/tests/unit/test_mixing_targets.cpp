#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "mixdecon/errors.hpp"
#include "mixdecon/mixing_targets.hpp"

using namespace mixdecon;

namespace {

std::vector<MixingDensity> targets() {
    return {MixingDensity::smooth_bump(), MixingDensity::spline_holder(1.5), MixingDensity::spline_holder(2.0),
            MixingDensity::spline_holder(3.0), MixingDensity::two_bump()};
}

double cdf_at(const GridFunction& f, double x) {
    const Axis& ax = f.space_box().axis(0);
    double acc = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double xi = ax.node(i);
        if (xi + 0.5 * ax.spacing() > x) {
            acc += f[i].real() * std::max(0.0, x - (xi - 0.5 * ax.spacing()));
            break;
        }
        acc += f[i].real() * ax.spacing();
    }
    return acc;
}

}  // namespace

TEST_SUITE("mixing_targets") {
    TEST_CASE("smooth bump") {
        const auto p = MixingDensity::smooth_bump();
        CHECK(p.value_1d(-1.0) == 0.0);
        CHECK(p.value_1d(1.0) == 0.0);
        CHECK(p.value_1d(0.0) > 0.0);
        const double m = integrate([&](double y) { return p.value_1d(y); }, -1.0, 1.0);
        CHECK(std::abs(m - 1.0) <= 1e-6);
    }

    TEST_CASE("all targets are normalized nonnegative densities") {
        const GridBox box = GridBox::uniform(1, -2.0, 2.0, 1 << 14);
        for (const auto& p : targets()) {
            CHECK(std::abs(integrate([&](double y) { return p.value_1d(y); }, -1.0, 1.0) - 1.0) <= 1e-8);
            CHECK(is_density(p.sample(box)));
            const auto [lo, hi] = p.support_1d();
            for (int k = 0; k <= p.smoothness().q; ++k) {
                CHECK(std::abs(p.derivative_1d(lo, k)) <= 1e-12);
                CHECK(std::abs(p.derivative_1d(hi, k)) <= 1e-12);
            }
        }
    }

    TEST_CASE("spline holder has exact order at the knot") {
        const auto p = MixingDensity::spline_holder(2.0);
        CHECK(p.smoothness().q == 1);
        CHECK(p.smoothness().gamma == doctest::Approx(1.0));
        // The first derivative is Lipschitz: difference quotients stay bounded across the knot.
        double worst = 0.0;
        for (double h = 1e-2; h >= 1e-5; h /= 10.0) {
            const double q = std::abs(p.derivative_1d(1.0 - h, 1) - p.derivative_1d(1.0, 1)) / h;
            worst = std::max(worst, q);
            // Second difference ratio across the knot stays bounded.
            const double d2 = std::abs(p.value_1d(1.0 + h) - 2.0 * p.value_1d(1.0) + p.value_1d(1.0 - h)) / (h * h);
            CHECK(d2 <= 2.0 * p.smoothness().L + 1e-6);
        }
        CHECK(worst <= p.smoothness().L * (1.0 + 1e-9));
        CHECK(worst > 0.1 * p.smoothness().L);
        CHECK(MixingDensity::spline_holder(1.5).smoothness().gamma == doctest::Approx(0.5));
        CHECK_THROWS_AS(MixingDensity::spline_holder(0.0), DomainError);
    }

    TEST_CASE("two bump is bimodal") {
        const auto p = MixingDensity::two_bump();
        std::vector<double> v;
        for (double y = -1.0; y <= 1.0; y += 1e-3) v.push_back(p.value_1d(y));
        int modes = 0;
        double dip = INFINITY;
        for (std::size_t i = 1; i + 1 < v.size(); ++i) {
            if (v[i] > v[i - 1] && v[i] >= v[i + 1]) ++modes;
            if (v[i] < v[i - 1] && v[i] <= v[i + 1]) dip = v[i];
        }
        CHECK(modes == 2);
        CHECK(dip > 0.0);
    }

    TEST_CASE("derivative consistency with finite differences") {
        for (const auto& p : targets()) {
            const int top = std::min(2, p.smoothness().q);
            const double h = 1e-4;
            for (double y = -0.93; y < 0.95; y += 0.0731) {
                if (top >= 1) {
                    const double fd = (p.value_1d(y + h) - p.value_1d(y - h)) / (2.0 * h);
                    CHECK(std::abs(fd - p.derivative_1d(y, 1)) <= 1e-5);
                }
                if (top >= 2) {
                    const double fd = (p.value_1d(y + h) - 2.0 * p.value_1d(y) + p.value_1d(y - h)) / (h * h);
                    CHECK(std::abs(fd - p.derivative_1d(y, 2)) <= 1e-5 * std::max(1.0, std::abs(fd)));
                }
            }
            CHECK_THROWS_AS(p.derivative_1d(0.0, p.smoothness().q + 1), DomainError);
        }
    }

    TEST_CASE("modulus certificate") {
        for (const auto& p : targets()) {
            const SmoothnessClass& c = p.smoothness();
            for (double b : {0.2, 0.05, 0.01, 0.002})
                for (double y = -1.2; y <= 1.2; y += 0.013)
                    for (double s : {-1.0, -0.5, 0.5, 1.0}) {
                        const double diff = std::abs(p.derivative_1d(y + s * b, c.q) - p.derivative_1d(y, c.q));
                        CHECK(diff <= c.modulus(std::abs(s) * b) * (1.0 + 1e-9) + 1e-12);
                    }
        }
    }

    TEST_CASE("forward density") {
        const GridBox box = GridBox::uniform(1, -2.0, 2.0, 1 << 12);
        const auto p = MixingDensity::smooth_bump();
        const auto fg = forward_density(p, NoiseModel::gaussian(), box);
        CHECK(std::abs(mass(fg) - 1.0) <= 1e-4);
        const auto fu = forward_density(p, NoiseModel::uniform(1), box);
        for (std::size_t i = 0; i < fu.size(); ++i) {
            const double x = fu.space_box().axis(0).node(i);
            if (std::abs(x) > 2.0 + 1e-9) CHECK(std::abs(fu[i]) <= 1e-14);
        }
        CHECK(std::abs(mass(fu) - 1.0) <= 1e-3);
    }

    TEST_CASE("convolution theorem for f_p") {
        const GridBox box = GridBox::uniform(1, -16.0, 16.0, 1 << 14);
        const auto p = MixingDensity::smooth_bump().sample(box);
        for (const auto& h : {NoiseModel::gaussian(), NoiseModel::laplace(), NoiseModel::uniform(1)}) {
            const auto fp = apply_noise(p, h);
            const auto lhs = fourier(fp), rhs = fourier(p) * transfer_spectrum(h, box);
            CHECK(sup_error(lhs, rhs) <= 1e-5);
            // Agrees with the spatial convolution on the common grid.
            const auto fs = resample_aligned(forward_density(MixingDensity::smooth_bump(), h, box), box);
            CHECK(sup_error(fp, fs) <= 2e-3);
        }
    }

    TEST_CASE("support containment when 0 lies in the noise support") {
        const GridBox box = GridBox::uniform(1, -2.0, 2.0, 1 << 12);
        for (const auto& p : targets())
            for (const auto& h : {NoiseModel::gaussian(), NoiseModel::cauchy(), NoiseModel::exponential(),
                                  NoiseModel::laplace(), NoiseModel::uniform(1), NoiseModel::uniform(2)}) {
                const auto f = forward_density(p, h, box);
                for (double y = -0.99; y < 1.0; y += 0.01) {
                    if (p.value_1d(y) <= 0.0) continue;
                    const Axis& ax = f.space_box().axis(0);
                    const auto i = static_cast<std::size_t>(std::llround((y - ax.lo) / ax.spacing()));
                    CHECK(f[i].real() > 0.0);
                }
            }
    }

    TEST_CASE("mixture sampler") {
        const auto p = MixingDensity::two_bump();
        const NoiseModel h = NoiseModel::gaussian();
        const std::size_t n = 100000;
        const auto x = sample_mixture(p, h, n, 5);
        CHECK(x == sample_mixture(p, h, n, 5));
        double mean = 0.0;
        for (double v : x) mean += v / n;
        const double mp = integrate([&](double y) { return y * p.value_1d(y); }, -1.0, 1.0);
        const double vp = integrate([&](double y) { return y * y * p.value_1d(y); }, -1.0, 1.0) - mp * mp;
        CHECK(std::abs(mean - mp) <= 3.0 * std::sqrt((vp + 1.0) / n));
        CHECK_THROWS_AS(sample_mixture(p, h, 0, 1), DomainError);
    }

    TEST_CASE("kolmogorov distance to f_p") {
        const auto p = MixingDensity::smooth_bump();
        const NoiseModel h = NoiseModel::laplace();
        const auto f = forward_density(p, h, GridBox::uniform(1, -2.0, 2.0, 1 << 12));
        const std::size_t n = 2000;
        int within = 0;
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            auto x = sample_mixture(p, h, n, seed);
            std::sort(x.begin(), x.end());
            double D = 0.0;
            for (std::size_t i = 0; i < n; i += 7) {
                const double F = cdf_at(f, x[i]);
                D = std::max({D, std::abs(F - double(i) / n), std::abs(F - double(i + 1) / n)});
            }
            if (D <= 2.0 / std::sqrt(double(n))) ++within;
        }
        CHECK(within >= 19);
    }

    TEST_CASE("spec strings") {
        CHECK(parse_target("bump").family() == TargetFamily::smooth_bump);
        CHECK(parse_target("spline(qtilde=3)").smoothness().qtilde() == doctest::Approx(3.0));
        CHECK(parse_target("twobump").family() == TargetFamily::two_bump);
        CHECK(parse_target("bump(lo=-2,hi=2)").support_1d().second == 2.0);
        CHECK(parse_target("bump", 2).dim() == 2);
        CHECK_THROWS_AS(parse_target("spline(q=2)"), DomainError);
        CHECK_THROWS_AS(parse_target("bump(lo=1,hi=0)"), DomainError);
    }
}
