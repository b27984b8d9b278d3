#include <cmath>
#include <numbers>

#include "doctest.h"
#include "mixdecon/errors.hpp"
#include "mixdecon/noise_models.hpp"
#include "mixdecon/rng.hpp"

using namespace mixdecon;
using std::numbers::pi;

namespace {

std::vector<NoiseModel> builtins() {
    return {NoiseModel::gaussian(), NoiseModel::cauchy(), NoiseModel::exponential(), NoiseModel::laplace(),
            NoiseModel::uniform(1), NoiseModel::uniform(2)};
}

}  // namespace

TEST_SUITE("noise_models") {
    TEST_CASE("closed-form transforms") {
        CHECK(NoiseModel::gaussian().htilde_1d(0.0) == cplx(1.0));
        CHECK(std::abs(NoiseModel::uniform(1).htilde_1d(pi)) <= 1e-15);
        CHECK(std::abs(NoiseModel::exponential().htilde_1d(1.0)) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));
        // e^{-x} on x > 0 transforms to 1 / (1 + it) under e^{-itx}.
        CHECK(NoiseModel::exponential().htilde_1d(1.0) == cplx(0.5, -0.5));
        CHECK(NoiseModel::cauchy().htilde_1d(2.0).real() == doctest::Approx(std::exp(-2.0)));
        CHECK(NoiseModel::laplace().htilde_1d(2.0).real() == doctest::Approx(0.2));
        CHECK(NoiseModel::uniform(2).htilde_1d(1.0).real() == doctest::Approx(std::pow(std::sin(1.0), 2)));
        const double t[2] = {1.0, 2.0};
        CHECK(NoiseModel::gaussian(2).htilde(t).real() == doctest::Approx(std::exp(-2.5)));
    }

    TEST_CASE("noise classes") {
        const NoiseModel gm = NoiseModel::gaussian(), cm = NoiseModel::cauchy(), um = NoiseModel::uniform(2);
        const auto& g = std::get<SuperSmooth>(gm.klass());
        CHECK(g.k == 2.0);
        CHECK(g.alpha_bar() == 0.5);
        const auto& c = std::get<SuperSmooth>(cm.klass());
        CHECK(c.k == 1.0);
        CHECK(c.alpha_bar() == 1.0);
        CHECK(std::get<Smooth>(NoiseModel::exponential().klass()).beta_bar() == 1.0);
        CHECK(std::get<Smooth>(NoiseModel::laplace().klass()).beta_bar() == 2.0);
        const auto& u2 = std::get<Oscillatory>(um.klass());
        CHECK(u2.mu == 2);
        CHECK(u2.beta == 2.0);
    }

    TEST_CASE("envelope infimum") {
        CHECK(envelope_inf(NoiseModel::gaussian(), 4.0) == doctest::Approx(std::exp(-8.0)).epsilon(1e-14));
        CHECK(envelope_inf(NoiseModel::exponential(), 10.0) == doctest::Approx(1.0 / std::sqrt(101.0)).epsilon(1e-14));
        for (const auto& h : {NoiseModel::gaussian(), NoiseModel::cauchy(), NoiseModel::laplace()})
            CHECK(envelope_inf(h, 0.0) == 1.0);
        CHECK_THROWS_AS(envelope_inf(NoiseModel::uniform(1), 1.0), UnsupportedVariant);
    }

    TEST_CASE("zero sets") {
        const ZeroSet z = zeros_in_band(NoiseModel::uniform(1), 10.0);
        CHECK(z.count == 6);
        const auto r = z.roots();
        REQUIRE(r.size() == 6);
        CHECK(r.front() == doctest::Approx(-3.0 * pi));
        CHECK(r.back() == doctest::Approx(3.0 * pi));
        CHECK(zeros_in_band(NoiseModel::uniform(1), 3.0).count == 0);
        CHECK(zeros_in_band(NoiseModel::uniform(2), 10.0).roots() == r);
        CHECK(zeros_in_band(NoiseModel::uniform(1, 2.0), 10.0).count == 2);
        CHECK_THROWS_AS(zeros_in_band(NoiseModel::gaussian(), 10.0), UnsupportedVariant);
    }

    TEST_CASE("samplers") {
        const std::size_t n = 100000;
        Rng rng(3);
        const auto u = sample_noise(NoiseModel::uniform(1), n, rng);
        double mean = 0.0;
        for (double v : u) mean += v / n;
        CHECK(std::abs(mean) <= 3.0 * std::sqrt(1.0 / 3.0) / std::sqrt(double(n)));
        for (int m : {2, 3}) {
            const auto x = sample_noise(NoiseModel::uniform(m), n, rng);
            double s1 = 0.0, s2 = 0.0;
            for (double v : x) s1 += v, s2 += v * v;
            const double var = s2 / n - (s1 / n) * (s1 / n);
            // Var of the sample variance is about 2 sigma^4 / n for near-normal sums.
            CHECK(std::abs(var - m / 3.0) <= 4.0 * std::sqrt(2.0 / n) * m / 3.0);
        }
        Rng a(9), b(9);
        for (const auto& h : builtins()) CHECK(sample_noise(h, 100, a) == sample_noise(h, 100, b));
    }

    TEST_CASE("empirical characteristic function matches the transform") {
        const std::size_t n = 50000;
        for (const auto& h : builtins()) {
            Rng rng(17);
            const auto x = sample_noise(h, n, rng);
            for (double t : {0.1, 0.5, 1.0}) {
                cplx ecf = 0.0;
                for (double v : x) ecf += std::exp(cplx(0.0, -t * v));
                ecf /= double(n);
                CHECK(std::abs(ecf - h.htilde_1d(t)) <= 5.0 / std::sqrt(double(n)));
            }
        }
    }

    TEST_CASE("envelope sandwich") {
        for (const auto& h : builtins()) {
            for (double t = std::max(h.onset(), 0.05); t <= 100.0; t += 0.37) {
                const double a = std::abs(h.htilde_1d(t)), e = h.envelope_1d(t);
                CHECK(a >= h.c1() * e * (1.0 - 1e-12));
                CHECK(a <= h.c2() * e * (1.0 + 1e-12));
            }
        }
    }

    TEST_CASE("local exponent at the roots") {
        for (int mu : {1, 2}) {
            const NoiseModel h = NoiseModel::uniform(mu);
            for (int j = 1; j <= 3; ++j) {
                const double r = j * pi, e1 = 1e-4, e2 = 1e-5;
                const double slope = std::log(std::abs(h.htilde_1d(r + e1)) / std::abs(h.htilde_1d(r + e2))) /
                                     std::log(e1 / e2);
                CHECK(std::abs(slope - mu) <= 0.05);
            }
        }
    }

    TEST_CASE("grid transform of the density matches the closed form") {
        const GridBox box = GridBox::uniform(1, -40.0, 40.0, 1 << 16);
        for (const auto& h : {NoiseModel::gaussian(), NoiseModel::laplace(), NoiseModel::uniform(2)}) {
            const auto f = GridFunction::sample(box, Domain::spatial,
                                                [&](std::span<const double> x) { return cplx(h.density(x)); });
            const auto F = fourier(f);
            const auto H = transfer_spectrum(h, box);
            const GridBox fb = box.frequency_box();
            double err = 0.0;
            for (std::size_t i = 0; i < F.size(); ++i)
                if (std::abs(fb.axis(0).node(i)) <= 20.0) err = std::max(err, std::abs(F[i] - H[i]));
            CHECK(err <= 1e-5);
        }
    }

    TEST_CASE("spec strings") {
        CHECK(parse_noise_model("gaussian").family() == NoiseFamily::gaussian);
        CHECK(parse_noise_model("gaussian(sigma=2)").param() == 2.0);
        CHECK(parse_noise_model("uniform(m=2)").order() == 2);
        CHECK(parse_noise_model("laplace", 2).dim() == 2);
        CHECK(parse_noise_model("identity").htilde_1d(5.0) == cplx(1.0));
        CHECK(parse_noise_model(parse_noise_model("cauchy(scale=0.5)").spec()).param() == 0.5);
        CHECK_THROWS_AS(parse_noise_model("gaussian(scale=2)"), DomainError);
        CHECK_THROWS_AS(parse_noise_model("weibull"), DomainError);
        CHECK_THROWS_AS(parse_noise_model("gaussian(sigma=-1)"), DomainError);
        CHECK_THROWS_AS(parse_noise_model("uniform(m=1)", 2), DomainError);
    }
}
