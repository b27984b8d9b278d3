#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "mixdecon/errors.hpp"
#include "mixdecon/numerics.hpp"
#include "mixdecon/rng.hpp"

using namespace mixdecon;
using std::numbers::pi;

namespace {

GridFunction constant(const GridBox& box, double c) {
    return GridFunction::sample(box, Domain::spatial, [c](std::span<const double>) { return cplx(c); });
}

GridFunction normal_pdf(const GridBox& box, double mean, double sd = 1.0) {
    return GridFunction::sample(box, Domain::spatial, [=](std::span<const double> x) {
        const double z = (x[0] - mean) / sd;
        return cplx(std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * pi)));
    });
}

GridFunction indicator(const GridBox& box, double lo, double hi, double height = 1.0) {
    return GridFunction::sample(box, Domain::spatial, [=](std::span<const double> x) {
        return cplx(x[0] >= lo && x[0] < hi ? height : 0.0);
    });
}

GridFunction random_density(const GridBox& box, Rng& rng) {
    // Random nonnegative bump on a random subinterval.
    const double a = rng.uniform(-3.0, 0.0), w = rng.uniform(0.5, 3.0), k = rng.uniform(0.5, 3.0);
    auto f = GridFunction::sample(box, Domain::spatial, [=](std::span<const double> x) {
        const double u = (x[0] - a) / w;
        return cplx(u > 0.0 && u < 1.0 ? std::pow(u * (1.0 - u), k) : 0.0);
    });
    return (1.0 / mass(f)) * f;
}

}  // namespace

TEST_SUITE("numerics") {
    TEST_CASE("lp_distance of constants") {
        const GridBox box = GridBox::uniform(1, 0.0, 1.0, 64);
        const auto one = constant(box, 1.0), zero = constant(box, 0.0);
        CHECK(lp_distance(one, zero, NormOrder(2.0)) == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(lp_distance(one, zero, NormOrder::infinity()) == 1.0);
    }

    TEST_CASE("lp_norm of the normal pdf") {
        const GridBox box = GridBox::uniform(1, -8.0, 8.0, 1 << 12);
        CHECK(std::abs(lp_norm(normal_pdf(box, 0.0), NormOrder(1.0)) - 1.0) <= 1e-6);
    }

    TEST_CASE("lp_distance errors") {
        const auto f = constant(GridBox::uniform(1, 0.0, 1.0, 64), 1.0);
        const auto g = constant(GridBox::uniform(1, 0.0, 2.0, 64), 1.0);
        CHECK_THROWS_AS(lp_distance(f, g, NormOrder(1.0)), StructuralError);
        CHECK_THROWS_AS(NormOrder(0.5), DomainError);
    }

    TEST_CASE("grid box invariants") {
        CHECK_THROWS_AS(GridBox::uniform(1, 0.0, 1.0, 8), DomainError);
        CHECK_THROWS_AS(GridBox::uniform(1, 0.0, 1.0, 100), DomainError);
        CHECK_THROWS_AS(GridBox::uniform(1, 1.0, 0.0, 64), DomainError);
        const GridBox box = GridBox::uniform(2, -1.0, 1.0, 16);
        CHECK(box.size() == 256);
        CHECK(box.cell_volume() == doctest::Approx(1.0 / 64.0));
        const auto c = box.coordinates(17);
        CHECK(c[0] == doctest::Approx(-1.0 + 0.125));
        CHECK(c[1] == doctest::Approx(-1.0 + 0.125));
    }

    TEST_CASE("hellinger examples") {
        const GridBox box = GridBox::uniform(1, -10.0, 10.0, 1 << 12);
        const auto p = normal_pdf(box, 0.0), q = normal_pdf(box, 1.0);
        CHECK(hellinger(p, p) == doctest::Approx(0.0));
        CHECK(hellinger(p, q) == doctest::Approx(std::sqrt(2.0 - 2.0 * std::exp(-1.0 / 8.0))).epsilon(1e-8));
        const GridBox ubox = GridBox::uniform(1, -8.0, 8.0, 1 << 12);
        const auto u1 = indicator(ubox, 0.0, 1.0), u2 = indicator(ubox, 2.0, 3.0);
        CHECK(hellinger(u1, u2) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-10));
        CHECK_THROWS_AS(hellinger(-1.0 * u1, u2), DomainError);
    }

    TEST_CASE("convolution of uniforms is triangular") {
        const GridBox box = GridBox::uniform(1, 0.0, 1.0, 1 << 10);
        const auto u = constant(box, 1.0);
        const auto t = convolve(u, u);
        const GridBox& out = t.space_box();
        CHECK(out.axis(0).lo == doctest::Approx(0.0));
        CHECK(out.axis(0).hi >= 2.0);
        double peak = 0.0, peak_x = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i)
            if (t[i].real() > peak) {
                peak = t[i].real();
                peak_x = out.axis(0).node(i);
            }
        CHECK(peak == doctest::Approx(1.0).epsilon(2e-3));
        CHECK(peak_x == doctest::Approx(1.0).epsilon(2e-3));
        CHECK(mass(t) == doctest::Approx(1.0).epsilon(1e-3));
    }

    TEST_CASE("gaussian closure under convolution") {
        const GridBox box = GridBox::uniform(1, -10.0, 10.0, 1 << 12);
        const auto c = convolve(normal_pdf(box, 0.0, 1.0), normal_pdf(box, 0.0, 0.5));
        const auto expect = normal_pdf(c.space_box(), 0.0, std::sqrt(1.25));
        CHECK(sup_error(c, expect) <= 1e-6);
    }

    TEST_CASE("support containment for disjoint intervals") {
        const GridBox box = GridBox::uniform(1, -4.0, 4.0, 1 << 11);
        const auto c = convolve(indicator(box, 0.0, 1.0), indicator(box, 2.0, 3.0));
        const double dx = box.axis(0).spacing();
        for (std::size_t i = 0; i < c.size(); ++i) {
            const double x = c.space_box().axis(0).node(i);
            if (std::abs(c[i]) > 1e-12) {
                CHECK(x >= 2.0 - dx);
                CHECK(x <= 4.0 + dx);
            }
        }
    }

    TEST_CASE("convolution spacing mismatch") {
        const auto f = constant(GridBox::uniform(1, 0.0, 1.0, 64), 1.0);
        const auto g = constant(GridBox::uniform(1, 0.0, 1.0, 128), 1.0);
        CHECK_THROWS_AS(convolve(f, g), StructuralError);
    }

    TEST_CASE("fourier of the uniform density is sinc") {
        const GridBox box = GridBox::uniform(1, -4.0, 4.0, 1 << 15);
        const auto u = GridFunction::sample(box, Domain::spatial, [](std::span<const double> x) {
            const double a = std::abs(x[0]);
            return cplx(a < 1.0 ? 0.5 : (a == 1.0 ? 0.25 : 0.0));
        });
        const auto F = fourier(u);
        const GridBox fb = F.space_box().frequency_box();
        double err = 0.0;
        for (std::size_t i = 0; i < F.size(); ++i) {
            const double t = fb.axis(0).node(i);
            if (std::abs(t) > 32.0) continue;
            const double s = t == 0.0 ? 1.0 : std::sin(t) / t;
            err = std::max(err, std::abs(F[i] - cplx(s)));
        }
        CHECK(err <= 1e-6);
    }

    TEST_CASE("fourier of the normal pdf") {
        const GridBox box = GridBox::uniform(1, -20.0, 20.0, 1 << 12);
        const auto F = fourier(normal_pdf(box, 0.0));
        const GridBox fb = box.frequency_box();
        double err = 0.0, imag = 0.0;
        for (std::size_t i = 0; i < F.size(); ++i) {
            const double t = fb.axis(0).node(i);
            err = std::max(err, std::abs(F[i] - cplx(std::exp(-0.5 * t * t))));
            imag = std::max(imag, std::abs(F[i].imag()));
        }
        CHECK(err <= 1e-8);
        CHECK(imag <= 1e-10);
    }

    TEST_CASE("round trip and parseval") {
        Rng rng(7);
        const GridBox box = GridBox::uniform(1, -5.0, 5.0, 1 << 10);
        std::vector<cplx> v(box.size());
        for (auto& x : v) x = cplx(rng.normal(), 0.0);
        const GridFunction f(box, Domain::spatial, v);
        const auto F = fourier(f);
        CHECK(sup_error(inverse_fourier(F), f) <= 1e-10);
        const double lhs = lp_norm(f, NormOrder(2.0));
        const double rhs = parseval_constant(1) * lp_norm(F, NormOrder(2.0));
        CHECK(std::abs(lhs - rhs) <= 1e-8 * lhs);
        CHECK_THROWS_AS(inverse_fourier(f), StructuralError);
        CHECK_THROWS_AS(fourier(F), StructuralError);
    }

    TEST_CASE("two-dimensional transform of a product gaussian") {
        const GridBox box = GridBox::uniform(2, -10.0, 10.0, 128);
        const auto f = GridFunction::sample(box, Domain::spatial, [](std::span<const double> x) {
            return cplx(std::exp(-0.5 * (x[0] * x[0] + x[1] * x[1])) / (2.0 * pi));
        });
        const auto F = fourier(f);
        const GridBox fb = box.frequency_box();
        double err = 0.0;
        for (std::size_t i = 0; i < F.size(); ++i) {
            const auto t = fb.coordinates(i);
            err = std::max(err, std::abs(F[i] - cplx(std::exp(-0.5 * (t[0] * t[0] + t[1] * t[1])))));
        }
        CHECK(err <= 1e-8);
    }

    TEST_CASE("young inequality on random pairs") {
        Rng rng(11);
        const GridBox box = GridBox::uniform(1, -4.0, 4.0, 512);
        int violations = 0;
        for (int k = 0; k < 20; ++k) {
            const auto g1 = random_density(box, rng), g2 = random_density(box, rng);
            const auto c = convolve(g1, g2);
            for (NormOrder u : {NormOrder(1.0), NormOrder(2.0), NormOrder::infinity()})
                if (lp_norm(c, u) > lp_norm(g1, NormOrder(1.0)) * lp_norm(g2, u) + 1e-8) ++violations;
        }
        CHECK(violations == 0);
    }

    TEST_CASE("l1 is at most twice hellinger") {
        Rng rng(13);
        const GridBox box = GridBox::uniform(1, -4.0, 4.0, 512);
        for (int k = 0; k < 20; ++k) {
            const auto p = random_density(box, rng), q = random_density(box, rng);
            CHECK(lp_distance(p, q, NormOrder(1.0)) <= 2.0 * hellinger(p, q) + 1e-12);
        }
    }

    TEST_CASE("csv round trip") {
        const GridBox box = GridBox::uniform(1, -1.0, 1.0, 16);
        const auto f = normal_pdf(box, 0.1);
        std::stringstream ss;
        write_csv(f, ss);
        std::string header;
        std::getline(ss, header);
        CHECK(header == "axis0,value_re,value_im");
        ss.seekg(0);
        const auto g = read_csv(ss, box, Domain::spatial);
        CHECK(sup_error(f, g) == 0.0);
    }

    TEST_CASE("quadrature helpers") {
        CHECK(integrate([](double x) { return std::exp(-x); }, 0.0, INFINITY) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(integrate_gl([](double x) { return x * x; }, 0.0, 3.0, 4) == doctest::Approx(9.0).epsilon(1e-13));
        CHECK(next_pow2(1000) == 1024);
        CHECK(parseval_constant(2) == doctest::Approx(1.0 / (2.0 * pi)));
    }

    TEST_CASE("derived seeds are deterministic and distinct") {
        CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
        CHECK(derive_seed(1, 2, 3) != derive_seed(1, 3, 2));
        Rng a(5), b(5);
        for (int i = 0; i < 10; ++i) CHECK(a.normal() == b.normal());
    }
}
