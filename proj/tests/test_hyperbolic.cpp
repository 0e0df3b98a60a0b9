#include <cmath>
#include <complex>
#include <numbers>

#include "doctest.h"
#include "nilray/hyperbolic.hpp"
#include "nilray/rng.hpp"
#include "oracles.hpp"

using namespace nilray;

namespace {
const double kR = 1.2;

double bump_profile(double d) {
    if (d >= kR) return 0.0;
    const double s = d / kR;
    return std::exp(1.0 - 1.0 / (1.0 - s * s));
}

ScalarFieldH2 radial_field(std::complex<double> center) {
    ScalarFieldH2 f;
    f.center = center;
    f.support_radius = kR;
    f.eval = [center](std::complex<double> w) { return bump_profile(h2_distance(w, center)); };
    return f;
}
}  // namespace

TEST_CASE("geodesics are unit speed and distance is a metric") {
    Rng rng(4);
    for (int i = 0; i < 30; ++i) {
        const std::complex<double> base(rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6));
        const GeodesicH2 g{base, rng.uniform(0, 2 * std::numbers::pi)};
        for (double t : {0.3, 1.0, 2.5})
            CHECK(h2_distance(g.at(0.0), g.at(t)) == doctest::Approx(t).epsilon(1e-10));

        const std::complex<double> a(rng.uniform(-0.7, 0.7), rng.uniform(-0.5, 0.5));
        const std::complex<double> b(rng.uniform(-0.7, 0.7), rng.uniform(-0.5, 0.5));
        CHECK(h2_distance(a, b) == doctest::Approx(h2_distance(b, a)).epsilon(1e-12));
        CHECK(h2_distance(a, b) <=
              h2_distance(a, {0, 0}) + h2_distance({0, 0}, b) + 1e-12);
    }
}

TEST_CASE("zero field integrates to zero") {
    ScalarFieldH2 zero;
    zero.center = {0, 0};
    zero.support_radius = 1.0;
    zero.eval = [](std::complex<double>) { return 0.0; };
    CHECK(h2_xray_forward(zero, GeodesicH2{{0.2, 0.1}, 0.4}) == 0.0);
}

TEST_CASE("radial bump forward values match the polar-coordinate oracle") {
    const ScalarFieldH2 f = radial_field({0, 0});
    for (double d : {0.0, 0.3, 0.8, 1.1}) {
        for (double alpha : {0.0, 1.1, 4.0}) {
            const GeodesicH2 g = h2_geodesic_at_distance({0, 0}, d, alpha);
            const double got = h2_xray_forward(f, g);
            const double expect = oracles::h2_polar_forward(bump_profile, kR, d);
            CHECK(got == doctest::Approx(expect).epsilon(1e-9));
        }
    }
    // geodesics past the support integrate to ~0
    const GeodesicH2 far = h2_geodesic_at_distance({0, 0}, 1.25, 0.3);
    CHECK(std::abs(h2_xray_forward(f, far)) <= 1e-12);
}

TEST_CASE("orientation invariance") {
    const ScalarFieldH2 f = radial_field({0.2, -0.1});
    Rng rng(8);
    for (int i = 0; i < 20; ++i) {
        const GeodesicH2 g{{rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4)},
                           rng.uniform(0, 2 * std::numbers::pi)};
        CHECK(h2_xray_forward(f, g) ==
              doctest::Approx(h2_xray_forward(f, g.reversed())).epsilon(1e-9));
    }
}

TEST_CASE("mean value at the center of a radial field reduces to one geodesic") {
    const ScalarFieldH2 f = radial_field({0, 0});
    const H2Oracle oracle = h2_quadrature_oracle(f);
    for (double t : {0.2, 0.7}) {
        const double mean = h2_mean_value(oracle, {0, 0}, t, 16);
        const double single = h2_xray_forward(f, h2_geodesic_at_distance({0, 0}, t, 0.0));
        CHECK(mean == doctest::Approx(single).epsilon(1e-9));
    }
}

TEST_CASE("round trip at the center recovers f(0), with grid refinement") {
    const ScalarFieldH2 f = radial_field({0, 0});
    const H2Oracle oracle = h2_quadrature_oracle(f);
    RadonInvertOptions coarse;
    coarse.grid = 128;
    coarse.n_dirs = 32;
    RadonInvertOptions fine = coarse;
    fine.grid = 512;
    const double rec_coarse = h2_invert(oracle, {0, 0}, kR + 0.1, coarse);
    const double rec_fine = h2_invert(oracle, {0, 0}, kR + 0.1, fine);
    CHECK(std::abs(rec_fine - 1.0) <= 1e-2);
    CHECK(std::abs(rec_fine - 1.0) < std::abs(rec_coarse - 1.0) + 1e-12);
    CHECK(std::abs(rec_fine - 1.0) <= 1e-5);  // well under the headline 1e-2

    // off-center consistency
    const std::complex<double> x(0.15, 0.1);
    RadonInvertOptions opt;
    opt.grid = 512;
    opt.n_dirs = 64;
    const double rec = h2_invert(oracle, x, kR + h2_distance(x, {0, 0}) + 0.1, opt);
    CHECK(std::abs(rec - f.eval(x)) <= 1e-4);
}
