#include <cmath>
#include <numbers>

#include "doctest.h"
#include "nilray/quadrature.hpp"

using namespace nilray;

TEST_CASE("polynomials are integrated to machine accuracy") {
    // GK15 is exact up to degree 22 on a single panel
    auto f = [](double x) { return 5.0 * x * x * x * x - 2.0 * x + 1.0; };
    // antiderivative: x^5 - x^2 + x on [-1,2]: (32-4+2) - (-1-1-1) = 33
    CHECK(integrate_gk15(f, -1.0, 2.0) == doctest::Approx(33.0).epsilon(1e-14));
}

TEST_CASE("exponential and oscillatory integrands") {
    CHECK(integrate_gk15([](double x) { return std::exp(x); }, 0.0, 3.0) ==
          doctest::Approx(std::exp(3.0) - 1.0).epsilon(1e-12));
    const double v =
        integrate_gk15([](double x) { return std::sin(17.0 * x); }, 0.0, 10.0, {1e-12, 8000});
    CHECK(v == doctest::Approx((1.0 - std::cos(170.0)) / 17.0).epsilon(1e-10));
}

TEST_CASE("orientation and empty interval") {
    auto f = [](double x) { return x * x; };
    CHECK(integrate_gk15(f, 2.0, -1.0) == doctest::Approx(-3.0).epsilon(1e-13));
    CHECK(integrate_gk15(f, 1.0, 1.0) == 0.0);
}

TEST_CASE("vector-valued integration") {
    auto f = [](double x) {
        Eigen::VectorXd v(2);
        v << std::cos(x), std::sin(x);
        return v;
    };
    const Eigen::VectorXd got = integrate_gk15_vec(f, 0.0, std::numbers::pi / 2.0, 2);
    CHECK(got[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(got[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("zero-dimensional integrand is the empty vector") {
    auto f = [](double) { return Eigen::VectorXd(0); };
    const Eigen::VectorXd got = integrate_gk15_vec(f, 0.0, 1.0, 0);
    CHECK(got.size() == 0);
}

TEST_CASE("budget exhaustion raises NumericError with the achieved tolerance") {
    // fast oscillation cannot be resolved within 3 panels
    auto f = [](double x) { return std::sin(1000.0 * x); };
    CHECK_THROWS_AS(integrate_gk15(f, 0.0, 1.0, {1e-14, 3}), NumericError);
    try {
        integrate_gk15(f, 0.0, 1.0, {1e-14, 3});
    } catch (const NumericError& e) {
        CHECK(e.achieved() > 1e-14);
    }
}
