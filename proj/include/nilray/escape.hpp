#pragma once

#include <functional>
#include <string>
#include <vector>

#include "nilray/algebra.hpp"

namespace nilray {

// Monotone non-decreasing scalar function of a radius; hosts all the scalar
// radius functions (mu, sigma, rho, P1, P2).  Tabulated kinds clamp outside
// their sample range.
class MonotoneFunction {
public:
    enum class Kind { callable, tabulated, staircase };

    static MonotoneFunction identity();
    static MonotoneFunction from_callable(std::function<double(double)> fn,
                                          std::string name = "callable");
    // piecewise-linear interpolation of monotone samples
    static MonotoneFunction tabulated(std::vector<double> xs, std::vector<double> ys);
    // left-continuous staircase: value y_i on (x_{i-1}, x_i]
    static MonotoneFunction staircase(std::vector<double> xs, std::vector<double> ys);

    double operator()(double x) const;

    Kind kind() const { return kind_; }
    bool is_identity() const { return identity_; }
    bool left_continuous_steps() const { return kind_ == Kind::staircase; }
    const std::string& name() const { return name_; }

private:
    MonotoneFunction() = default;

    Kind kind_ = Kind::callable;
    bool identity_ = false;
    std::string name_;
    std::function<double(double)> fn_;
    std::vector<double> xs_, ys_;
};

// Escape function r -> P(r): every unit-speed geodesic has left every ball of
// radius r (coordinate ball unless a metric-ball rho is supplied) after time
// P(r).
class EscapeFunction {
public:
    enum class Kind { linear, tabulated, composite };

    static EscapeFunction linear(double slope);
    static EscapeFunction composite(double slope, MonotoneFunction rho);
    static EscapeFunction tabulated(MonotoneFunction fn);

    double operator()(double r) const;
    Kind kind() const { return kind_; }
    double slope() const { return slope_; }
    bool left_continuous() const;

private:
    EscapeFunction() = default;

    Kind kind_ = Kind::linear;
    double slope_ = 1.0;
    MonotoneFunction rho_ = MonotoneFunction::identity();
};

// P(r) = rho(r) * sqrt(4 dim h / (pi - 2)), the uniform escape bound for a
// 2-step nilpotent group.  rho maps metric-ball radii to coordinate-ball
// radii; with rho = identity the result is the coordinate-ball escape
// function (the default convention of this library).
EscapeFunction nilpotent_escape(const StepTwoAlgebra& a, const MonotoneFunction& rho);

// Product-space escape: sup over r1^2 + r2^2 = r^2 of sqrt(P1(r1)^2 + P2(r2)^2),
// by a theta grid with golden-section refinement.  The value always sits in
// the sandwich max{P1(r), P2(r)} <= P <= P1(r) + P2(r).
struct ProductEscapeResult {
    double value;
    double lower;      // max{P1(r), P2(r)}
    double upper;      // P1(r) + P2(r)
    double argmax_r1;  // maximizing r1
};
ProductEscapeResult product_escape(const MonotoneFunction& p1, const MonotoneFunction& p2,
                                   double r, int grid);

// sigma(r) = sup{s >= 0 | P(s) <= mu(r)} by bisection; the returned value
// always satisfies P(sigma) <= mu(r).  Throws std::domain_error when
// mu(r) < P(0).
double sigma_from_escape(const EscapeFunction& P, const MonotoneFunction& mu, double r,
                         double tol = 1e-10);

}  // namespace nilray
