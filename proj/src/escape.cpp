#include "nilray/escape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace nilray {

namespace {

void check_table(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw std::invalid_argument("monotone table needs >= 2 matching samples");
    for (std::size_t i = 1; i < xs.size(); ++i) {
        if (!(xs[i] > xs[i - 1]))
            throw std::invalid_argument("monotone table: x samples must strictly increase");
        if (ys[i] < ys[i - 1])
            throw std::invalid_argument("monotone table: y samples must be non-decreasing");
    }
}

}  // namespace

MonotoneFunction MonotoneFunction::identity() {
    MonotoneFunction f;
    f.kind_ = Kind::callable;
    f.identity_ = true;
    f.name_ = "identity";
    f.fn_ = [](double x) { return x; };
    return f;
}

MonotoneFunction MonotoneFunction::from_callable(std::function<double(double)> fn,
                                                 std::string name) {
    MonotoneFunction f;
    f.kind_ = Kind::callable;
    f.name_ = std::move(name);
    f.fn_ = std::move(fn);
    return f;
}

MonotoneFunction MonotoneFunction::tabulated(std::vector<double> xs, std::vector<double> ys) {
    check_table(xs, ys);
    MonotoneFunction f;
    f.kind_ = Kind::tabulated;
    f.name_ = "tabulated";
    f.xs_ = std::move(xs);
    f.ys_ = std::move(ys);
    return f;
}

MonotoneFunction MonotoneFunction::staircase(std::vector<double> xs, std::vector<double> ys) {
    check_table(xs, ys);
    MonotoneFunction f;
    f.kind_ = Kind::staircase;
    f.name_ = "staircase";
    f.xs_ = std::move(xs);
    f.ys_ = std::move(ys);
    return f;
}

double MonotoneFunction::operator()(double x) const {
    switch (kind_) {
        case Kind::callable:
            return fn_(x);
        case Kind::tabulated: {
            if (x <= xs_.front()) return ys_.front();
            if (x >= xs_.back()) return ys_.back();
            const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
            const std::size_t i = static_cast<std::size_t>(it - xs_.begin());
            const double w = (x - xs_[i - 1]) / (xs_[i] - xs_[i - 1]);
            return ys_[i - 1] + w * (ys_[i] - ys_[i - 1]);
        }
        case Kind::staircase: {
            // left-continuous: value y_i on (x_{i-1}, x_i]
            if (x <= xs_.front()) return ys_.front();
            if (x > xs_.back()) return ys_.back();
            const auto it = std::lower_bound(xs_.begin(), xs_.end(), x);
            return ys_[static_cast<std::size_t>(it - xs_.begin())];
        }
    }
    return 0.0;
}

EscapeFunction EscapeFunction::linear(double slope) {
    if (slope < 0.0) throw std::invalid_argument("escape slope must be non-negative");
    EscapeFunction p;
    p.kind_ = Kind::linear;
    p.slope_ = slope;
    return p;
}

EscapeFunction EscapeFunction::composite(double slope, MonotoneFunction rho) {
    if (slope < 0.0) throw std::invalid_argument("escape slope must be non-negative");
    EscapeFunction p;
    p.kind_ = rho.is_identity() ? Kind::linear : Kind::composite;
    p.slope_ = slope;
    p.rho_ = std::move(rho);
    return p;
}

EscapeFunction EscapeFunction::tabulated(MonotoneFunction fn) {
    EscapeFunction p;
    p.kind_ = Kind::tabulated;
    p.slope_ = 1.0;
    p.rho_ = std::move(fn);
    return p;
}

double EscapeFunction::operator()(double r) const {
    return kind_ == Kind::linear && rho_.is_identity() ? slope_ * r : slope_ * rho_(r);
}

bool EscapeFunction::left_continuous() const {
    // linear and piecewise-linear kinds are continuous; staircase tables are
    // left-continuous by construction
    return true;
}

EscapeFunction nilpotent_escape(const StepTwoAlgebra& a, const MonotoneFunction& rho) {
    if (std::abs(rho(0.0)) > 1e-12)
        throw std::invalid_argument("nilpotent_escape: rho(0) must be 0");
    double prev = rho(0.0);
    for (int i = 1; i <= 256; ++i) {
        const double x = 64.0 * i / 256.0;
        const double y = rho(x);
        if (y < prev - 1e-12)
            throw std::invalid_argument("nilpotent_escape: rho is not monotone");
        prev = y;
    }
    const double slope = std::sqrt(4.0 * a.dim_h() / (std::numbers::pi - 2.0));
    return EscapeFunction::composite(slope, rho);
}

ProductEscapeResult product_escape(const MonotoneFunction& p1, const MonotoneFunction& p2,
                                   double r, int grid) {
    if (grid < 2) throw std::invalid_argument("product_escape: grid must be >= 2");
    if (r < 0.0) throw std::invalid_argument("product_escape: r must be >= 0");

    const double half_pi = 0.5 * std::numbers::pi;
    auto objective = [&](double theta) {
        const double v1 = p1(r * std::cos(theta));
        const double v2 = p2(r * std::sin(theta));
        return std::sqrt(v1 * v1 + v2 * v2);
    };

    int best = 0;
    double best_val = -std::numeric_limits<double>::infinity();
    std::vector<double> thetas(grid + 1);
    for (int k = 0; k <= grid; ++k) {
        thetas[k] = half_pi * k / grid;
        const double v = objective(thetas[k]);
        if (v > best_val) {
            best_val = v;
            best = k;
        }
    }

    // golden-section refinement around the best grid cell
    double lo = thetas[std::max(0, best - 1)];
    double hi = thetas[std::min(grid, best + 1)];
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = hi - invphi * (hi - lo);
    double d = lo + invphi * (hi - lo);
    double fc = objective(c), fd = objective(d);
    for (int it = 0; it < 100 && hi - lo > 1e-13; ++it) {
        if (fc > fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - invphi * (hi - lo);
            fc = objective(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + invphi * (hi - lo);
            fd = objective(d);
        }
    }
    double theta_star = thetas[best];
    if (fc > best_val) {
        best_val = fc;
        theta_star = c;
    }
    if (fd > best_val) {
        best_val = fd;
        theta_star = d;
    }

    ProductEscapeResult out;
    out.value = best_val;
    out.lower = std::max(p1(r), p2(r));
    out.upper = p1(r) + p2(r);
    out.argmax_r1 = r * std::cos(theta_star);
    return out;
}

double sigma_from_escape(const EscapeFunction& P, const MonotoneFunction& mu, double r,
                         double tol) {
    const double target = mu(r);
    if (target < P(0.0))
        throw std::domain_error("sigma_from_escape: mu(r) < P(0) violates the hypothesis");

    double lo = 0.0;  // invariant: P(lo) <= target
    double hi = 1.0;
    while (P(hi) <= target) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e15) return std::numeric_limits<double>::infinity();
    }
    for (int it = 0; it < 200 && hi - lo > tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (P(mid) <= target)
            lo = mid;
        else
            hi = mid;
    }
    return lo;
}

}  // namespace nilray
