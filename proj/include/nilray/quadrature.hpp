#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "nilray/errors.hpp"

namespace nilray {

struct QuadratureOptions {
    double abs_tol = 1e-10;
    int max_intervals = 8000;
};

namespace quad_detail {

// Gauss 7 / Kronrod 15 nodes and weights on [-1, 1] (QUADPACK dqk15).
// Index 0 is the center node; entries 1..3 are Gauss+Kronrod nodes,
// 4..7 Kronrod-only.
inline constexpr double kNodes[8] = {
    0.000000000000000, 0.405845151377397, 0.741531185599394,
    0.949107912342759, 0.207784955007898, 0.586087235467691,
    0.864864423359769, 0.991455371120813};
inline constexpr double kGaussW[4] = {0.417959183673469, 0.381830050505119,
                                      0.279705391489277, 0.129484966168870};
inline constexpr double kKronrodW[8] = {
    0.209482141084728, 0.190350578064785, 0.140653259715525,
    0.063092092629979, 0.204432940075298, 0.169004726639267,
    0.104790010322250, 0.022935322010529};

template <class Value>
struct Panel {
    double a, b;
    Value integral;
    double err;
    std::uint64_t id;  // insertion order, for deterministic tie-breaking
};

template <class Value>
struct PanelWorse {
    bool operator()(const Panel<Value>& x, const Panel<Value>& y) const {
        if (x.err != y.err) return x.err < y.err;
        return x.id > y.id;
    }
};

}  // namespace quad_detail

// Adaptive Gauss-Kronrod integration of a Value-valued function, where Value
// is double or Eigen::VectorXd.  `zero` supplies the additive identity (for
// vectors it fixes the dimension).  Throws NumericError when the error
// estimate cannot be brought below abs_tol within the panel budget.
template <class F, class Value, class Norm>
Value integrate_gk15_generic(F&& f, double a, double b, Value zero, Norm norm,
                             const QuadratureOptions& opts = {}) {
    using quad_detail::Panel;
    if (a == b) return zero;
    double sign = 1.0;
    if (a > b) {
        std::swap(a, b);
        sign = -1.0;
    }

    std::uint64_t next_id = 0;
    auto evaluate = [&](double lo, double hi) {
        const double c = 0.5 * (lo + hi);
        const double hw = 0.5 * (hi - lo);
        Value fc = f(c);
        Value k15 = fc * quad_detail::kKronrodW[0];
        Value g7 = fc * quad_detail::kGaussW[0];
        for (int i = 1; i < 8; ++i) {
            const double dx = hw * quad_detail::kNodes[i];
            Value fs = f(c + dx) + f(c - dx);
            k15 += fs * quad_detail::kKronrodW[i];
            if (i < 4) g7 += fs * quad_detail::kGaussW[i];
        }
        k15 *= hw;
        g7 *= hw;
        return Panel<Value>{lo, hi, k15, norm(k15 - g7), next_id++};
    };

    std::vector<Panel<Value>> heap;
    heap.reserve(64);
    heap.push_back(evaluate(a, b));
    double total_err = heap.front().err;
    quad_detail::PanelWorse<Value> cmp;

    while (total_err > opts.abs_tol &&
           static_cast<int>(heap.size()) < opts.max_intervals) {
        std::pop_heap(heap.begin(), heap.end(), cmp);
        Panel<Value> worst = heap.back();
        heap.pop_back();
        total_err -= worst.err;
        const double mid = 0.5 * (worst.a + worst.b);
        if (mid <= worst.a || mid >= worst.b) {
            // interval no longer splittable; keep its estimate
            worst.err = 0.0;
            heap.push_back(worst);
            std::push_heap(heap.begin(), heap.end(), cmp);
            continue;
        }
        for (Panel<Value> part : {evaluate(worst.a, mid), evaluate(mid, worst.b)}) {
            total_err += part.err;
            heap.push_back(part);
            std::push_heap(heap.begin(), heap.end(), cmp);
        }
    }

    if (total_err > opts.abs_tol) {
        throw NumericError("adaptive quadrature did not reach the requested tolerance",
                           total_err);
    }

    // Sum in left-to-right order so the result does not depend on heap layout.
    std::sort(heap.begin(), heap.end(),
              [](const Panel<Value>& x, const Panel<Value>& y) { return x.a < y.a; });
    Value acc = zero;
    for (const auto& panel : heap) acc += panel.integral;
    return acc * sign;
}

template <class F>
double integrate_gk15(F&& f, double a, double b, const QuadratureOptions& opts = {}) {
    return integrate_gk15_generic(
        [&](double t) { return static_cast<double>(f(t)); }, a, b, 0.0,
        [](double d) { return std::abs(d); }, opts);
}

template <class F>
Eigen::VectorXd integrate_gk15_vec(F&& f, double a, double b, int dim,
                                   const QuadratureOptions& opts = {}) {
    return integrate_gk15_generic(
        [&](double t) -> Eigen::VectorXd { return f(t); }, a, b,
        Eigen::VectorXd(Eigen::VectorXd::Zero(dim)),
        [](const Eigen::VectorXd& d) {
            return d.size() == 0 ? 0.0 : d.cwiseAbs().maxCoeff();
        },
        opts);
}

}  // namespace nilray
