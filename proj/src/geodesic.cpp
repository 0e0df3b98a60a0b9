#include "nilray/geodesic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace nilray {

namespace {
constexpr double kUnitSpeedTol = 1e-12;
}

GeodesicN::GeodesicN(std::shared_ptr<const StepTwoAlgebra> algebra, GroupPoint base,
                     Eigen::VectorXd z0, Eigen::VectorXd h0)
    : algebra_(std::move(algebra)),
      base_(std::move(base)),
      z0_(std::move(z0)),
      h0_(std::move(h0)) {
    if (!algebra_) throw std::invalid_argument("GeodesicN: null algebra");
    const auto& a = *algebra_;
    if (z0_.size() != a.dim_z() || h0_.size() != a.dim_h())
        throw std::invalid_argument("GeodesicN: initial data has wrong dimensions");
    if (base_.coords.z.size() != a.dim_z() || base_.coords.h.size() != a.dim_h())
        throw std::invalid_argument("GeodesicN: base point has wrong dimensions");

    unit_speed_ = std::abs(speed_sq() - 1.0) <= kUnitSpeedTol;

    if (a.abelian()) {
        straight_ = true;
    } else {
        const Eigen::VectorXd zh = j_action(a, z0_) * h0_;
        straight_ = zh.norm() <= 1e-13 * std::max(1.0, h0_.norm());
    }

    spectral_ = spectral_decompose(a, z0_, h0_);
    coeffs_.reserve(spectral_.blocks.size());
    for (const auto& blk : spectral_.blocks)
        coeffs_.push_back(blk.basis.transpose() * h0_);
}

Eigen::VectorXd GeodesicN::h_at(double t) const {
    Eigen::VectorXd h = Eigen::VectorXd::Zero(algebra_->dim_h());
    for (std::size_t b = 0; b < spectral_.blocks.size(); ++b) {
        const auto& blk = spectral_.blocks[b];
        const auto& c = coeffs_[b];
        if (blk.basis.cols() == 1) {
            h += blk.basis.col(0) * (t * c[0]);
        } else if (blk.lambda == 0.0) {
            h += blk.basis * (t * c);
        } else {
            // ((e^{itλ} - 1)/(iλ)) (c0 + i c1) on the rotation plane
            const double re = std::sin(blk.lambda * t) / blk.lambda;
            const double im = (1.0 - std::cos(blk.lambda * t)) / blk.lambda;
            h += blk.basis.col(0) * (c[0] * re - c[1] * im);
            h += blk.basis.col(1) * (c[0] * im + c[1] * re);
        }
    }
    return h;
}

Eigen::VectorXd GeodesicN::dh_at(double t) const {
    Eigen::VectorXd h = Eigen::VectorXd::Zero(algebra_->dim_h());
    for (std::size_t b = 0; b < spectral_.blocks.size(); ++b) {
        const auto& blk = spectral_.blocks[b];
        const auto& c = coeffs_[b];
        if (blk.basis.cols() == 1 || blk.lambda == 0.0) {
            h += blk.basis * c;
        } else {
            const double re = std::cos(blk.lambda * t);
            const double im = std::sin(blk.lambda * t);
            h += blk.basis.col(0) * (c[0] * re - c[1] * im);
            h += blk.basis.col(1) * (c[0] * im + c[1] * re);
        }
    }
    return h;
}

Eigen::VectorXd GeodesicN::bracket_integral(double from, double to, double quad_tol) const {
    const auto& a = *algebra_;
    return integrate_gk15_vec(
        [&](double s) { return bracket(a, h_at(s), dh_at(s)); }, from, to, a.dim_z(),
        {quad_tol, 8000});
}

Eigen::VectorXd GeodesicN::z_at(double t, double quad_tol) const {
    if (straight_) return t * z0_;
    return t * z0_ + 0.5 * bracket_integral(0.0, t, quad_tol);
}

std::vector<Eigen::VectorXd> GeodesicN::z_profile(std::span<const double> ts,
                                                  double quad_tol) const {
    for (std::size_t i = 1; i < ts.size(); ++i)
        if (ts[i] < ts[i - 1])
            throw std::invalid_argument("z_profile: grid must be ascending");
    std::vector<Eigen::VectorXd> out(ts.size());
    if (straight_) {
        for (std::size_t i = 0; i < ts.size(); ++i) out[i] = ts[i] * z0_;
        return out;
    }
    // first index with t >= 0
    std::size_t split = 0;
    while (split < ts.size() && ts[split] < 0.0) ++split;

    Eigen::VectorXd acc = Eigen::VectorXd::Zero(algebra_->dim_z());
    double prev = 0.0;
    for (std::size_t i = split; i < ts.size(); ++i) {
        acc += bracket_integral(prev, ts[i], quad_tol);
        prev = ts[i];
        out[i] = ts[i] * z0_ + 0.5 * acc;
    }
    acc.setZero();
    prev = 0.0;
    for (std::size_t i = split; i-- > 0;) {
        acc += bracket_integral(prev, ts[i], quad_tol);
        prev = ts[i];
        out[i] = ts[i] * z0_ + 0.5 * acc;
    }
    return out;
}

double GeodesicN::z0_component_closed_form(double t) const {
    double correction = 0.0;
    for (std::size_t b = 0; b < spectral_.blocks.size(); ++b) {
        const auto& blk = spectral_.blocks[b];
        const double csq = coeffs_[b].squaredNorm();
        correction += csq * (blk.lambda == 0.0 ? t : std::sin(blk.lambda * t) / blk.lambda);
    }
    return t * z0_.squaredNorm() + 0.5 * t * h0_.squaredNorm() - 0.5 * correction;
}

GroupPoint GeodesicN::point_from_zh(const Eigen::VectorXd& z, const Eigen::VectorXd& h) const {
    return bch_multiply(*algebra_, base_, GroupPoint(AlgebraVector{z, h}));
}

GroupPoint GeodesicN::point_at(double t, double quad_tol) const {
    return point_from_zh(z_at(t, quad_tol), h_at(t));
}

AlgebraVector GeodesicN::velocity_at(double t, double quad_tol) const {
    const GroupPoint p = point_at(t, quad_tol);
    return left_translation_differential(*algebra_, p, AlgebraVector{z0_, dh_at(t)});
}

GeodesicN geodesic_from_spatial(std::shared_ptr<const StepTwoAlgebra> algebra,
                                const GroupPoint& base, const AlgebraVector& velocity) {
    const auto& a = *algebra;
    // dL_{base^{-1}} velocity = (v_z - [h_base, v_h]/2, v_h)
    Eigen::VectorXd body_z = velocity.z - 0.5 * bracket(a, base.coords.h, velocity.h);
    return GeodesicN(std::move(algebra), base, std::move(body_z), velocity.h);
}

Trajectory ode_oracle(const GeodesicN& g, double t_end, int steps) {
    if (steps < 2) throw std::invalid_argument("ode_oracle: steps must be >= 2");
    const auto& a = g.algebra();
    const bool ab = a.abelian();
    const Eigen::MatrixXd Z =
        ab ? Eigen::MatrixXd::Zero(a.dim_h(), a.dim_h()) : j_action(a, g.z0());

    struct State {
        Eigen::VectorXd h, v, z;
    };
    auto rhs = [&](const State& s) {
        State d;
        d.h = s.v;
        d.v = Z * s.v;
        d.z = g.z0() + 0.5 * bracket(a, s.h, s.v);
        return d;
    };
    auto axpy = [](const State& s, double c, const State& d) {
        return State{s.h + c * d.h, s.v + c * d.v, s.z + c * d.z};
    };

    Trajectory tr;
    tr.ts.reserve(steps + 1);
    tr.z.reserve(steps + 1);
    tr.h.reserve(steps + 1);
    tr.v.reserve(steps + 1);

    State s{Eigen::VectorXd::Zero(a.dim_h()), g.h0(), Eigen::VectorXd::Zero(a.dim_z())};
    const double dt = t_end / steps;
    tr.ts.push_back(0.0);
    tr.z.push_back(s.z);
    tr.h.push_back(s.h);
    tr.v.push_back(s.v);
    for (int i = 0; i < steps; ++i) {
        const State k1 = rhs(s);
        const State k2 = rhs(axpy(s, 0.5 * dt, k1));
        const State k3 = rhs(axpy(s, 0.5 * dt, k2));
        const State k4 = rhs(axpy(s, dt, k3));
        s.h += (dt / 6.0) * (k1.h + 2.0 * k2.h + 2.0 * k3.h + k4.h);
        s.v += (dt / 6.0) * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v);
        s.z += (dt / 6.0) * (k1.z + 2.0 * k2.z + 2.0 * k3.z + k4.z);
        tr.ts.push_back(dt * (i + 1));
        tr.z.push_back(s.z);
        tr.h.push_back(s.h);
        tr.v.push_back(s.v);
    }
    return tr;
}

EscapeReport escape_bound_check(const GeodesicN& g, std::span<const double> ts) {
    if (!g.unit_speed())
        throw std::invalid_argument("escape_bound_check: geodesic must be unit speed");
    if (!g.base().coords.z.isZero(0.0) || !g.base().coords.h.isZero(0.0))
        throw std::invalid_argument("escape_bound_check: geodesic must be based at the identity");

    std::vector<double> grid(ts.begin(), ts.end());
    std::sort(grid.begin(), grid.end());
    grid.erase(std::remove_if(grid.begin(), grid.end(), [](double t) { return t <= 0.0; }),
               grid.end());

    const int dim_h = g.algebra().dim_h();
    const double master_const = (std::numbers::pi - 2.0) / (4.0 * dim_h);
    const double nz2 = g.z0().squaredNorm();
    const double lambda =
        g.spectral().dominant >= 0 ? g.spectral().blocks[g.spectral().dominant].lambda : 0.0;

    const auto zs = g.z_profile(grid);
    EscapeReport rep;
    rep.min_margin = std::numeric_limits<double>::infinity();
    rep.min_master_margin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double t = grid[i];
        EscapeSample s;
        s.t = t;
        s.lhs_sq = zs[i].squaredNorm() + g.h_at(t).squaredNorm();
        if (nz2 >= 0.5) {
            s.case_tag = 'a';
            s.bound = 0.5 * t * t;
        } else if (lambda == 0.0) {
            s.case_tag = 'b';
            s.bound = t * t / (2.0 * dim_h);
        } else if (t <= 0.5 * std::numbers::pi / lambda) {
            s.case_tag = 'c';
            s.bound = t * t / (2.0 * dim_h);
        } else {
            s.case_tag = 'd';
            s.bound = master_const * t * t;
        }
        s.margin = s.lhs_sq - s.bound;
        s.master_bound = master_const * t * t;
        s.master_margin = s.lhs_sq - s.master_bound;
        rep.min_margin = std::min(rep.min_margin, s.margin);
        rep.min_master_margin = std::min(rep.min_master_margin, s.master_margin);
        rep.samples.push_back(s);
    }
    if (rep.samples.empty()) {
        rep.min_margin = 0.0;
        rep.min_master_margin = 0.0;
    }
    return rep;
}

}  // namespace nilray
