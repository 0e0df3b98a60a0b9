#pragma once

#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "nilray/algebra.hpp"
#include "nilray/quadrature.hpp"

namespace nilray {

// Geodesic of N with initial data in the body frame: gamma(0) = base,
// dL_{base^{-1}} gamma'(0) = z0 + h0.  Evaluation runs at the identity and
// translates by the base point (the metric is left invariant).
//
// At the identity the solution is gamma(t) = Ex(z(t) + h(t)) with
//   h(t) = ((e^{tZ} - 1) Z^{-1}) h0,   Z = j_action(z0),
//   z(t) = t z0 + (1/2) ∫_0^t [h(s), h'(s)] ds.
// h(t) is evaluated spectrally, blockwise on the rotation planes of Z with
// the lambda -> 0 limit coded explicitly, never by inverting Z.  The full
// z(t), including the component orthogonal to z0, comes from adaptive
// quadrature; the closed form for <z(t), z0> serves as a checksum.
class GeodesicN {
public:
    GeodesicN(std::shared_ptr<const StepTwoAlgebra> algebra, GroupPoint base,
              Eigen::VectorXd z0, Eigen::VectorXd h0);

    const StepTwoAlgebra& algebra() const { return *algebra_; }
    const std::shared_ptr<const StepTwoAlgebra>& algebra_ptr() const { return algebra_; }
    const GroupPoint& base() const { return base_; }
    const Eigen::VectorXd& z0() const { return z0_; }
    const Eigen::VectorXd& h0() const { return h0_; }

    double speed_sq() const { return z0_.squaredNorm() + h0_.squaredNorm(); }
    bool unit_speed() const { return unit_speed_; }

    // true when j_action(z0) h0 = 0; then h(t) = t h0 and z(t) = t z0 exactly
    bool straight() const { return straight_; }

    const SpectralData& spectral() const { return spectral_; }

    Eigen::VectorXd h_at(double t) const;
    Eigen::VectorXd dh_at(double t) const;  // h'(t) = e^{tZ} h0
    Eigen::VectorXd z_at(double t, double quad_tol = 1e-10) const;

    // z at every grid time (ascending grid, may span 0); the integral is
    // accumulated incrementally outward from 0, so consecutive samples share
    // their common history exactly.
    std::vector<Eigen::VectorXd> z_profile(std::span<const double> ts,
                                           double quad_tol = 1e-10) const;

    // <z(t), z0> = t|z0|^2 + (t/2)|h0|^2 - (1/2) Σ_blocks |c_b|^2 sin(λt)/λ
    double z0_component_closed_form(double t) const;

    GroupPoint point_at(double t, double quad_tol = 1e-10) const;
    GroupPoint point_from_zh(const Eigen::VectorXd& z, const Eigen::VectorXd& h) const;

    // spatial velocity dL_{gamma(t)}(z0, e^{tZ} h0); its metric norm is
    // constant along the flow
    AlgebraVector velocity_at(double t, double quad_tol = 1e-10) const;

private:
    Eigen::VectorXd bracket_integral(double from, double to, double quad_tol) const;

    std::shared_ptr<const StepTwoAlgebra> algebra_;
    GroupPoint base_;
    Eigen::VectorXd z0_, h0_;
    SpectralData spectral_;
    // per-block h0 coefficients in the block basis
    std::vector<Eigen::VectorXd> coeffs_;
    bool straight_ = false;
    bool unit_speed_ = false;
};

// Geodesic through `base` with the given spatial initial velocity.
GeodesicN geodesic_from_spatial(std::shared_ptr<const StepTwoAlgebra> algebra,
                                const GroupPoint& base, const AlgebraVector& velocity);

// Fixed-step RK4 integration of h'' = Z h', z' = z0 + [h,h']/2 from
// (h,v,z) = (0, h0, 0); the independent oracle for the closed form.
struct Trajectory {
    std::vector<double> ts;
    std::vector<Eigen::VectorXd> z, h, v;
};
Trajectory ode_oracle(const GeodesicN& g, double t_end, int steps);

// Escape inequality report for a unit-speed geodesic based at the identity.
// Master bound: |z(t)+h(t)|^2 >= t^2 (pi-2)/(4 dim h).  Case bounds:
//   a: |z0|^2 >= 1/2            -> t^2/2
//   b: dominant lambda = 0      -> t^2/(2 dim h)
//   c: 0 <= t <= pi/(2 lambda)  -> t^2/(2 dim h)
//   d: t > pi/(2 lambda)        -> (pi-2) t^2/(4 dim h)
struct EscapeSample {
    double t;
    double lhs_sq;            // |z(t)|^2 + |h(t)|^2 in exponential coordinates
    double bound;             // applicable case bound
    double margin;            // lhs_sq - bound
    char case_tag;
    double master_bound;
    double master_margin;
};

struct EscapeReport {
    std::vector<EscapeSample> samples;
    double min_margin = 0.0;
    double min_master_margin = 0.0;
    bool ok(double slack = 1e-9) const {
        return min_margin >= -slack && min_master_margin >= -slack;
    }
};

EscapeReport escape_bound_check(const GeodesicN& g, std::span<const double> ts);

}  // namespace nilray
