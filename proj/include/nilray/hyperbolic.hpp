#pragma once

#include <complex>
#include <functional>

#include "nilray/radon2d.hpp"

namespace nilray {

// Poincare-disk model of H^2.  Geodesics are parametrized by a point and a
// direction angle; the two orientations give the same integrals.

double h2_distance(std::complex<double> a, std::complex<double> b);

struct GeodesicH2 {
    std::complex<double> base;  // |base| < 1
    double dir = 0.0;           // direction angle at base (angles are conformal)

    // unit-speed point at hyperbolic arclength t
    std::complex<double> at(double t) const;
    GeodesicH2 reversed() const;
};

// the geodesic whose closest point to x sits at hyperbolic distance t in
// direction alpha (perpendicular to the radial geodesic there)
GeodesicH2 h2_geodesic_at_distance(std::complex<double> x, double t, double alpha);

struct ScalarFieldH2 {
    std::function<double(std::complex<double>)> eval;
    std::complex<double> center{0.0, 0.0};
    double support_radius = 1.0;  // hyperbolic distance
};

using H2Oracle = std::function<double(const GeodesicH2&)>;

double h2_xray_forward(const ScalarFieldH2& f, const GeodesicH2& g, double quad_tol = 1e-9);
H2Oracle h2_quadrature_oracle(const ScalarFieldH2& f, double quad_tol = 1e-9);

// mean of X f over the geodesics at hyperbolic distance t from x
double h2_mean_value(const H2Oracle& xf, std::complex<double> x, double t, int n_dirs);

// hyperbolic inversion formula: f(x) = -(1/pi) ∫_0^inf F_x'(t)/sinh(t) dt
double h2_invert(const H2Oracle& xf, std::complex<double> x, double t_max,
                 const RadonInvertOptions& opts = {});

}  // namespace nilray
