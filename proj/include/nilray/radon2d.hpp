#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nilray/io.hpp"

namespace nilray {

struct Phantom;

// Unparametrized line in canonical normal form: {x : <x, w(theta)> = p} with
// w(theta) = (cos theta, sin theta), theta in [0, pi), p signed.  The two
// orientations of a line are quotiented out; |p| is the distance to the
// origin.
struct LineR2 {
    double theta = 0.0;
    double p = 0.0;

    static LineR2 canonical(double theta, double p);
    // line through a point with the given direction angle (normal convention
    // theta_perp = (y, -x))
    static LineR2 through(const Eigen::Vector2d& point, double direction_angle);

    Eigen::Vector2d normal() const { return {std::cos(theta), std::sin(theta)}; }
    Eigen::Vector2d direction() const { return {-std::sin(theta), std::cos(theta)}; }
    Eigen::Vector2d foot() const { return p * normal(); }
};

// Compactly supported test function on R^2.  The evaluator must vanish
// outside the stated disk; `descriptor` (when the field comes from a phantom)
// enables closed-form-per-bump line oracles.
struct ScalarField2D {
    std::function<double(double, double)> eval;
    Eigen::Vector2d support_center = Eigen::Vector2d::Zero();
    double support_radius = 0.0;
    std::string smoothness = "smooth";
    std::shared_ptr<const Phantom> descriptor;

    double operator()(const Eigen::Vector2d& x) const { return eval(x[0], x[1]); }
};

using LineOracle = std::function<double(const LineR2&)>;

// X f(L) by adaptive quadrature over the chord of the support disk; exactly 0
// when the line misses the disk.
double xray_line_integral(const ScalarField2D& f, const LineR2& line,
                          double quad_tol = 1e-9);

LineOracle quadrature_line_oracle(const ScalarField2D& f, double quad_tol = 1e-9);

std::vector<double> uniform_thetas(int n);                 // n angles in [0, pi)
std::vector<double> uniform_offsets(int n, double p_max);  // n offsets in [-p_max, p_max]

// Sampled X-ray transform on a (theta, offset) grid.
struct Sinogram {
    std::vector<double> thetas;
    std::vector<double> offsets;
    Eigen::MatrixXd values;  // thetas.size() x offsets.size()
    std::string field_id;
    double quad_tol = 0.0;

    // Line oracle backed by the samples: Catmull-Rom in offset, linear in
    // theta (with the (theta+pi, p) = (theta, -p) wrap), zero beyond the
    // offset range.
    LineOracle interpolating_oracle() const;
};

Sinogram radon_forward(const ScalarField2D& f, const std::vector<double>& thetas,
                       const std::vector<double>& offsets, double quad_tol = 1e-9);

// F_x(t): mean of X f over the lines at distance t from x, by the n_dirs-point
// trapezoid rule over the direction circle (spectrally accurate for the
// periodic integrand).
double mean_line_value(const LineOracle& xf, const Eigen::Vector2d& x, double t, int n_dirs);

struct RadialProfile {
    Eigen::Vector2d center;
    std::vector<double> ts;
    std::vector<double> values;
};

struct RadonInvertOptions {
    int grid = 1024;        // radial cells
    int n_dirs = 256;       // directions per F_x(t)
    double grading = 1.5;   // t_j = t_max (j/n)^grading, denser near 0
    double tail_tol = 1e-6; // |F_x(t_max)| above this flags t_max as too small
    bool strict_tail = false;
};

struct RadonInvertDiagnostics {
    double tail_value = 0.0;
    bool tail_ok = true;
    double f2_at_zero = 0.0;  // fitted F_x''(0)
};

RadialProfile radial_profile(const LineOracle& xf, const Eigen::Vector2d& x, double t_max,
                             int grid, double grading, int n_dirs);

// Core of the inversion formula: ∫ F'(t)/w(t) dt over the sampled profile,
// with w(t) = t (Euclidean) or sinh t (hyperbolic).  F' by central
// differences; the t->0 cells use the even-extension limit F'(t)/w(t) ->
// F''(0), fitted over the first cells for noise stability; trapezoid after.
double radial_inversion_integral(const std::vector<double>& ts, const std::vector<double>& fs,
                                 const std::function<double(double)>& denom,
                                 double* f2_at_zero = nullptr);

// Radon's inversion formula: f(x) = -(1/pi) ∫_0^inf F_x'(t)/t dt.
double radon_invert(const LineOracle& xf, const Eigen::Vector2d& x, double t_max,
                    const RadonInvertOptions& opts = {},
                    RadonInvertDiagnostics* diag = nullptr);

// Support-theorem harness: for f supported in B_R(0) verifies that sampled
// lines with |p| > R integrate to quadrature zero, and that reconstruction at
// points R < |x| <= 2R returns zero within tolerance.
struct SupportHarnessOptions {
    int n_line_thetas = 24;
    int n_line_offsets = 40;
    double offset_span = 2.0;  // offsets sampled in (R, R + span*R]
    // at points far outside the support the field subtends a narrow angle,
    // so the direction average needs the finer n_dirs
    int n_recon_points = 50;
    RadonInvertOptions invert{.grid = 8192, .n_dirs = 512, .grading = 1.5};
};

struct SupportHarnessReport {
    double max_outside_line_value = 0.0;
    double max_outside_reconstruction = 0.0;
    int lines_checked = 0;
    int points_checked = 0;
    bool forward_ok(double tol = 1e-12) const { return max_outside_line_value <= tol; }
    bool reconstruction_ok(double tol = 1e-6) const {
        return max_outside_reconstruction <= tol;
    }
};

SupportHarnessReport support_harness(const ScalarField2D& f, double R,
                                     const SupportHarnessOptions& opts = {});

// Monotone-chain convex hull, counterclockwise, collinear points dropped.
std::vector<Eigen::Vector2d> convex_hull(const std::vector<Eigen::Vector2d>& points);
// Point membership (boundary inclusive) with a signed-distance tolerance.
bool point_in_hull(const std::vector<Eigen::Vector2d>& hull, const Eigen::Vector2d& x,
                   double tol = 1e-12);

void write_sinogram_csv(const std::filesystem::path& path, const Sinogram& sino,
                        const OutputMeta& meta);
Sinogram read_sinogram_csv(const std::filesystem::path& path);

}  // namespace nilray
