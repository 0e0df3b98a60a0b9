#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nilray/geodesic.hpp"
#include "nilray/phantom.hpp"
#include "nilray/radon2d.hpp"

namespace nilray {

// Compactly supported function on N; the support is a coordinate ball
// (exponential-coordinate norm) about a stated center point.
struct ScalarFieldN {
    std::shared_ptr<const StepTwoAlgebra> algebra;
    std::function<double(const GroupPoint&)> eval;
    GroupPoint support_center;
    double support_radius = 0.0;
    std::shared_ptr<const Phantom> descriptor;

    double operator()(const GroupPoint& p) const { return eval(p); }
};

ScalarFieldN field_from_phantom_n(std::shared_ptr<const StepTwoAlgebra> algebra,
                                  std::shared_ptr<const Phantom> ph);

// Candidate totally geodesic isometric immersion Phi: R^2 -> N.
// Phi(s,u) = geodesic exponential at `base` along s·v + u·w, with v, w
// orthonormal at base under metric_at.  Whether the candidate really is a
// totally geodesic flat is decided by the verifier below; the residual it
// assigns travels with the object.
class FlatImmersion {
public:
    FlatImmersion(std::shared_ptr<const StepTwoAlgebra> algebra, GroupPoint base,
                  AlgebraVector v, AlgebraVector w, double ortho_tol = 1e-10);

    const StepTwoAlgebra& algebra() const { return *algebra_; }
    const std::shared_ptr<const StepTwoAlgebra>& algebra_ptr() const { return algebra_; }
    const GroupPoint& base() const { return base_; }
    const AlgebraVector& v() const { return v_; }
    const AlgebraVector& w() const { return w_; }

    GroupPoint at(double s, double u) const;
    GroupPoint at(const Eigen::Vector2d& params) const { return at(params[0], params[1]); }

    // dPhi applied to a parameter direction, by central differences
    AlgebraVector tangent(const Eigen::Vector2d& params, const Eigen::Vector2d& dir,
                          double fd_step = 1e-5) const;

    double residual() const { return residual_; }
    void set_residual(double r) { residual_ = r; }
    bool verified(double tol) const { return std::isfinite(residual_) && residual_ <= tol; }

private:
    std::shared_ptr<const StepTwoAlgebra> algebra_;
    GroupPoint base_;
    AlgebraVector v_, w_;
    double residual_ = std::numeric_limits<double>::quiet_NaN();
};

// Fits the initial velocity of the curve at t = 0 by finite differences,
// builds the geodesic with that data and returns the max coordinate deviation
// over the grid.  4th-order differences with step fit_step keep the fit noise
// below the 1e-7 verification gate.
double geodesy_residual(std::shared_ptr<const StepTwoAlgebra> algebra,
                        const std::function<GroupPoint(double)>& curve,
                        std::span<const double> t_grid, double fit_step = 1e-3);

struct FlatCheckOptions {
    std::vector<Eigen::Vector2d> base_params;
    std::vector<Eigen::Vector2d> directions;
    std::vector<double> t_grid;
    double fit_step = 1e-3;

    static FlatCheckOptions standard();
    static FlatCheckOptions coarse();  // cheap probe used inside the search loop
};

struct FlatCheckResult {
    bool ok = false;
    double residual = 0.0;  // worst deviation over all sampled parameter lines
};

// Checks that every sampled parameter line maps to an N-geodesic (lines
// through off-origin base points and the diagonals of small quadrilaterals
// carry the content; radial lines hold by construction).
FlatCheckResult is_totally_geodesic_flat(const FlatImmersion& flat,
                                         const FlatCheckOptions& opts, double tol);
FlatCheckResult is_totally_geodesic_flat(const FlatImmersion& flat, double tol);

struct FlatSearchOptions {
    double tol = 1e-7;
    int budget = 2400;   // objective evaluations across all restarts
    int restarts = 6;
    std::uint64_t seed = 20240901;
    FlatCheckOptions verify = FlatCheckOptions::standard();
    FlatCheckOptions probe = FlatCheckOptions::coarse();
};

struct FlatSearchResult {
    std::optional<FlatImmersion> flat;
    double best_residual = std::numeric_limits<double>::infinity();
    AlgebraVector best_w;  // spatial second direction of the best candidate
    int evaluations = 0;

    bool found() const { return flat.has_value(); }
};

// Searches for a verified flat through the geodesic with the given unit body
// tangent at `base`: first a structured catalog (central planes, and second
// directions solving the linear abelian-pair conditions), then derivative-free
// least squares (Nelder-Mead with restarts) over the unit sphere orthogonal
// to the tangent.  A miss is a report, not a crash.
FlatSearchResult find_flat_through(std::shared_ptr<const StepTwoAlgebra> algebra,
                                   const GroupPoint& base, const AlgebraVector& tangent,
                                   const FlatSearchOptions& opts = {});

// Thrown by reduction paths when the atlas cannot supply a flat.
class FlatNotFoundError : public std::runtime_error {
public:
    FlatNotFoundError(const std::string& what, double best_residual)
        : std::runtime_error(what), best_residual_(best_residual) {}
    double best_residual() const { return best_residual_; }

private:
    double best_residual_;
};

// X-ray transform on N along a unit-speed geodesic, truncated conservatively
// via the escape bound; the truncation points are asserted to lie outside the
// support at run time.
double xray_forward_N(const ScalarFieldN& f, const GeodesicN& g, double quad_tol = 1e-9);

using GeodesicOracleN = std::function<double(const GeodesicN&)>;

GeodesicOracleN quadrature_geodesic_oracle(const ScalarFieldN& f, double quad_tol = 1e-9);

// Parameter-plane radius outside which the pullback of f to a flat based at
// flat_base vanishes (escape bound applied to the translated support).
double param_support_radius(const StepTwoAlgebra& a, const GroupPoint& flat_base,
                            const GroupPoint& support_center, double support_radius);

// Pulls the geodesic oracle back to line integrals on a verified flat:
// LineR2(theta, p) -> N-geodesic through Phi(p·w) with direction dPhi(w_perp),
// renormalized under metric_at.  Requires flat.residual() <= max_residual.
LineOracle restrict_to_flat(const GeodesicOracleN& oracle, const FlatImmersion& flat,
                            double max_residual = 1e-6);

// Gauss-Newton location of Phi^{-1}(x) with finite-difference Jacobians; the
// metric projection onto (v, w) seeds the iteration and is returned directly
// when it already reproduces x.
struct FlatProjection {
    Eigen::Vector2d params = Eigen::Vector2d::Zero();
    double residual = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
};
FlatProjection project_to_flat(const FlatImmersion& flat, const GroupPoint& x,
                               double tol = 1e-10, int max_iter = 60);

// Provider of verified flats; the reduction engine depends only on this.
class FlatAtlas {
public:
    virtual ~FlatAtlas() = default;
    virtual std::optional<FlatImmersion> flat_through(const GroupPoint& x) const = 0;
    // finite sample of atlas flats through a common point, for conv_p
    virtual std::vector<FlatImmersion> flats_through(const GroupPoint& p) const;
};

class CallbackAtlas : public FlatAtlas {
public:
    using Fn = std::function<std::optional<FlatImmersion>(const GroupPoint&)>;
    explicit CallbackAtlas(Fn fn) : fn_(std::move(fn)) {}
    std::optional<FlatImmersion> flat_through(const GroupPoint& x) const override {
        return fn_(x);
    }

private:
    Fn fn_;
};

class ListAtlas : public FlatAtlas {
public:
    ListAtlas(std::vector<FlatImmersion> flats, double containment_tol = 1e-7)
        : flats_(std::move(flats)), tol_(containment_tol) {}
    std::optional<FlatImmersion> flat_through(const GroupPoint& x) const override;
    std::vector<FlatImmersion> flats_through(const GroupPoint& p) const override;
    const std::vector<FlatImmersion>& flats() const { return flats_; }

private:
    std::vector<FlatImmersion> flats_;
    double tol_;
};

// Closed-form atlases.  axis planes: affine 2-planes of an abelian algebra
// spanned by two h-axes.  central planes: translates x·exp(span{z_a, z_b}));
// totally geodesic for every base point.
CallbackAtlas axis_plane_atlas(std::shared_ptr<const StepTwoAlgebra> algebra, int h_axis_1,
                               int h_axis_2);
CallbackAtlas central_plane_atlas(std::shared_ptr<const StepTwoAlgebra> algebra, int z_axis_1,
                                  int z_axis_2);

struct ReduceOptions {
    RadonInvertOptions invert{.grid = 256, .n_dirs = 128};
    // coordinate-ball support of the transformed function; the line-space
    // truncation is derived from it per flat via param_support_radius
    GroupPoint support_center;
    double support_radius = -1.0;
    double t_max_override = 0.0;  // > 0 replaces the derived truncation
    double newton_tol = 1e-10;
    int newton_max_iter = 60;
    double projection_tol = 1e-8;
    double flat_residual_tol = 1e-6;
};

// The reduction principle as an algorithm: pick the atlas flat through x,
// pull the oracle back to a 2-d line oracle, invert with Radon's formula at
// the preimage of x.
double reduce_and_invert(const GeodesicOracleN& oracle, const FlatAtlas& atlas,
                         const GroupPoint& x, const ReduceOptions& opts);

// Sampled compact region (point cloud plus membership predicate).
struct CompactRegion {
    std::vector<Eigen::VectorXd> samples;
    std::function<bool(const Eigen::VectorXd&)> member;
    Eigen::VectorXd bound_center;
    double bound_radius = 0.0;
};

// conv_p(K): grid points x retained iff x lies on at least one atlas flat and,
// for every atlas flat containing x, the pullback of x lies in the convex
// hull of the pullback of K.  Points not covered by the (finite) atlas sample
// are dropped; this is the inner approximation of the definition.
CompactRegion conv_p_region(const CompactRegion& K, const GroupPoint& p,
                            const std::vector<FlatImmersion>& atlas, int grid,
                            double tol = 1e-7);

struct FlatSearchRecord {
    AlgebraVector tangent;
    FlatSearchResult result;
};
void save_atlas_json(const std::filesystem::path& path,
                     const std::vector<FlatSearchRecord>& records, const OutputMeta& meta);
std::vector<FlatImmersion> load_atlas_json(std::shared_ptr<const StepTwoAlgebra> algebra,
                                           const std::filesystem::path& path);

}  // namespace nilray
