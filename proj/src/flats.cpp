#include "nilray/flats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "json.hpp"
#include "nilray/errors.hpp"
#include "nilray/quadrature.hpp"
#include "nilray/rng.hpp"

namespace nilray {

namespace {

Eigen::VectorXd stack(const AlgebraVector& v) {
    Eigen::VectorXd out(v.z.size() + v.h.size());
    out.head(v.z.size()) = v.z;
    out.tail(v.h.size()) = v.h;
    return out;
}

AlgebraVector unstack(const StepTwoAlgebra& a, const Eigen::VectorXd& x) {
    if (x.size() != a.dim_n()) throw std::invalid_argument("unstack: wrong dimension");
    return {x.head(a.dim_z()), x.tail(a.dim_h())};
}

// orthonormal basis of the complement of a unit vector, via the Householder Q
Eigen::MatrixXd orthogonal_complement(const Eigen::VectorXd& unit) {
    const auto n = unit.size();
    Eigen::MatrixXd col(n, 1);
    col.col(0) = unit;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(col);
    Eigen::MatrixXd q = qr.householderQ();
    return q.rightCols(n - 1);
}

}  // namespace

ScalarFieldN field_from_phantom_n(std::shared_ptr<const StepTwoAlgebra> algebra,
                                  std::shared_ptr<const Phantom> ph) {
    if (!algebra || !ph) throw std::invalid_argument("field_from_phantom_n: null input");
    if (ph->dim != algebra->dim_n())
        throw std::invalid_argument("field_from_phantom_n: phantom dim != dim n");
    ScalarFieldN f;
    f.algebra = algebra;
    f.descriptor = ph;
    f.support_center = GroupPoint(unstack(*algebra, ph->support_center()));
    f.support_radius = ph->support_radius();
    auto a = algebra;
    f.eval = [a, ph](const GroupPoint& p) { return ph->eval(stack(p.coords)); };
    return f;
}

FlatImmersion::FlatImmersion(std::shared_ptr<const StepTwoAlgebra> algebra, GroupPoint base,
                             AlgebraVector v, AlgebraVector w, double ortho_tol)
    : algebra_(std::move(algebra)),
      base_(std::move(base)),
      v_(std::move(v)),
      w_(std::move(w)) {
    if (!algebra_) throw std::invalid_argument("FlatImmersion: null algebra");
    const auto& a = *algebra_;
    const double gvv = metric_at(a, base_, v_, v_);
    const double gww = metric_at(a, base_, w_, w_);
    const double gvw = metric_at(a, base_, v_, w_);
    if (std::abs(gvv - 1.0) > ortho_tol || std::abs(gww - 1.0) > ortho_tol ||
        std::abs(gvw) > ortho_tol)
        throw std::invalid_argument("FlatImmersion: v, w must be orthonormal at the base");
}

GroupPoint FlatImmersion::at(double s, double u) const {
    // exp(t V) = exp(V t): evaluate the geodesic with velocity s v + u w at
    // time 1; keeps exact-linear cases exact.
    return geodesic_from_spatial(algebra_, base_, v_ * s + w_ * u).point_at(1.0);
}

AlgebraVector FlatImmersion::tangent(const Eigen::Vector2d& params, const Eigen::Vector2d& dir,
                                     double fd_step) const {
    const GroupPoint fwd = at(params + fd_step * dir);
    const GroupPoint bwd = at(params - fd_step * dir);
    return (fwd.coords - bwd.coords) / (2.0 * fd_step);
}

double geodesy_residual(std::shared_ptr<const StepTwoAlgebra> algebra,
                        const std::function<GroupPoint(double)>& curve,
                        std::span<const double> t_grid, double fit_step) {
    if (t_grid.empty()) throw std::invalid_argument("geodesy_residual: empty grid");
    const GroupPoint base = curve(0.0);

    // 4th-order central difference for the initial velocity
    const double e = fit_step;
    const AlgebraVector c_p2 = curve(2.0 * e).coords;
    const AlgebraVector c_p1 = curve(e).coords;
    const AlgebraVector c_m1 = curve(-e).coords;
    const AlgebraVector c_m2 = curve(-2.0 * e).coords;
    const AlgebraVector vel =
        (c_m2 - c_p2 + 8.0 * (c_p1 - c_m1)) * (1.0 / (12.0 * e));
    if (vel.norm() <= 1e-10)
        throw std::invalid_argument("geodesy_residual: degenerate (zero-velocity) curve");

    const GeodesicN geod = geodesic_from_spatial(algebra, base, vel);
    double worst = 0.0;
    for (double t : t_grid) {
        const AlgebraVector diff = curve(t).coords - geod.point_at(t).coords;
        worst = std::max(worst, diff.norm());
    }
    return worst;
}

FlatCheckOptions FlatCheckOptions::standard() {
    FlatCheckOptions o;
    o.base_params = {{0.0, 0.0}, {0.6, 0.0}, {0.0, 0.6}, {-0.45, 0.3}, {0.25, 0.4}};
    const double s = std::numbers::sqrt2 / 2.0;
    o.directions = {{1.0, 0.0}, {0.0, 1.0}, {s, s}, {0.6, -0.8}};
    o.t_grid = {-2.0, -1.5, -1.0, -0.5, -0.25, 0.25, 0.5, 1.0, 1.5, 2.0};
    return o;
}

FlatCheckOptions FlatCheckOptions::coarse() {
    FlatCheckOptions o;
    o.base_params = {{0.0, 0.0}, {0.5, 0.25}};
    o.directions = {{0.0, 1.0}, {0.6, -0.8}};
    o.t_grid = {-1.0, -0.5, 0.5, 1.0};
    return o;
}

FlatCheckResult is_totally_geodesic_flat(const FlatImmersion& flat,
                                         const FlatCheckOptions& opts, double tol) {
    double worst = 0.0;
    for (const auto& b : opts.base_params) {
        for (const auto& d : opts.directions) {
            const Eigen::Vector2d dir = d.normalized();
            auto curve = [&](double t) { return flat.at(b + t * dir); };
            worst = std::max(
                worst, geodesy_residual(flat.algebra_ptr(), curve, opts.t_grid, opts.fit_step));
        }
    }
    return {worst <= tol, worst};
}

FlatCheckResult is_totally_geodesic_flat(const FlatImmersion& flat, double tol) {
    return is_totally_geodesic_flat(flat, FlatCheckOptions::standard(), tol);
}

namespace {

struct NelderMeadOut {
    Eigen::VectorXd x;
    double value;
};

template <class F>
NelderMeadOut nelder_mead(F&& f, const Eigen::VectorXd& x0, double step, int max_evals,
                          int* evals_used) {
    const int n = static_cast<int>(x0.size());
    std::vector<Eigen::VectorXd> xs(n + 1, x0);
    std::vector<double> fs(n + 1);
    int evals = 0;
    auto eval = [&](const Eigen::VectorXd& x) {
        ++evals;
        return f(x);
    };
    for (int i = 1; i <= n; ++i) xs[i][i - 1] += step;
    for (int i = 0; i <= n; ++i) fs[i] = eval(xs[i]);

    while (evals < max_evals) {
        std::vector<int> idx(n + 1);
        for (int i = 0; i <= n; ++i) idx[i] = i;
        std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return fs[a] < fs[b]; });
        const int best = idx[0], second_worst = idx[n - 1], worst = idx[n];
        if (std::abs(fs[worst] - fs[best]) < 1e-15 * (1.0 + std::abs(fs[best]))) break;

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
        for (int i = 0; i <= n; ++i)
            if (i != worst) centroid += xs[i];
        centroid /= n;

        const Eigen::VectorXd xr = centroid + (centroid - xs[worst]);
        const double fr = eval(xr);
        if (fr < fs[best]) {
            const Eigen::VectorXd xe = centroid + 2.0 * (centroid - xs[worst]);
            const double fe = eval(xe);
            if (fe < fr) {
                xs[worst] = xe;
                fs[worst] = fe;
            } else {
                xs[worst] = xr;
                fs[worst] = fr;
            }
        } else if (fr < fs[second_worst]) {
            xs[worst] = xr;
            fs[worst] = fr;
        } else {
            Eigen::VectorXd xc;
            if (fr < fs[worst])
                xc = centroid + 0.5 * (xr - centroid);
            else
                xc = centroid - 0.5 * (centroid - xs[worst]);
            const double fc = eval(xc);
            if (fc < std::min(fr, fs[worst])) {
                xs[worst] = xc;
                fs[worst] = fc;
            } else {
                for (int i = 0; i <= n; ++i) {  // shrink toward best
                    if (i == best) continue;
                    xs[i] = xs[best] + 0.5 * (xs[i] - xs[best]);
                    fs[i] = eval(xs[i]);
                }
            }
        }
    }
    int bi = 0;
    for (int i = 1; i <= n; ++i)
        if (fs[i] < fs[bi]) bi = i;
    if (evals_used) *evals_used += evals;
    return {xs[bi], fs[bi]};
}

}  // namespace

FlatSearchResult find_flat_through(std::shared_ptr<const StepTwoAlgebra> algebra,
                                   const GroupPoint& base, const AlgebraVector& tangent,
                                   const FlatSearchOptions& opts) {
    const auto& a = *algebra;
    if (std::abs(tangent.norm() - 1.0) > 1e-9)
        throw std::invalid_argument("find_flat_through: tangent must be unit");

    const Eigen::VectorXd& z0 = tangent.z;
    const Eigen::VectorXd& h0 = tangent.h;
    const AlgebraVector v_spatial = left_translation_differential(a, base, tangent);

    FlatSearchResult result;
    result.best_w = a.zero_vector();

    auto try_candidate = [&](const AlgebraVector& wb) -> bool {
        const AlgebraVector w_spatial = left_translation_differential(a, base, wb);
        std::optional<FlatImmersion> flat;
        try {
            flat.emplace(algebra, base, v_spatial, w_spatial);
        } catch (const std::invalid_argument&) {
            return false;  // not orthonormal; skip
        }
        const FlatCheckResult check = is_totally_geodesic_flat(*flat, opts.verify, opts.tol);
        if (check.residual < result.best_residual) {
            result.best_residual = check.residual;
            result.best_w = w_spatial;
        }
        if (check.ok) {
            flat->set_residual(check.residual);
            result.flat = std::move(flat);
            return true;
        }
        return false;
    };

    // --- structured catalog ---
    std::vector<AlgebraVector> catalog;
    const double h0n = h0.norm();

    if (h0n <= 1e-12 && a.dim_z() >= 2) {
        // central vertex: any central direction orthogonal to z0
        const Eigen::MatrixXd comp = orthogonal_complement(z0.normalized());
        for (int i = 0; i < comp.cols(); ++i)
            catalog.push_back({comp.col(i), Eigen::VectorXd::Zero(a.dim_h())});
    }

    Eigen::VectorXd zh0 = Eigen::VectorXd::Zero(a.dim_h());
    if (!a.abelian()) zh0 = j_action(a, z0) * h0;
    if (zh0.norm() <= 1e-10) {
        // Linear abelian-pair conditions on w = (zc, k):
        //   J(z0) k + J(zc) h0 = 0,  [h0, k] = 0,  <(zc,k),(z0,h0)> = 0.
        // Kernel vectors are candidates; the remaining quadratic condition
        // J(zc) k = 0 is left to the verifier.
        const int dz = a.dim_z(), dh = a.dim_h(), nn = a.dim_n();
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dh + dz + 1, nn);
        for (int c = 0; c < dz; ++c) m.block(0, c, dh, 1) = a.j_basis(c) * h0;
        if (dz > 0) m.block(0, dz, dh, dh) = j_action(a, z0);
        for (int r = 0; r < dz; ++r)
            m.block(dh + r, dz, 1, dh) = (a.j_basis(r) * h0).transpose();
        m.block(dh + dz, 0, 1, nn) = stack(tangent).transpose();

        Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
        const auto& sv = svd.singularValues();
        const double smax = sv.size() ? sv(0) : 0.0;
        const double thresh = 1e-10 * std::max(1.0, smax);
        std::vector<Eigen::VectorXd> kernel;
        for (int i = static_cast<int>(sv.size()); i < nn; ++i)
            kernel.push_back(svd.matrixV().col(i));
        for (int i = 0; i < sv.size(); ++i)
            if (sv(i) <= thresh) kernel.push_back(svd.matrixV().col(i));

        for (const auto& kv : kernel) catalog.push_back(unstack(a, kv));
        for (std::size_t i = 0; i < kernel.size() && catalog.size() < 24; ++i)
            for (std::size_t j = i + 1; j < kernel.size() && catalog.size() < 24; ++j)
                catalog.push_back(unstack(a, ((kernel[i] + kernel[j]) / std::numbers::sqrt2)));
    }

    for (const auto& wb : catalog) {
        result.evaluations += 1;
        if (try_candidate(wb)) return result;
    }

    // --- derivative-free search over the unit sphere orthogonal to the tangent ---
    const int n = a.dim_n();
    if (n < 3) return result;  // no second direction exists
    const Eigen::MatrixXd basis = orthogonal_complement(stack(tangent).normalized());

    double probe_best = std::numeric_limits<double>::infinity();
    Eigen::VectorXd probe_best_y;
    int evals = 0;
    auto objective = [&](const Eigen::VectorXd& y) {
        const double yn = y.norm();
        if (yn < 1e-8) return 1e6;
        const AlgebraVector wb = unstack(a, basis * (y / yn));
        const AlgebraVector w_spatial = left_translation_differential(a, base, wb);
        double res;
        try {
            const FlatImmersion flat(algebra, base, v_spatial, w_spatial);
            res = is_totally_geodesic_flat(flat, opts.probe,
                                           std::numeric_limits<double>::infinity())
                      .residual;
        } catch (const std::invalid_argument&) {
            return 1e6;
        }
        if (res < probe_best) {
            probe_best = res;
            probe_best_y = y / yn;
        }
        return res;
    };

    const int per_restart = std::max(40, opts.budget / std::max(1, opts.restarts));
    for (int r = 0; r < opts.restarts && evals < opts.budget; ++r) {
        Rng rng(opts.seed + static_cast<std::uint64_t>(r));
        const Eigen::VectorXd y0 = rng.unit_vector(n - 1);
        nelder_mead(objective, y0, 0.35, per_restart, &evals);
    }
    result.evaluations += evals;

    if (probe_best_y.size()) {
        const AlgebraVector wb = unstack(a, basis * probe_best_y);
        result.evaluations += 1;
        if (try_candidate(wb)) return result;
    }
    return result;
}

double param_support_radius(const StepTwoAlgebra& a, const GroupPoint& flat_base,
                            const GroupPoint& support_center, double support_radius) {
    const double an = flat_base.coords.norm();
    const double rc = support_radius + support_center.coords.norm();
    const double rp = an + rc + 0.5 * a.bracket_bound() * an * (an + rc);
    return rp * std::sqrt(4.0 * a.dim_h() / (std::numbers::pi - 2.0));
}

double xray_forward_N(const ScalarFieldN& f, const GeodesicN& g, double quad_tol) {
    if (!g.unit_speed())
        throw std::invalid_argument("xray_forward_N: geodesic must be unit speed");
    const auto& a = g.algebra();
    const double reach =
        param_support_radius(a, g.base(), f.support_center, f.support_radius);
    for (double t : {-reach, reach}) {
        const double tail = std::abs(f.eval(g.point_at(t)));
        if (tail > 1e-12)
            throw NumericError("xray_forward_N: truncation bound violated", tail);
    }
    return integrate_gk15([&](double t) { return f.eval(g.point_at(t)); }, -reach, reach,
                          {quad_tol, 8000});
}

GeodesicOracleN quadrature_geodesic_oracle(const ScalarFieldN& f, double quad_tol) {
    return [f, quad_tol](const GeodesicN& g) { return xray_forward_N(f, g, quad_tol); };
}

LineOracle restrict_to_flat(const GeodesicOracleN& oracle, const FlatImmersion& flat,
                            double max_residual) {
    if (!flat.verified(max_residual))
        throw std::invalid_argument(
            "restrict_to_flat: flat is unverified or its residual exceeds the tolerance");
    return [oracle, flat](const LineR2& line) {
        const Eigen::Vector2d foot = line.foot();
        const Eigen::Vector2d dir2 = line.direction();
        const GroupPoint p = flat.at(foot);
        AlgebraVector tan = flat.tangent(foot, dir2);
        const double nrm = std::sqrt(metric_at(flat.algebra(), p, tan, tan));
        const GeodesicN g = geodesic_from_spatial(flat.algebra_ptr(), p, tan / nrm);
        return oracle(g);
    };
}

FlatProjection project_to_flat(const FlatImmersion& flat, const GroupPoint& x, double tol,
                               int max_iter) {
    const auto& a = flat.algebra();
    const AlgebraVector delta = x.coords - flat.base().coords;
    FlatProjection out;
    out.params = Eigen::Vector2d(metric_at(a, flat.base(), delta, flat.v()),
                                 metric_at(a, flat.base(), delta, flat.w()));

    auto residual_vec = [&](const Eigen::Vector2d& q) {
        return stack(flat.at(q).coords - x.coords);
    };
    Eigen::VectorXd r = residual_vec(out.params);
    out.residual = r.norm();
    const double scale = 1.0 + x.coords.norm();
    if (out.residual <= 1e-15 * scale) {  // metric projection already exact
        out.converged = true;
        return out;
    }

    const double fd = 1e-5;
    for (out.iterations = 1; out.iterations <= max_iter; ++out.iterations) {
        Eigen::MatrixXd jac(r.size(), 2);
        for (int c = 0; c < 2; ++c) {
            Eigen::Vector2d e = Eigen::Vector2d::Zero();
            e[c] = fd;
            jac.col(c) = (residual_vec(out.params + e) - residual_vec(out.params - e)) /
                         (2.0 * fd);
        }
        const Eigen::Matrix2d jtj = jac.transpose() * jac;
        const Eigen::Vector2d jtr = jac.transpose() * r;
        const double det = jtj.determinant();
        if (!(std::abs(det) > 1e-300)) break;
        const Eigen::Vector2d step = -jtj.inverse() * jtr;
        out.params += step;
        r = residual_vec(out.params);
        out.residual = r.norm();
        if (out.residual <= tol * scale) {
            out.converged = true;
            return out;
        }
        if (step.norm() <= 1e-14) break;
    }
    out.converged = out.residual <= tol * scale;
    return out;
}

std::vector<FlatImmersion> FlatAtlas::flats_through(const GroupPoint& p) const {
    std::vector<FlatImmersion> out;
    if (auto f = flat_through(p)) out.push_back(std::move(*f));
    return out;
}

std::optional<FlatImmersion> ListAtlas::flat_through(const GroupPoint& x) const {
    for (const auto& f : flats_) {
        const FlatProjection proj = project_to_flat(f, x, 1e-12, 60);
        if (proj.residual <= tol_) return f;
    }
    return std::nullopt;
}

std::vector<FlatImmersion> ListAtlas::flats_through(const GroupPoint& p) const {
    std::vector<FlatImmersion> out;
    for (const auto& f : flats_) {
        const FlatProjection proj = project_to_flat(f, p, 1e-12, 60);
        if (proj.residual <= tol_) out.push_back(f);
    }
    return out;
}

CallbackAtlas axis_plane_atlas(std::shared_ptr<const StepTwoAlgebra> algebra, int h_axis_1,
                               int h_axis_2) {
    if (h_axis_1 == h_axis_2 || h_axis_1 < 0 || h_axis_2 < 0 ||
        h_axis_1 >= algebra->dim_h() || h_axis_2 >= algebra->dim_h())
        throw std::invalid_argument("axis_plane_atlas: bad axes");
    return CallbackAtlas([algebra, h_axis_1, h_axis_2](
                             const GroupPoint& x) -> std::optional<FlatImmersion> {
        const auto& a = *algebra;
        AlgebraVector v = a.zero_vector();
        AlgebraVector w = a.zero_vector();
        v.h[h_axis_1] = 1.0;
        w.h[h_axis_2] = 1.0;
        try {
            FlatImmersion flat(algebra, x, v, w);
            const auto check =
                is_totally_geodesic_flat(flat, FlatCheckOptions::standard(), 1e-7);
            if (!check.ok) return std::nullopt;
            flat.set_residual(check.residual);
            return flat;
        } catch (const std::invalid_argument&) {
            return std::nullopt;
        }
    });
}

CallbackAtlas central_plane_atlas(std::shared_ptr<const StepTwoAlgebra> algebra, int z_axis_1,
                                  int z_axis_2) {
    if (z_axis_1 == z_axis_2 || z_axis_1 < 0 || z_axis_2 < 0 ||
        z_axis_1 >= algebra->dim_z() || z_axis_2 >= algebra->dim_z())
        throw std::invalid_argument("central_plane_atlas: bad axes");
    return CallbackAtlas([algebra, z_axis_1, z_axis_2](
                             const GroupPoint& x) -> std::optional<FlatImmersion> {
        const auto& a = *algebra;
        AlgebraVector v = a.zero_vector();
        AlgebraVector w = a.zero_vector();
        v.z[z_axis_1] = 1.0;
        w.z[z_axis_2] = 1.0;
        FlatImmersion flat(algebra, x, v, w);
        const auto check = is_totally_geodesic_flat(flat, FlatCheckOptions::standard(), 1e-7);
        if (!check.ok) return std::nullopt;
        flat.set_residual(check.residual);
        return flat;
    });
}

double reduce_and_invert(const GeodesicOracleN& oracle, const FlatAtlas& atlas,
                         const GroupPoint& x, const ReduceOptions& opts) {
    if (opts.support_radius < 0.0 && opts.t_max_override <= 0.0)
        throw std::invalid_argument(
            "reduce_and_invert: either the support ball or t_max_override is required");
    auto flat = atlas.flat_through(x);
    if (!flat)
        throw FlatNotFoundError("reduce_and_invert: atlas has no flat through the point",
                                std::numeric_limits<double>::infinity());
    const FlatProjection proj =
        project_to_flat(*flat, x, opts.newton_tol, opts.newton_max_iter);
    if (!proj.converged && proj.residual > opts.projection_tol)
        throw NumericError("reduce_and_invert: preimage Newton did not converge (residual " +
                               fmt_double(proj.residual) + " after " +
                               std::to_string(proj.iterations) + " iterations)",
                           proj.residual);
    const LineOracle restricted = restrict_to_flat(oracle, *flat, opts.flat_residual_tol);
    double t_max = opts.t_max_override;
    if (t_max <= 0.0) {
        t_max = param_support_radius(flat->algebra(), flat->base(), opts.support_center,
                                     opts.support_radius) +
                proj.params.norm();
    }
    return radon_invert(restricted, proj.params, t_max, opts.invert);
}

CompactRegion conv_p_region(const CompactRegion& K, const GroupPoint& p,
                            const std::vector<FlatImmersion>& atlas, int grid, double tol) {
    if (atlas.empty()) throw std::invalid_argument("conv_p_region: empty atlas");
    if (grid < 2) throw std::invalid_argument("conv_p_region: grid must be >= 2");
    if (K.samples.empty()) throw std::invalid_argument("conv_p_region: empty region K");
    const auto& a = atlas.front().algebra();
    const int dim = a.dim_n();

    // pull K back onto each flat once
    struct FlatHull {
        std::vector<Eigen::Vector2d> hull;  // empty: no K sample on this flat
    };
    std::vector<FlatHull> hulls(atlas.size());
    for (std::size_t i = 0; i < atlas.size(); ++i) {
        std::vector<Eigen::Vector2d> params;
        for (const auto& s : K.samples) {
            const GroupPoint q(unstack(a, s));
            const FlatProjection proj = project_to_flat(atlas[i], q, 1e-12, 60);
            if (proj.residual <= tol) params.push_back(proj.params);
        }
        if (!params.empty()) hulls[i].hull = convex_hull(params);
    }

    // bounding box of K and p, padded
    Eigen::VectorXd lo = stack(p.coords), hi = stack(p.coords);
    for (const auto& s : K.samples) {
        lo = lo.cwiseMin(s);
        hi = hi.cwiseMax(s);
    }
    const Eigen::VectorXd pad = 0.15 * (hi - lo).cwiseMax(1e-3);
    lo -= pad;
    hi += pad;

    double cells = 1.0;
    for (int d = 0; d < dim; ++d) cells *= grid;
    if (cells > 2e6)
        throw std::invalid_argument("conv_p_region: grid^dim too large for a desk-scale scan");

    CompactRegion out;
    std::vector<int> index(dim, 0);
    Eigen::VectorXd x(dim);
    const double hull_tol = 1e-9;
    while (true) {
        for (int d = 0; d < dim; ++d)
            x[d] = lo[d] + (hi[d] - lo[d]) * index[d] / (grid - 1);
        bool on_any = false, ok = true;
        const GroupPoint gp(unstack(a, x));
        for (std::size_t i = 0; i < atlas.size() && ok; ++i) {
            const FlatProjection proj = project_to_flat(atlas[i], gp, 1e-12, 60);
            if (proj.residual > tol) continue;
            on_any = true;
            if (hulls[i].hull.empty() || !point_in_hull(hulls[i].hull, proj.params, hull_tol))
                ok = false;
        }
        if (on_any && ok) out.samples.push_back(x);

        int d = 0;
        while (d < dim && ++index[d] == grid) index[d++] = 0;
        if (d == dim) break;
    }

    Eigen::VectorXd cell(dim);
    for (int d = 0; d < dim; ++d) cell[d] = (hi[d] - lo[d]) / (grid - 1);
    const double snap = 0.5 * cell.norm() + 1e-12;
    auto samples = std::make_shared<std::vector<Eigen::VectorXd>>(out.samples);
    out.member = [samples, snap](const Eigen::VectorXd& q) {
        for (const auto& s : *samples)
            if ((q - s).norm() <= snap) return true;
        return false;
    };
    out.bound_center = Eigen::VectorXd::Zero(dim);
    out.bound_radius = 0.0;
    if (!out.samples.empty()) {
        for (const auto& s : out.samples) out.bound_center += s;
        out.bound_center /= static_cast<double>(out.samples.size());
        for (const auto& s : out.samples)
            out.bound_radius = std::max(out.bound_radius, (s - out.bound_center).norm());
    }
    return out;
}

namespace {

nlohmann::ordered_json vector_to_json(const AlgebraVector& v) {
    nlohmann::ordered_json e;
    e["z"] = std::vector<double>(v.z.data(), v.z.data() + v.z.size());
    e["h"] = std::vector<double>(v.h.data(), v.h.data() + v.h.size());
    return e;
}

AlgebraVector vector_from_json(const StepTwoAlgebra& a, const nlohmann::json& e) {
    const auto z = e.at("z").get<std::vector<double>>();
    const auto h = e.at("h").get<std::vector<double>>();
    if (static_cast<int>(z.size()) != a.dim_z() || static_cast<int>(h.size()) != a.dim_h())
        throw std::invalid_argument("atlas JSON: vector dimensions do not match the algebra");
    return {Eigen::Map<const Eigen::VectorXd>(z.data(), a.dim_z()),
            Eigen::Map<const Eigen::VectorXd>(h.data(), a.dim_h())};
}

}  // namespace

void save_atlas_json(const std::filesystem::path& path,
                     const std::vector<FlatSearchRecord>& records, const OutputMeta& meta) {
    nlohmann::ordered_json doc;
    doc["meta"]["config_hash"] = meta.config_hash;
    doc["meta"]["seed"] = meta.seed;
    for (const auto& [k, v] : meta.entries) doc["meta"][k] = v;
    auto flats = nlohmann::ordered_json::array();
    auto misses = nlohmann::ordered_json::array();
    for (const auto& rec : records) {
        if (rec.result.found()) {
            const auto& f = *rec.result.flat;
            nlohmann::ordered_json e;
            e["base"] = vector_to_json(f.base().coords);
            e["v"] = vector_to_json(f.v());
            e["w"] = vector_to_json(f.w());
            e["residual"] = f.residual();
            flats.push_back(std::move(e));
        } else {
            nlohmann::ordered_json e;
            e["tangent"] = vector_to_json(rec.tangent);
            e["best_residual"] = rec.result.best_residual;
            e["best_w"] = vector_to_json(rec.result.best_w);
            e["evaluations"] = rec.result.evaluations;
            misses.push_back(std::move(e));
        }
    }
    doc["flats"] = std::move(flats);
    doc["not_found"] = std::move(misses);
    write_text_file(path, doc.dump(2) + "\n");
}

std::vector<FlatImmersion> load_atlas_json(std::shared_ptr<const StepTwoAlgebra> algebra,
                                           const std::filesystem::path& path) {
    const auto doc = nlohmann::json::parse(read_text_file(path));
    std::vector<FlatImmersion> out;
    for (const auto& e : doc.at("flats")) {
        FlatImmersion flat(algebra, GroupPoint(vector_from_json(*algebra, e.at("base"))),
                           vector_from_json(*algebra, e.at("v")),
                           vector_from_json(*algebra, e.at("w")));
        // re-verify rather than trusting the stored residual
        const auto check = is_totally_geodesic_flat(flat, FlatCheckOptions::standard(),
                                                    std::numeric_limits<double>::infinity());
        flat.set_residual(check.residual);
        out.push_back(std::move(flat));
    }
    return out;
}

}  // namespace nilray
