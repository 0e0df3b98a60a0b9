#include "nilray/radon2d.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "nilray/errors.hpp"
#include "nilray/phantom.hpp"
#include "nilray/quadrature.hpp"

namespace nilray {

namespace {
constexpr double kPi = std::numbers::pi;
}

LineR2 LineR2::canonical(double theta, double p) {
    double k = std::floor(theta / kPi);
    double th = theta - k * kPi;
    if (th >= kPi) {  // guard against rounding at the boundary
        th -= kPi;
        k += 1.0;
    }
    if (th < 0.0) {
        th += kPi;
        k -= 1.0;
    }
    const bool flip = std::fmod(std::abs(k), 2.0) >= 0.5;
    return LineR2{th, flip ? -p : p};
}

LineR2 LineR2::through(const Eigen::Vector2d& point, double direction_angle) {
    // normal = direction^perp with (x,y)^perp = (y,-x)
    const Eigen::Vector2d n(std::sin(direction_angle), -std::cos(direction_angle));
    double beta = std::atan2(n[1], n[0]);
    double p = point.dot(n);
    if (beta < 0.0) {
        beta += kPi;
        p = -p;
    }
    if (beta >= kPi) {
        beta -= kPi;
        p = -p;
    }
    return LineR2{beta, p};
}

double xray_line_integral(const ScalarField2D& f, const LineR2& line, double quad_tol) {
    const Eigen::Vector2d w = line.normal();
    const double d = line.p - f.support_center.dot(w);
    if (std::abs(d) >= f.support_radius) return 0.0;
    const Eigen::Vector2d dir = line.direction();
    const Eigen::Vector2d foot = line.foot();
    const double sc = (f.support_center - foot).dot(dir);
    const double half = std::sqrt(f.support_radius * f.support_radius - d * d);
    return integrate_gk15(
        [&](double s) {
            const Eigen::Vector2d x = foot + s * dir;
            return f.eval(x[0], x[1]);
        },
        sc - half, sc + half, {quad_tol, 8000});
}

LineOracle quadrature_line_oracle(const ScalarField2D& f, double quad_tol) {
    return [f, quad_tol](const LineR2& line) { return xray_line_integral(f, line, quad_tol); };
}

std::vector<double> uniform_thetas(int n) {
    if (n < 1) throw std::invalid_argument("uniform_thetas: n must be >= 1");
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) out[i] = kPi * i / n;
    return out;
}

std::vector<double> uniform_offsets(int n, double p_max) {
    if (n < 2) throw std::invalid_argument("uniform_offsets: n must be >= 2");
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) out[i] = -p_max + 2.0 * p_max * i / (n - 1);
    return out;
}

Sinogram radon_forward(const ScalarField2D& f, const std::vector<double>& thetas,
                       const std::vector<double>& offsets, double quad_tol) {
    Sinogram sino;
    sino.thetas = thetas;
    sino.offsets = offsets;
    sino.quad_tol = quad_tol;
    sino.values.resize(static_cast<Eigen::Index>(thetas.size()),
                       static_cast<Eigen::Index>(offsets.size()));
    for (std::size_t i = 0; i < thetas.size(); ++i)
        for (std::size_t j = 0; j < offsets.size(); ++j)
            sino.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                xray_line_integral(f, LineR2{thetas[i], offsets[j]}, quad_tol);
    return sino;
}

LineOracle Sinogram::interpolating_oracle() const {
    struct Data {
        std::vector<double> offsets;
        Eigen::MatrixXd values;
    };
    auto data = std::make_shared<Data>(Data{offsets, values});
    const int nth = static_cast<int>(thetas.size());
    const int np = static_cast<int>(offsets.size());
    if (nth < 2 || np < 4)
        throw std::invalid_argument("interpolating_oracle: grid too small");
    const double dth = kPi / nth;

    // Catmull-Rom in offset within one theta row; zero beyond the table.
    auto sample_row = [data, np](int row, double p) {
        const double p0 = data->offsets.front();
        const double dp = (data->offsets.back() - p0) / (np - 1);
        const double u = (p - p0) / dp;
        if (u < 0.0 || u > np - 1) return 0.0;
        int i = std::clamp(static_cast<int>(std::floor(u)), 0, np - 2);
        const double s = u - i;
        const auto& v = data->values;
        const double q1 = v(row, i);
        const double q2 = v(row, i + 1);
        const double q0 = v(row, std::max(0, i - 1));
        const double q3 = v(row, std::min(np - 1, i + 2));
        return 0.5 * (2.0 * q1 + (-q0 + q2) * s +
                      (2.0 * q0 - 5.0 * q1 + 4.0 * q2 - q3) * s * s +
                      (-q0 + 3.0 * q1 - 3.0 * q2 + q3) * s * s * s);
    };

    return [sample_row, nth, dth](const LineR2& line) {
        const LineR2 L = LineR2::canonical(line.theta, line.p);
        const double u = L.theta / dth;
        int i0 = static_cast<int>(std::floor(u));
        double frac = u - i0;
        if (i0 >= nth) {
            i0 = nth - 1;
            frac = 1.0;
        }
        const double row0 = sample_row(i0, L.p);
        // wrap at the top row: value(pi, p) = value(0, -p)
        const double row1 =
            (i0 + 1 < nth) ? sample_row(i0 + 1, L.p) : sample_row(0, -L.p);
        return (1.0 - frac) * row0 + frac * row1;
    };
}

double mean_line_value(const LineOracle& xf, const Eigen::Vector2d& x, double t, int n_dirs) {
    if (n_dirs < 4) throw std::invalid_argument("mean_line_value: n_dirs must be >= 4");
    if (t < 0.0) throw std::invalid_argument("mean_line_value: t must be >= 0");
    double sum = 0.0;
    for (int k = 0; k < n_dirs; ++k) {
        const double alpha = 2.0 * kPi * k / n_dirs;
        // theta^perp with (x,y)^perp = (y,-x)
        const Eigen::Vector2d perp(std::sin(alpha), -std::cos(alpha));
        const Eigen::Vector2d y = x + t * perp;
        sum += xf(LineR2::through(y, alpha));
    }
    return sum / n_dirs;
}

RadialProfile radial_profile(const LineOracle& xf, const Eigen::Vector2d& x, double t_max,
                             int grid, double grading, int n_dirs) {
    if (grid < 8) throw std::invalid_argument("radial_profile: grid must be >= 8");
    if (t_max <= 0.0) throw std::invalid_argument("radial_profile: t_max must be > 0");
    RadialProfile prof;
    prof.center = x;
    prof.ts.resize(grid + 1);
    prof.values.resize(grid + 1);
    for (int j = 0; j <= grid; ++j) {
        prof.ts[j] = t_max * std::pow(static_cast<double>(j) / grid, grading);
        prof.values[j] = mean_line_value(xf, x, prof.ts[j], n_dirs);
    }
    return prof;
}

double radial_inversion_integral(const std::vector<double>& ts, const std::vector<double>& fs,
                                 const std::function<double(double)>& denom,
                                 double* f2_at_zero) {
    const std::size_t n = ts.size();
    if (n < 8 || fs.size() != n)
        throw std::invalid_argument("radial_inversion_integral: need >= 8 samples");
    if (ts[0] != 0.0)
        throw std::invalid_argument("radial_inversion_integral: grid must start at 0");

    const double t_max = ts.back();

    // Even-extension fit F(t) ≈ F(0) + c2 t^2 + c4 t^4 over the first cells.
    const double tau = std::max(4.0 * ts[1], 0.02 * t_max);
    std::size_t j_tau = 1;
    while (j_tau + 4 < n && ts[j_tau + 1] <= tau) ++j_tau;
    double s22 = 0, s24 = 0, s44 = 0, b2 = 0, b4 = 0;
    for (std::size_t j = 1; j <= j_tau; ++j) {
        const double t2 = ts[j] * ts[j];
        const double t4 = t2 * t2;
        const double df = fs[j] - fs[0];
        s22 += t2 * t2;
        s24 += t2 * t4;
        s44 += t4 * t4;
        b2 += t2 * df;
        b4 += t4 * df;
    }
    double c2 = 0.0, c4 = 0.0;
    const double det = s22 * s44 - s24 * s24;
    if (std::abs(det) > 1e-300 && j_tau >= 3) {
        c2 = (b2 * s44 - b4 * s24) / det;
        c4 = (s22 * b4 - s24 * b2) / det;
    } else if (s22 > 0.0) {
        c2 = b2 / s22;
    }
    if (f2_at_zero) *f2_at_zero = 2.0 * c2;

    // [0, ts[j_tau]] via the fit: integrand (2 c2 t + 4 c4 t^3)/denom(t),
    // finite at 0 since denom'(0) = 1.  Composite Simpson.
    const double t_fit = ts[j_tau];
    double head = 0.0;
    {
        const int m = 32;  // subintervals, even
        auto g_fit = [&](double t) {
            if (t == 0.0) return 2.0 * c2;
            return (2.0 * c2 * t + 4.0 * c4 * t * t * t) / denom(t);
        };
        const double h = t_fit / m;
        double acc = g_fit(0.0) + g_fit(t_fit);
        for (int k = 1; k < m; ++k) acc += (k % 2 ? 4.0 : 2.0) * g_fit(k * h);
        head = acc * h / 3.0;
    }

    // trapezoid of F'(t)/denom(t) on [ts[j_tau], t_max], nonuniform central
    // differences for F'
    auto deriv = [&](std::size_t j) {
        if (j + 1 >= n) {  // one-sided at the right end
            const double h1 = ts[n - 2] - ts[n - 3];
            const double h2 = ts[n - 1] - ts[n - 2];
            return (fs[n - 3] * h2 / (h1 * (h1 + h2)) -
                    fs[n - 2] * (h1 + h2) / (h1 * h2) +
                    fs[n - 1] * (h1 + 2.0 * h2) / (h2 * (h1 + h2)));
        }
        const double h1 = ts[j] - ts[j - 1];
        const double h2 = ts[j + 1] - ts[j];
        return (-fs[j - 1] * h2 / (h1 * (h1 + h2)) + fs[j] * (h2 - h1) / (h1 * h2) +
                fs[j + 1] * h1 / (h2 * (h1 + h2)));
    };

    double tail = 0.0;
    double g_prev = deriv(j_tau) / denom(ts[j_tau]);
    for (std::size_t j = j_tau + 1; j < n; ++j) {
        const double g_cur = deriv(j) / denom(ts[j]);
        tail += 0.5 * (g_prev + g_cur) * (ts[j] - ts[j - 1]);
        g_prev = g_cur;
    }
    return head + tail;
}

double radon_invert(const LineOracle& xf, const Eigen::Vector2d& x, double t_max,
                    const RadonInvertOptions& opts, RadonInvertDiagnostics* diag) {
    const RadialProfile prof =
        radial_profile(xf, x, t_max, opts.grid, opts.grading, opts.n_dirs);
    const double tail = std::abs(prof.values.back());
    if (diag) {
        diag->tail_value = tail;
        diag->tail_ok = tail <= opts.tail_tol;
    }
    if (tail > opts.tail_tol && opts.strict_tail)
        throw std::domain_error("radon_invert: t_max too small, |F(t_max)| = " +
                                fmt_double(tail));
    double f2 = 0.0;
    const double integral =
        radial_inversion_integral(prof.ts, prof.values, [](double t) { return t; }, &f2);
    if (diag) diag->f2_at_zero = f2;
    if (!std::isfinite(integral))
        throw NumericError("radon_invert: non-finite inversion integral");
    return -integral / kPi;
}

SupportHarnessReport support_harness(const ScalarField2D& f, double R,
                                     const SupportHarnessOptions& opts) {
    SupportHarnessReport rep;

    for (int i = 0; i < opts.n_line_thetas; ++i) {
        const double theta = kPi * i / opts.n_line_thetas;
        for (int j = 1; j <= opts.n_line_offsets; ++j) {
            const double p = R * (1.0 + opts.offset_span * j / opts.n_line_offsets);
            for (double sign : {1.0, -1.0}) {
                const double v = std::abs(xray_line_integral(f, LineR2{theta, sign * p}));
                rep.max_outside_line_value = std::max(rep.max_outside_line_value, v);
                ++rep.lines_checked;
            }
        }
    }

    LineOracle oracle;
    if (f.descriptor) {
        oracle = radial_line_oracle(f.descriptor);
    } else {
        oracle = quadrature_line_oracle(f);
    }
    const double golden = kPi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < opts.n_recon_points; ++k) {
        const double r = R * (1.0 + (k + 0.5) / opts.n_recon_points);  // in (R, 2R]
        const double phi = golden * k;
        const Eigen::Vector2d x(r * std::cos(phi), r * std::sin(phi));
        const double t_max = x.norm() + R + 0.25;
        const double v = std::abs(radon_invert(oracle, x, t_max, opts.invert));
        rep.max_outside_reconstruction = std::max(rep.max_outside_reconstruction, v);
        ++rep.points_checked;
    }
    return rep;
}

namespace {
double cross2(const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}
}  // namespace

std::vector<Eigen::Vector2d> convex_hull(const std::vector<Eigen::Vector2d>& points) {
    if (points.empty()) throw std::invalid_argument("convex_hull: empty input");
    std::vector<Eigen::Vector2d> pts = points;
    std::sort(pts.begin(), pts.end(), [](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
        return a[0] != b[0] ? a[0] < b[0] : a[1] < b[1];
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
                              return a[0] == b[0] && a[1] == b[1];
                          }),
              pts.end());
    const std::size_t n = pts.size();
    if (n <= 2) return pts;

    std::vector<Eigen::Vector2d> hull(2 * n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {  // lower
        while (k >= 2 && cross2(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
        hull[k++] = pts[i];
    }
    const std::size_t lower = k + 1;
    for (std::size_t i = n - 1; i-- > 0;) {  // upper
        while (k >= lower && cross2(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);  // last point repeats the first
    return hull;
}

bool point_in_hull(const std::vector<Eigen::Vector2d>& hull, const Eigen::Vector2d& x,
                   double tol) {
    if (hull.empty()) return false;
    if (hull.size() == 1) return (x - hull[0]).norm() <= tol;
    if (hull.size() == 2) {
        const Eigen::Vector2d d = hull[1] - hull[0];
        const double len2 = d.squaredNorm();
        const double t = std::clamp((x - hull[0]).dot(d) / len2, 0.0, 1.0);
        return (x - (hull[0] + t * d)).norm() <= tol;
    }
    for (std::size_t i = 0; i < hull.size(); ++i) {
        const Eigen::Vector2d& a = hull[i];
        const Eigen::Vector2d& b = hull[(i + 1) % hull.size()];
        const double len = (b - a).norm();
        if (cross2(a, b, x) < -tol * len) return false;
    }
    return true;
}

void write_sinogram_csv(const std::filesystem::path& path, const Sinogram& sino,
                        const OutputMeta& meta) {
    OutputMeta m = meta;
    m.add("field_id", sino.field_id);
    m.add("quad_tol", sino.quad_tol);
    m.add("n_thetas", static_cast<std::int64_t>(sino.thetas.size()));
    m.add("n_offsets", static_cast<std::int64_t>(sino.offsets.size()));
    m.add("convention", "theta is the normal angle in [0,pi); orientation quotiented out");
    std::vector<std::vector<double>> rows;
    rows.reserve(sino.thetas.size() * sino.offsets.size());
    for (std::size_t i = 0; i < sino.thetas.size(); ++i)
        for (std::size_t j = 0; j < sino.offsets.size(); ++j)
            rows.push_back({sino.thetas[i], sino.offsets[j],
                            sino.values(static_cast<Eigen::Index>(i),
                                        static_cast<Eigen::Index>(j))});
    write_csv(path, m, "theta,p,value", rows);
}

Sinogram read_sinogram_csv(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    std::istringstream in(text);
    std::string line;
    std::vector<std::array<double, 3>> rows;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            if (line.rfind("theta,", 0) != 0)
                throw std::invalid_argument("sinogram CSV: missing theta,p,value header");
            header_seen = true;
            continue;
        }
        std::array<double, 3> row{};
        std::istringstream ls(line);
        std::string cell;
        for (int c = 0; c < 3; ++c) {
            if (!std::getline(ls, cell, ','))
                throw std::invalid_argument("sinogram CSV: short row");
            row[static_cast<std::size_t>(c)] = parse_double(cell);
        }
        rows.push_back(row);
    }
    Sinogram sino;
    for (const auto& r : rows) {
        if (sino.thetas.empty() || r[0] > sino.thetas.back()) sino.thetas.push_back(r[0]);
    }
    const std::size_t nth = sino.thetas.size();
    if (nth == 0 || rows.size() % nth != 0)
        throw std::invalid_argument("sinogram CSV: ragged theta blocks");
    const std::size_t np = rows.size() / nth;
    sino.offsets.resize(np);
    sino.values.resize(static_cast<Eigen::Index>(nth), static_cast<Eigen::Index>(np));
    for (std::size_t i = 0; i < nth; ++i)
        for (std::size_t j = 0; j < np; ++j) {
            const auto& r = rows[i * np + j];
            if (i == 0) sino.offsets[j] = r[1];
            sino.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r[2];
        }
    return sino;
}

}  // namespace nilray
