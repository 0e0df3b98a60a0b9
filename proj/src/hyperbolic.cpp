#include "nilray/hyperbolic.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "nilray/quadrature.hpp"

namespace nilray {

namespace {
constexpr double kPi = std::numbers::pi;

// Mobius isometry taking 0 to m
std::complex<double> mobius_to(std::complex<double> m, std::complex<double> z) {
    return (z + m) / (1.0 + std::conj(m) * z);
}
}  // namespace

double h2_distance(std::complex<double> a, std::complex<double> b) {
    const double q = std::abs((a - b) / (1.0 - std::conj(b) * a));
    return 2.0 * std::atanh(std::min(q, 1.0 - 1e-17));
}

std::complex<double> GeodesicH2::at(double t) const {
    // the diameter s -> tanh(s/2) e^{i dir} is unit speed; translate by base
    const std::complex<double> z = std::tanh(0.5 * t) * std::exp(std::complex<double>(0, dir));
    return mobius_to(base, z);
}

GeodesicH2 GeodesicH2::reversed() const { return GeodesicH2{base, dir + kPi}; }

GeodesicH2 h2_geodesic_at_distance(std::complex<double> x, double t, double alpha) {
    const std::complex<double> y0 =
        std::tanh(0.5 * t) * std::exp(std::complex<double>(0, alpha));
    GeodesicH2 g;
    g.base = mobius_to(x, y0);
    // conformal pushforward rotates directions by arg T'(y0), with
    // T'(z) = (1-|x|^2)/(1 + conj(x) z)^2
    g.dir = alpha + 0.5 * kPi - 2.0 * std::arg(1.0 + std::conj(x) * y0);
    return g;
}

double h2_xray_forward(const ScalarFieldH2& f, const GeodesicH2& g, double quad_tol) {
    const double reach = f.support_radius + h2_distance(g.base, f.center);
    return integrate_gk15([&](double t) { return f.eval(g.at(t)); }, -reach, reach,
                          {quad_tol, 8000});
}

H2Oracle h2_quadrature_oracle(const ScalarFieldH2& f, double quad_tol) {
    return [f, quad_tol](const GeodesicH2& g) { return h2_xray_forward(f, g, quad_tol); };
}

double h2_mean_value(const H2Oracle& xf, std::complex<double> x, double t, int n_dirs) {
    if (n_dirs < 4) throw std::invalid_argument("h2_mean_value: n_dirs must be >= 4");
    if (t < 0.0) throw std::invalid_argument("h2_mean_value: t must be >= 0");
    double sum = 0.0;
    for (int k = 0; k < n_dirs; ++k) {
        const double alpha = 2.0 * kPi * k / n_dirs;
        sum += xf(h2_geodesic_at_distance(x, t, alpha));
    }
    return sum / n_dirs;
}

double h2_invert(const H2Oracle& xf, std::complex<double> x, double t_max,
                 const RadonInvertOptions& opts) {
    if (opts.grid < 8) throw std::invalid_argument("h2_invert: grid must be >= 8");
    std::vector<double> ts(opts.grid + 1), fs(opts.grid + 1);
    for (int j = 0; j <= opts.grid; ++j) {
        ts[j] = t_max * std::pow(static_cast<double>(j) / opts.grid, opts.grading);
        fs[j] = h2_mean_value(xf, x, ts[j], opts.n_dirs);
    }
    if (std::abs(fs.back()) > opts.tail_tol && opts.strict_tail)
        throw std::domain_error("h2_invert: t_max too small");
    const double integral =
        radial_inversion_integral(ts, fs, [](double t) { return std::sinh(t); });
    return -integral / kPi;
}

}  // namespace nilray
