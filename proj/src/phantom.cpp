#include "nilray/phantom.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"
#include "nilray/quadrature.hpp"

namespace nilray {

double BumpSpec::value(double dist) const {
    if (dist >= radius) return 0.0;
    if (profile == "bump") {
        const double s = dist / radius;
        return amplitude * std::exp(1.0 - 1.0 / (1.0 - s * s));
    }
    if (profile == "trunc_gauss") {
        const double w = resolved_width();
        const double u = dist / w;
        return amplitude * std::exp(-u * u);
    }
    throw std::invalid_argument("unknown bump profile: " + profile);
}

double Phantom::eval(const Eigen::VectorXd& x) const {
    double v = 0.0;
    for (const auto& b : bumps) {
        if (x.size() != b.center.size())
            throw std::invalid_argument("phantom eval: dimension mismatch");
        v += b.value((x - b.center).norm());
    }
    return v;
}

Eigen::VectorXd Phantom::support_center() const {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(dim);
    if (bumps.empty()) return c;
    for (const auto& b : bumps) c += b.center;
    return c / static_cast<double>(bumps.size());
}

double Phantom::support_radius() const {
    const Eigen::VectorXd c = support_center();
    double r = 0.0;
    for (const auto& b : bumps) r = std::max(r, (b.center - c).norm() + b.radius);
    return r;
}

double Phantom::max_abs_estimate() const {
    double m = 0.0;
    for (const auto& b : bumps) m = std::max(m, std::abs(eval(b.center)));
    // probe along segments between bump centers, where sums can exceed
    // individual peaks
    for (std::size_t i = 0; i < bumps.size(); ++i)
        for (std::size_t j = i + 1; j < bumps.size(); ++j)
            for (int k = 1; k < 32; ++k) {
                const Eigen::VectorXd x =
                    bumps[i].center + (bumps[j].center - bumps[i].center) * (k / 32.0);
                m = std::max(m, std::abs(eval(x)));
            }
    return m;
}

Phantom random_phantom(Rng& rng, int dim, int n_bumps, double domain_radius,
                       const std::string& profile) {
    if (dim < 1) throw std::invalid_argument("random_phantom: dim must be >= 1");
    if (n_bumps < 0) throw std::invalid_argument("random_phantom: n_bumps must be >= 0");
    Phantom ph;
    ph.dim = dim;
    for (int i = 0; i < n_bumps; ++i) {
        BumpSpec b;
        b.center = rng.in_ball(dim, 0.6 * domain_radius);
        b.radius = rng.uniform(0.1, 0.3) * domain_radius;
        b.amplitude = rng.uniform(0.5, 1.5);
        b.profile = profile;
        ph.bumps.push_back(std::move(b));
    }
    return ph;
}

Phantom single_bump_phantom(int dim, double amplitude, double radius,
                            const std::string& profile) {
    Phantom ph;
    ph.dim = dim;
    BumpSpec b;
    b.center = Eigen::VectorXd::Zero(dim);
    b.amplitude = amplitude;
    b.radius = radius;
    b.profile = profile;
    ph.bumps.push_back(std::move(b));
    return ph;
}

std::string phantom_to_json(const Phantom& ph, const OutputMeta& meta) {
    nlohmann::ordered_json doc;
    doc["meta"]["config_hash"] = meta.config_hash;
    doc["meta"]["seed"] = meta.seed;
    for (const auto& [k, v] : meta.entries) doc["meta"][k] = v;
    doc["dim"] = ph.dim;
    auto arr = nlohmann::ordered_json::array();
    for (const auto& b : ph.bumps) {
        nlohmann::ordered_json e;
        e["center"] = std::vector<double>(b.center.data(), b.center.data() + b.center.size());
        e["amplitude"] = b.amplitude;
        e["radius"] = b.radius;
        e["profile"] = b.profile;
        if (b.width > 0.0) e["width"] = b.width;
        arr.push_back(std::move(e));
    }
    doc["bumps"] = std::move(arr);
    return doc.dump(2) + "\n";
}

Phantom phantom_from_json(const std::string& text) {
    const auto doc = nlohmann::json::parse(text);
    Phantom ph;
    ph.dim = doc.at("dim").get<int>();
    for (const auto& e : doc.at("bumps")) {
        BumpSpec b;
        const auto c = e.at("center").get<std::vector<double>>();
        if (static_cast<int>(c.size()) != ph.dim)
            throw std::invalid_argument("phantom JSON: center length != dim");
        b.center = Eigen::Map<const Eigen::VectorXd>(c.data(), ph.dim);
        b.amplitude = e.at("amplitude").get<double>();
        b.radius = e.at("radius").get<double>();
        b.profile = e.at("profile").get<std::string>();
        if (b.profile != "bump" && b.profile != "trunc_gauss")
            throw std::invalid_argument("phantom JSON: unknown profile " + b.profile);
        if (e.contains("width")) b.width = e["width"].get<double>();
        if (b.radius <= 0.0) throw std::invalid_argument("phantom JSON: radius must be > 0");
        ph.bumps.push_back(std::move(b));
    }
    return ph;
}

void save_phantom(const Phantom& ph, const std::filesystem::path& path,
                  const OutputMeta& meta) {
    write_text_file(path, phantom_to_json(ph, meta));
}

Phantom load_phantom(const std::filesystem::path& path) {
    return phantom_from_json(read_text_file(path));
}

ScalarField2D field_from_phantom(std::shared_ptr<const Phantom> ph) {
    if (!ph || ph->dim != 2)
        throw std::invalid_argument("field_from_phantom: need a 2-d phantom");
    ScalarField2D f;
    const Eigen::VectorXd c = ph->support_center();
    f.support_center = Eigen::Vector2d(c[0], c[1]);
    f.support_radius = ph->support_radius();
    f.descriptor = ph;
    f.eval = [ph](double x, double y) {
        Eigen::VectorXd v(2);
        v << x, y;
        return ph->eval(v);
    };
    return f;
}

LineOracle radial_line_oracle(std::shared_ptr<const Phantom> ph, int table_size) {
    if (!ph || ph->dim != 2)
        throw std::invalid_argument("radial_line_oracle: need a 2-d phantom");
    if (table_size < 16) throw std::invalid_argument("radial_line_oracle: table too small");

    // chord integral of one bump as a function of the line-center distance d:
    // I(d) = 2 ∫_0^sqrt(r^2-d^2) profile(sqrt(d^2 + s^2)) ds
    struct BumpTable {
        Eigen::Vector2d center;
        double radius;
        Eigen::VectorXd values;  // on d = radius * k / m
    };
    auto tables = std::make_shared<std::vector<BumpTable>>();
    for (const auto& b : ph->bumps) {
        BumpTable bt;
        bt.center = Eigen::Vector2d(b.center[0], b.center[1]);
        bt.radius = b.radius;
        bt.values.resize(table_size + 1);
        for (int k = 0; k <= table_size; ++k) {
            const double d = b.radius * k / table_size;
            const double half = std::sqrt(std::max(0.0, b.radius * b.radius - d * d));
            bt.values[k] =
                half == 0.0
                    ? 0.0
                    : 2.0 * integrate_gk15(
                                [&](double s) { return b.value(std::hypot(d, s)); }, 0.0,
                                half, {1e-12, 4000});
        }
        tables->push_back(std::move(bt));
    }

    const int m = table_size;
    return [tables, m](const LineR2& line) {
        const Eigen::Vector2d w = line.normal();
        double total = 0.0;
        for (const auto& bt : *tables) {
            const double d = std::abs(line.p - bt.center.dot(w));
            if (d >= bt.radius) continue;
            const double u = d / bt.radius * m;
            int i = std::clamp(static_cast<int>(std::floor(u)), 0, m - 1);
            const double s = u - i;
            const double q1 = bt.values[i];
            const double q2 = bt.values[i + 1];
            const double q0 = bt.values[std::max(0, i - 1)];
            const double q3 = bt.values[std::min(m, i + 2)];
            total += 0.5 * (2.0 * q1 + (-q0 + q2) * s +
                            (2.0 * q0 - 5.0 * q1 + 4.0 * q2 - q3) * s * s +
                            (-q0 + 3.0 * q1 - 3.0 * q2 + q3) * s * s * s);
        }
        return total;
    };
}

}  // namespace nilray
