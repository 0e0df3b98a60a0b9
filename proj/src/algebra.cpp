#include "nilray/algebra.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"
#include "nilray/errors.hpp"
#include "nilray/io.hpp"

namespace nilray {

namespace {

constexpr double kSkewTol = 1e-12;

void check_h_vector(const StepTwoAlgebra& a, const Eigen::VectorXd& v, const char* name) {
    if (v.size() != a.dim_h())
        throw std::invalid_argument(std::string(name) + ": expected an h-vector of length " +
                                    std::to_string(a.dim_h()));
}

void check_z_vector(const StepTwoAlgebra& a, const Eigen::VectorXd& v, const char* name) {
    if (v.size() != a.dim_z())
        throw std::invalid_argument(std::string(name) + ": expected a z-vector of length " +
                                    std::to_string(a.dim_z()));
}

void check_algebra_vector(const StepTwoAlgebra& a, const AlgebraVector& v, const char* name) {
    check_z_vector(a, v.z, name);
    check_h_vector(a, v.h, name);
}

double operator_norm(const Eigen::MatrixXd& m) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

}  // namespace

StepTwoAlgebra::StepTwoAlgebra(int dim_h, std::vector<Eigen::MatrixXd> j_basis,
                               std::vector<std::string> labels)
    : dim_h_(dim_h), j_(std::move(j_basis)), labels_(std::move(labels)) {
    if (dim_h_ < 1) throw std::invalid_argument("dim_h must be positive");
    double sq = 0.0;
    for (const auto& j : j_) {
        if (j.rows() != dim_h_ || j.cols() != dim_h_)
            throw std::invalid_argument("J map has wrong dimensions");
        const double skew = (j + j.transpose()).cwiseAbs().maxCoeff();
        if (skew > kSkewTol)
            throw std::invalid_argument("J map is not skew-symmetric (deviation " +
                                        fmt_double(skew) + ")");
        const double on = operator_norm(j);
        sq += on * on;
    }
    bracket_bound_ = std::sqrt(sq);

    // 2-step means z = [n,n]: the J maps must span dim_z independent
    // bracket directions.
    const int dz = static_cast<int>(j_.size());
    if (dz > 0) {
        const int pairs = dim_h_ * (dim_h_ - 1) / 2;
        Eigen::MatrixXd span(dz, pairs);
        for (int a = 0; a < dz; ++a) {
            int col = 0;
            for (int i = 0; i < dim_h_; ++i)
                for (int jj = i + 1; jj < dim_h_; ++jj) span(a, col++) = j_[a](jj, i);
        }
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(span);
        const auto& sv = svd.singularValues();
        const double thresh = 1e-10 * std::max(1.0, sv.size() ? sv(0) : 0.0);
        int rank = 0;
        for (int i = 0; i < sv.size(); ++i)
            if (sv(i) > thresh) ++rank;
        if (rank < dz)
            throw std::invalid_argument(
                "brackets do not span z (rank " + std::to_string(rank) + " < dim_z " +
                std::to_string(dz) + "); z = [n,n] fails");
    }
}

Eigen::VectorXd bracket(const StepTwoAlgebra& a, const Eigen::VectorXd& h,
                        const Eigen::VectorXd& k) {
    check_h_vector(a, h, "bracket(h)");
    check_h_vector(a, k, "bracket(k)");
    Eigen::VectorXd out(a.dim_z());
    for (int i = 0; i < a.dim_z(); ++i) out[i] = (a.j_basis(i) * h).dot(k);
    return out;
}

Eigen::MatrixXd j_action(const StepTwoAlgebra& a, const Eigen::VectorXd& z) {
    check_z_vector(a, z, "j_action(z)");
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(a.dim_h(), a.dim_h());
    for (int i = 0; i < a.dim_z(); ++i) m += z[i] * a.j_basis(i);
    return m;
}

GroupPoint bch_multiply(const StepTwoAlgebra& a, const GroupPoint& p, const GroupPoint& q) {
    check_algebra_vector(a, p.coords, "bch_multiply(p)");
    check_algebra_vector(a, q.coords, "bch_multiply(q)");
    AlgebraVector out;
    out.h = p.coords.h + q.coords.h;
    out.z = p.coords.z + q.coords.z + 0.5 * bracket(a, p.coords.h, q.coords.h);
    return GroupPoint(std::move(out));
}

GroupPoint group_inverse(const StepTwoAlgebra& a, const GroupPoint& p) {
    check_algebra_vector(a, p.coords, "group_inverse(p)");
    return GroupPoint(AlgebraVector{-p.coords.z, -p.coords.h});
}

AlgebraVector left_translation_differential(const StepTwoAlgebra& a, const GroupPoint& g,
                                            const AlgebraVector& u) {
    check_algebra_vector(a, g.coords, "left_translation_differential(g)");
    check_algebra_vector(a, u, "left_translation_differential(u)");
    return {u.z + 0.5 * bracket(a, g.coords.h, u.h), u.h};
}

double metric_at(const StepTwoAlgebra& a, const GroupPoint& p, const AlgebraVector& u,
                 const AlgebraVector& v) {
    check_algebra_vector(a, p.coords, "metric_at(p)");
    check_algebra_vector(a, u, "metric_at(u)");
    check_algebra_vector(a, v, "metric_at(v)");
    if (a.abelian()) return u.dot(v);
    // dL_{p^{-1}}(δz, δh) = (δz - [h_p, δh]/2, δh)
    const Eigen::VectorXd uz = u.z - 0.5 * bracket(a, p.coords.h, u.h);
    const Eigen::VectorXd vz = v.z - 0.5 * bracket(a, p.coords.h, v.h);
    return uz.dot(vz) + u.h.dot(v.h);
}

StepTwoAlgebra build_nq(int q) {
    if (q < 2) throw std::invalid_argument("build_nq: q must be >= 2");

    // Basis of the traceless diagonal imaginary matrices diag(i mu_1,...,i mu_q):
    // Gram-Schmidt of (1,-1,0,...), (0,1,-1,0,...), ... under the dot product
    // on the mu vectors, which equals <A,B> = -Re tr(AB) on the matrices.
    std::vector<Eigen::VectorXd> mus;
    for (int k = 0; k + 1 < q; ++k) {
        Eigen::VectorXd mu = Eigen::VectorXd::Zero(q);
        mu[k] = 1.0;
        mu[k + 1] = -1.0;
        for (const auto& prev : mus) mu -= prev.dot(mu) * prev;
        mu.normalize();
        mus.push_back(mu);
    }

    // Real 2q x 2q form: complex coordinate c occupies slots (2c, 2c+1) as
    // (re, im); multiplication by i·mu_c is the block [[0, -mu_c], [mu_c, 0]].
    std::vector<Eigen::MatrixXd> js;
    std::vector<std::string> labels;
    for (int a = 0; a + 1 < q; ++a) {
        Eigen::MatrixXd j = Eigen::MatrixXd::Zero(2 * q, 2 * q);
        for (int c = 0; c < q; ++c) {
            j(2 * c, 2 * c + 1) = -mus[a][c];
            j(2 * c + 1, 2 * c) = mus[a][c];
        }
        js.push_back(std::move(j));
        labels.push_back("t" + std::to_string(a + 1));
    }
    return StepTwoAlgebra(2 * q, std::move(js), std::move(labels));
}

StepTwoAlgebra build_abelian(int dim_h) { return StepTwoAlgebra(dim_h, {}, {}); }

SpectralData spectral_decompose(const StepTwoAlgebra& a, const Eigen::VectorXd& z0,
                                const Eigen::VectorXd& h0) {
    check_z_vector(a, z0, "spectral_decompose(z0)");
    check_h_vector(a, h0, "spectral_decompose(h0)");

    const int n = a.dim_h();
    SpectralData out;

    std::vector<Eigen::VectorXd> accepted;
    auto deflate = [&](Eigen::VectorXd v) {
        for (const auto& q : accepted) v -= q.dot(v) * q;
        return v;
    };

    std::vector<Eigen::VectorXd> kernel;
    if (a.abelian() || z0.isZero(0.0)) {
        for (int i = 0; i < n; ++i) kernel.push_back(Eigen::VectorXd::Unit(n, i));
    } else {
        const Eigen::MatrixXd Z = j_action(a, z0);
        const Eigen::MatrixXd S = Z.transpose() * Z;  // = -Z², symmetric PSD
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
        const auto& mu = es.eigenvalues();
        const double lam_max = std::sqrt(std::max(0.0, mu(n - 1)));
        const double lam_tol = 1e-10 * std::max(1.0, lam_max);

        for (int i = n - 1; i >= 0; --i) {  // largest eigenvalue first
            const double lam = std::sqrt(std::max(0.0, mu(i)));
            Eigen::VectorXd u = deflate(es.eigenvectors().col(i));
            const double un = u.norm();
            if (un < 0.5) continue;  // plane already covered by a partner vector
            u /= un;
            if (lam <= lam_tol) {
                kernel.push_back(u);
                accepted.push_back(u);
                continue;
            }
            // partner: Zu = lam v, Zv = -lam u
            Eigen::VectorXd v = deflate(Z * u / lam);
            v -= v.dot(u) * u;
            const double vn = v.norm();
            if (vn < 0.5)
                throw NumericError("spectral_decompose: degenerate rotation plane", vn);
            v /= vn;
            Eigen::MatrixXd basis(n, 2);
            basis.col(0) = u;
            basis.col(1) = v;
            out.blocks.push_back({lam, std::move(basis), 0.0});
            accepted.push_back(u);
            accepted.push_back(v);
        }
    }

    // Pair kernel lines into 2-planes; a leftover odd line stays 1-dimensional.
    for (std::size_t i = 0; i + 1 < kernel.size(); i += 2) {
        Eigen::MatrixXd basis(n, 2);
        basis.col(0) = kernel[i];
        basis.col(1) = kernel[i + 1];
        out.blocks.push_back({0.0, std::move(basis), 0.0});
    }
    if (kernel.size() % 2 == 1) {
        Eigen::MatrixXd basis(n, 1);
        basis.col(0) = kernel.back();
        out.blocks.push_back({0.0, std::move(basis), 0.0});
    }

    for (std::size_t b = 0; b < out.blocks.size(); ++b) {
        auto& blk = out.blocks[b];
        blk.h0_component_sq = (blk.basis.transpose() * h0).squaredNorm();
        if (blk.h0_component_sq > out.dominant_sq) {
            out.dominant_sq = blk.h0_component_sq;
            out.dominant = static_cast<int>(b);
        }
    }
    if (out.dominant < 0 && !out.blocks.empty()) out.dominant = 0;
    return out;
}

std::string algebra_to_json(const StepTwoAlgebra& a) {
    nlohmann::ordered_json doc;
    doc["dim_h"] = a.dim_h();
    doc["dim_z"] = a.dim_z();
    auto maps = nlohmann::ordered_json::array();
    for (int i = 0; i < a.dim_z(); ++i) {
        const auto& j = a.j_basis(i);
        auto rows = nlohmann::ordered_json::array();
        for (int r = 0; r < j.rows(); ++r)
            for (int c = 0; c < j.cols(); ++c) rows.push_back(j(r, c));
        maps.push_back(std::move(rows));
    }
    doc["J"] = std::move(maps);
    if (!a.labels().empty()) doc["labels"] = a.labels();
    doc["metric_note"] = "z basis orthonormal under <A,B> = -Re tr(AB)";
    return doc.dump(2) + "\n";
}

StepTwoAlgebra algebra_from_json(const std::string& text) {
    const auto doc = nlohmann::json::parse(text);
    const int dim_h = doc.at("dim_h").get<int>();
    const int dim_z = doc.at("dim_z").get<int>();
    std::vector<Eigen::MatrixXd> js;
    const auto& maps = doc.at("J");
    if (static_cast<int>(maps.size()) != dim_z)
        throw std::invalid_argument("algebra JSON: J list length does not match dim_z");
    for (const auto& entry : maps) {
        if (static_cast<int>(entry.size()) != dim_h * dim_h)
            throw std::invalid_argument("algebra JSON: J matrix has wrong size");
        Eigen::MatrixXd j(dim_h, dim_h);
        int idx = 0;
        for (int r = 0; r < dim_h; ++r)
            for (int c = 0; c < dim_h; ++c) j(r, c) = entry[idx++].get<double>();
        js.push_back(std::move(j));
    }
    std::vector<std::string> labels;
    if (doc.contains("labels")) labels = doc["labels"].get<std::vector<std::string>>();
    return StepTwoAlgebra(dim_h, std::move(js), std::move(labels));
}

void save_algebra(const StepTwoAlgebra& a, const std::filesystem::path& path) {
    write_text_file(path, algebra_to_json(a));
}

StepTwoAlgebra load_algebra(const std::filesystem::path& path) {
    return algebra_from_json(read_text_file(path));
}

}  // namespace nilray
