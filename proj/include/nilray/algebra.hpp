#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace nilray {

// Coefficient vector of n = h ⊕ z over the declared orthonormal bases.
// z is always a coefficient vector, never a matrix; the duality
// ⟨[h,k], z⟩ = ⟨zh, k⟩ is a definition, not a solved equation.
struct AlgebraVector {
    Eigen::VectorXd z;
    Eigen::VectorXd h;

    AlgebraVector() = default;
    AlgebraVector(Eigen::VectorXd z_, Eigen::VectorXd h_)
        : z(std::move(z_)), h(std::move(h_)) {}

    static AlgebraVector zero(int dim_z, int dim_h) {
        return {Eigen::VectorXd::Zero(dim_z), Eigen::VectorXd::Zero(dim_h)};
    }

    double dot(const AlgebraVector& o) const { return z.dot(o.z) + h.dot(o.h); }
    double squared_norm() const { return z.squaredNorm() + h.squaredNorm(); }
    double norm() const { return std::sqrt(squared_norm()); }

    AlgebraVector operator+(const AlgebraVector& o) const { return {z + o.z, h + o.h}; }
    AlgebraVector operator-(const AlgebraVector& o) const { return {z - o.z, h - o.h}; }
    AlgebraVector operator*(double s) const { return {z * s, h * s}; }
    AlgebraVector operator/(double s) const { return {z / s, h / s}; }
};

inline AlgebraVector operator*(double s, const AlgebraVector& v) { return v * s; }

// A group element in exponential coordinates.  Ex and Log are the identity
// on coordinates (the global chart), so a point is just its algebra vector.
struct GroupPoint {
    AlgebraVector coords;

    GroupPoint() = default;
    explicit GroupPoint(AlgebraVector c) : coords(std::move(c)) {}

    static GroupPoint identity(int dim_z, int dim_h) {
        return GroupPoint(AlgebraVector::zero(dim_z, dim_h));
    }
};

// Metric 2-step nilpotent Lie algebra n = h ⊕ z, z central, with the bracket
// given through skew J-maps: [h,k]_a = ⟨J_a h, k⟩ over an orthonormal basis
// of z.  Immutable after construction; all operations on it are pure.
class StepTwoAlgebra {
public:
    StepTwoAlgebra(int dim_h, std::vector<Eigen::MatrixXd> j_basis,
                   std::vector<std::string> labels = {});

    int dim_h() const { return dim_h_; }
    int dim_z() const { return static_cast<int>(j_.size()); }
    int dim_n() const { return dim_h_ + dim_z(); }
    bool abelian() const { return j_.empty(); }

    const Eigen::MatrixXd& j_basis(int a) const { return j_[a]; }
    const std::vector<std::string>& labels() const { return labels_; }

    // sqrt(sum of squared operator norms of the J basis); with it,
    // ‖[h,k]‖ ≤ bracket_bound() · ‖h‖ ‖k‖.
    double bracket_bound() const { return bracket_bound_; }

    AlgebraVector zero_vector() const { return AlgebraVector::zero(dim_z(), dim_h_); }
    GroupPoint identity() const { return GroupPoint::identity(dim_z(), dim_h_); }

private:
    int dim_h_;
    std::vector<Eigen::MatrixXd> j_;
    std::vector<std::string> labels_;
    double bracket_bound_ = 0.0;
};

// [h,k] as a z coefficient vector; bilinear and antisymmetric.
Eigen::VectorXd bracket(const StepTwoAlgebra& a, const Eigen::VectorXd& h,
                        const Eigen::VectorXd& k);

// Σ_a z_a J_a, the skew action of a central vector on h.
Eigen::MatrixXd j_action(const StepTwoAlgebra& a, const Eigen::VectorXd& z);

// 2-step BCH product in exponential coordinates:
// (z1,h1)(z2,h2) = (z1 + z2 + [h1,h2]/2, h1 + h2).
GroupPoint bch_multiply(const StepTwoAlgebra& a, const GroupPoint& p, const GroupPoint& q);

GroupPoint group_inverse(const StepTwoAlgebra& a, const GroupPoint& p);

// Differential of left translation by g (independent of the base point):
// dL_g(δz, δh) = (δz + [h_g, δh]/2, δh).
AlgebraVector left_translation_differential(const StepTwoAlgebra& a, const GroupPoint& g,
                                            const AlgebraVector& u);

// Left-invariant metric: pull both vectors back to the identity with
// dL_{p^{-1}} and take the standard dot product on z ⊕ h.
double metric_at(const StepTwoAlgebra& a, const GroupPoint& p, const AlgebraVector& u,
                 const AlgebraVector& v);

// N_q: h = C^q as R^{2q} (coordinates interleaved re/im), z the Lie algebra
// of the maximal torus of SU(q), orthonormalized under <A,B> = -Re tr(AB).
StepTwoAlgebra build_nq(int q);

// Abelian R^d (J = ∅).  Degenerate member of the family; geodesics are
// straight lines and every affine 2-plane is a flat.
StepTwoAlgebra build_abelian(int dim_h);

// Orthogonal splitting of h adapted to the skew matrix Z = j_action(z0):
// 2-planes on which Z rotates with speed lambda > 0, plus kernel blocks
// (paired into 2-planes, odd leftover as a line).  lambda is reported >= 0;
// the complex eigenvalues of Z are ±i·lambda on each plane.
struct SpectralBlock {
    double lambda = 0.0;
    Eigen::MatrixXd basis;         // dim_h x 1 or dim_h x 2, orthonormal columns
    double h0_component_sq = 0.0;  // squared norm of the h0 projection
};

struct SpectralData {
    std::vector<SpectralBlock> blocks;
    int dominant = -1;  // block with the largest h0 projection (lowest index wins ties)
    double dominant_sq = 0.0;
};

SpectralData spectral_decompose(const StepTwoAlgebra& a, const Eigen::VectorXd& z0,
                                const Eigen::VectorXd& h0);

// JSON document {dim_h, dim_z, J: [row-major matrices], labels?}.
std::string algebra_to_json(const StepTwoAlgebra& a);
StepTwoAlgebra algebra_from_json(const std::string& text);
void save_algebra(const StepTwoAlgebra& a, const std::filesystem::path& path);
StepTwoAlgebra load_algebra(const std::filesystem::path& path);

}  // namespace nilray
