#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nilray/radon2d.hpp"
#include "nilray/rng.hpp"

namespace nilray {

// dist/width = this at the cutoff keeps truncated-Gaussian tails below 1e-30
inline constexpr double kTruncGaussCut = 8.311297863380115;

// One radially symmetric bump.  profile "bump": A exp(1 - 1/(1 - s^2)) with
// s = dist/radius (smooth, exact compact support, value A at the center);
// profile "trunc_gauss": A exp(-(dist/width)^2) cut at dist = radius.
struct BumpSpec {
    Eigen::VectorXd center;
    double amplitude = 1.0;
    double radius = 1.0;
    std::string profile = "bump";
    double width = 0.0;  // trunc_gauss only; 0 means radius / kTruncGaussCut

    double value(double dist) const;
    double resolved_width() const { return width > 0.0 ? width : radius / kTruncGaussCut; }
};

struct Phantom {
    int dim = 2;
    std::vector<BumpSpec> bumps;

    double eval(const Eigen::VectorXd& x) const;
    // enclosing ball of the union of bump supports
    Eigen::VectorXd support_center() const;
    double support_radius() const;
    // max |f|, by center values and dense 1-d probing along bump axes
    double max_abs_estimate() const;
};

Phantom random_phantom(Rng& rng, int dim, int n_bumps, double domain_radius,
                       const std::string& profile = "bump");
Phantom single_bump_phantom(int dim, double amplitude, double radius,
                            const std::string& profile = "bump");

std::string phantom_to_json(const Phantom& ph, const OutputMeta& meta);
Phantom phantom_from_json(const std::string& text);
void save_phantom(const Phantom& ph, const std::filesystem::path& path,
                  const OutputMeta& meta);
Phantom load_phantom(const std::filesystem::path& path);

// 2-d field view of a phantom (dim must be 2); keeps the descriptor attached.
ScalarField2D field_from_phantom(std::shared_ptr<const Phantom> ph);

// Fast exact line oracle for a 2-d phantom: per bump, the chord integral is a
// function of the line's distance to the bump center alone; each such radial
// profile is tabulated once (adaptive quadrature) and interpolated.
LineOracle radial_line_oracle(std::shared_ptr<const Phantom> ph, int table_size = 4096);

}  // namespace nilray
