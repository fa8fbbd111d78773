#pragma once

#include <array>
#include <vector>

#include <Eigen/Dense>

#include "hsdiff/core.hpp"
#include "hsdiff/rng.hpp"

namespace hsdiff {

// Orthogonal projector R onto col(Q) plus an orthonormal basis of null(Q^T).
struct SensorProjector {
    int bands = 0;
    Eigen::MatrixXd r;           // K x K, symmetric, idempotent
    Eigen::MatrixXd null_basis;  // K x (K-3), orthonormal columns
    double cond = 0.0;           // sigma_1 / sigma_3 of Q
};

// R = Q (Q^T Q)^-1 Q^T via SVD; raises NumericalError naming the condition
// number when Q is rank-deficient.
SensorProjector build_projector(const SpectralResponse& srf);

struct BlackDecomposition {
    Eigen::VectorXd fundamental;  // S0 = R S
    Eigen::VectorXd black;        // Sb = (I - R) S, invisible to the sensor
};

BlackDecomposition black_decompose(const Eigen::VectorXd& spectrum, const SensorProjector& proj);

// One alpha per label class, U(-1, 2), stream-seeded so results do not
// depend on evaluation order.
std::vector<double> draw_class_alphas(int n_classes, std::uint64_t seed);

// S'(p) = S0(p) + alpha_{c(p)} Sb(p), clipped to [0,1].
HSICube black_metamer_cube(const HSICube& cube, const LabelMap& labels,
                           const SensorProjector& proj, std::uint64_t seed);
HSICube black_metamer_cube_with_alphas(const HSICube& cube, const LabelMap& labels,
                                       const SensorProjector& proj,
                                       const std::vector<double>& alphas);

// Same, without the final [0,1] clip; the camera RGB of the result equals
// the input RGB exactly up to round-off.
HSICube black_metamer_cube_unclipped(const HSICube& cube, const LabelMap& labels,
                                     const SensorProjector& proj,
                                     const std::vector<double>& alphas);

// Partition-of-unity spectral basis (quadratic B-splines on uniform knots)
// with per-function camera RGB, luminance sums, ring chromaticities and the
// pre-enumerated triangle list.
struct PUBasis {
    WavelengthGrid grid;
    int m_funcs = 0;
    Eigen::MatrixXd basis;       // K x M, rows sum to 1
    Eigen::MatrixXd lit_basis;   // diag(l) * basis
    Eigen::VectorXd illuminant;  // K
    Eigen::MatrixXd rgb;         // 3 x M, b^(m) = Q^T lit_basis(:,m)
    Eigen::VectorXd lum;         // M, S_m = 1^T b^(m)
    Eigen::VectorXd ring_r;      // M
    Eigen::VectorXd ring_g;      // M

    struct Triangle {
        std::array<int, 3> v;
        Eigen::Matrix3d inv;  // T^-1 for T = [1 1 1; r_i r_j r_k; g_i g_j g_k]
    };
    std::vector<Triangle> triangles;
};

PUBasis build_pu_basis(const WavelengthGrid& grid, int m_funcs,
                       const std::vector<double>& illuminant, const SpectralResponse& srf);

// Quadratic B-spline partition of unity evaluated on [0,1]; exposed for the
// basis tests.
Eigen::MatrixXd pu_spline_matrix(const std::vector<double>& u, int m_funcs);

struct TriangleMatch {
    int tri_index;
    Eigen::Vector3d bary;  // a_T, nonnegative, sums to 1
};

// Every triangle whose barycentric coordinates of (1, r, g) are >= -1e-12.
// S <= 0 raises DomainError; an empty result raises GamutError.
std::vector<TriangleMatch> containing_triangles(const PUBasis& basis,
                                                const std::array<double, 3>& rgb);

struct PuWeights {
    Eigen::VectorXd a;  // generalized barycentric coordinates, length M
    Eigen::VectorXd w;  // mixing weights, length M
};

// Assembles a from (a_T, a_F) for a fixed triangle and rescales to the
// target luminance: w = S * (a / S_byL). Infeasible a_F raises
// FeasibilityError naming the violated bound.
PuWeights pu_weights(const PUBasis& basis, const std::array<double, 3>& rgb, int tri_index,
                     const Eigen::Vector3d& bary, const Eigen::VectorXd& free_coords);

// Draws one PU metamer for the target camera RGB: random containing
// triangle, rejection-sampled free coordinates bounded so the synthesized
// spectrum stays in [0,1], projection repair for the rare infeasible draws,
// final clip to [0,1].
std::vector<double> pu_metamer_pixel(const PUBasis& basis, const std::array<double, 3>& rgb,
                                     Rng& rng);

// Pre-clip spectrum; its camera RGB reproduces the target within 1e-9.
std::vector<double> pu_metamer_pixel_unclipped(const PUBasis& basis,
                                               const std::array<double, 3>& rgb, Rng& rng);

struct PuCubeResult {
    HSICube cube;
    long out_of_gamut = 0;            // pixels passed through unchanged
    double preclip_rgb_psnr_db = 0.0; // vs the target RGB, peak 1.0
};

// Per-pixel pu_metamer_pixel applied to apply_srf(cube, srf); per-pixel RNG
// streams derive from (seed, pixel index) so the result is independent of
// scheduling.
PuCubeResult pu_metamer_cube(const HSICube& cube, const PUBasis& basis,
                             const SpectralResponse& srf, std::uint64_t seed);

} // namespace hsdiff
