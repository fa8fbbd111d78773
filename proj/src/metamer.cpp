#include "hsdiff/metamer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/SVD>

#include "hsdiff/forward.hpp"

namespace hsdiff {

SensorProjector build_projector(const SpectralResponse& srf) {
    srf.validate();
    const int k = srf.bands();
    Eigen::MatrixXd q(k, 3);
    for (int b = 0; b < k; ++b)
        for (int c = 0; c < 3; ++c) q(b, c) = srf.at(b, c);

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(q, Eigen::ComputeFullU);
    const auto& sv = svd.singularValues();
    const double cond = sv(0) / sv(2);
    if (!(sv(2) > 0.0) || cond > 1e12)
        throw NumericalError("build_projector: Q is rank-deficient, condition number " +
                             std::to_string(cond));

    SensorProjector proj;
    proj.bands = k;
    proj.cond = cond;
    const Eigen::MatrixXd u3 = svd.matrixU().leftCols(3);
    proj.r = u3 * u3.transpose();
    proj.null_basis = svd.matrixU().rightCols(k - 3);
    return proj;
}

BlackDecomposition black_decompose(const Eigen::VectorXd& spectrum, const SensorProjector& proj) {
    if (spectrum.size() != proj.bands)
        throw ShapeError("black_decompose: spectrum length " + std::to_string(spectrum.size()) +
                         " != K = " + std::to_string(proj.bands));
    BlackDecomposition d;
    d.fundamental = proj.r * spectrum;
    d.black = spectrum - d.fundamental;
    return d;
}

std::vector<double> draw_class_alphas(int n_classes, std::uint64_t seed) {
    std::vector<double> alphas(n_classes);
    for (int c = 0; c < n_classes; ++c) {
        Rng r(derive_seed(seed, static_cast<std::uint64_t>(c)));
        alphas[c] = r.uniform(-1.0, 2.0);
    }
    return alphas;
}

HSICube black_metamer_cube_with_alphas(const HSICube& cube, const LabelMap& labels,
                                       const SensorProjector& proj,
                                       const std::vector<double>& alphas) {
    if (labels.rows != cube.rows || labels.cols != cube.cols)
        throw ShapeError("black_metamer_cube: label map does not match the cube spatial shape");
    if (cube.bands() != proj.bands)
        throw ShapeError("black_metamer_cube: cube bands != projector bands");
    if (cube.domain != Domain::Reflectance)
        throw DomainError("black_metamer_cube: expected a reflectance-domain cube");
    const int n_classes = labels.num_classes();
    if (static_cast<int>(alphas.size()) < n_classes)
        throw DataError("black_metamer_cube: fewer alphas than label classes");

    const int k = cube.bands();
    const std::size_t npix = static_cast<std::size_t>(cube.rows) * cube.cols;
    HSICube out(cube.rows, cube.cols, cube.grid, cube.domain);
#pragma omp parallel for schedule(static)
    for (long long p = 0; p < static_cast<long long>(npix); ++p) {
        Eigen::VectorXd s(k);
        for (int b = 0; b < k; ++b) s(b) = cube.data[static_cast<std::size_t>(b) * npix + p];
        const double alpha = alphas[labels.cls[p] - 1];
        Eigen::VectorXd s0 = proj.r * s;
        Eigen::VectorXd sp = s0 + alpha * (s - s0);
        for (int b = 0; b < k; ++b)
            out.data[static_cast<std::size_t>(b) * npix + p] = std::clamp(sp(b), 0.0, 1.0);
    }
    return out;
}

HSICube black_metamer_cube(const HSICube& cube, const LabelMap& labels,
                           const SensorProjector& proj, std::uint64_t seed) {
    const int n_classes = labels.num_classes();
    return black_metamer_cube_with_alphas(cube, labels, proj, draw_class_alphas(n_classes, seed));
}

Eigen::MatrixXd pu_spline_matrix(const std::vector<double>& u, int m_funcs) {
    const int p = 2;  // quadratic
    const int m = m_funcs;
    if (m < 4)
        throw ConfigError("pu basis needs M >= 4, got " + std::to_string(m));
    // clamped uniform knot vector on [0,1]: p+1 repeats at both ends
    std::vector<double> kn(m + p + 1);
    for (int i = 0; i <= p; ++i) {
        kn[i] = 0.0;
        kn[m + p - i] = 1.0;
    }
    for (int i = 1; i < m - p; ++i) kn[p + i] = static_cast<double>(i) / (m - p);

    Eigen::MatrixXd out(static_cast<int>(u.size()), m);
    std::vector<double> n0(kn.size() - 1), n1(kn.size() - 1);
    for (std::size_t row = 0; row < u.size(); ++row) {
        double x = std::clamp(u[row], 0.0, 1.0);
        if (x >= 1.0) x = 1.0 - 1e-13;  // right-continuous at the end knot
        for (std::size_t i = 0; i + 1 < kn.size(); ++i)
            n0[i] = (kn[i] <= x && x < kn[i + 1]) ? 1.0 : 0.0;
        for (int d = 1; d <= p; ++d) {
            for (std::size_t i = 0; i + d + 1 < kn.size(); ++i) {
                double a = 0.0, b = 0.0;
                if (kn[i + d] > kn[i]) a = (x - kn[i]) / (kn[i + d] - kn[i]) * n0[i];
                if (kn[i + d + 1] > kn[i + 1])
                    b = (kn[i + d + 1] - x) / (kn[i + d + 1] - kn[i + 1]) * n0[i + 1];
                n1[i] = a + b;
            }
            std::swap(n0, n1);
        }
        for (int c = 0; c < m; ++c) out(static_cast<int>(row), c) = n0[c];
    }
    return out;
}

PUBasis build_pu_basis(const WavelengthGrid& grid, int m_funcs,
                       const std::vector<double>& illuminant, const SpectralResponse& srf) {
    grid.validate();
    srf.validate();
    if (srf.grid.nm != grid.nm)
        throw ShapeError("build_pu_basis: SRF grid does not match");
    const int k = grid.bands();
    if (static_cast<int>(illuminant.size()) != k)
        throw ShapeError("build_pu_basis: illuminant length != K");
    for (double v : illuminant)
        if (!(v > 0.0))
            throw ConfigError("build_pu_basis: illuminant must be strictly positive");

    PUBasis pu;
    pu.grid = grid;
    pu.m_funcs = m_funcs;
    std::vector<double> u(k);
    for (int b = 0; b < k; ++b) u[b] = (grid.nm[b] - grid.nm.front()) / grid.span();
    pu.basis = pu_spline_matrix(u, m_funcs);

    pu.illuminant = Eigen::Map<const Eigen::VectorXd>(illuminant.data(), k);
    pu.lit_basis = pu.illuminant.asDiagonal() * pu.basis;

    Eigen::MatrixXd q(k, 3);
    for (int b = 0; b < k; ++b)
        for (int c = 0; c < 3; ++c) q(b, c) = srf.at(b, c);
    pu.rgb = q.transpose() * pu.lit_basis;                   // 3 x M
    pu.lum = pu.rgb.colwise().sum().transpose();             // S_m
    for (int m = 0; m < m_funcs; ++m)
        if (!(pu.lum(m) > 0.0))
            throw ConfigError("build_pu_basis: basis function " + std::to_string(m) +
                              " has nonpositive camera luminance (degenerate SRF/illuminant)");
    pu.ring_r = pu.rgb.row(0).transpose().cwiseQuotient(pu.lum);
    pu.ring_g = pu.rgb.row(1).transpose().cwiseQuotient(pu.lum);

    for (int i = 0; i < m_funcs; ++i)
        for (int j = i + 1; j < m_funcs; ++j)
            for (int l = j + 1; l < m_funcs; ++l) {
                Eigen::Matrix3d t;
                t << 1.0, 1.0, 1.0,
                     pu.ring_r(i), pu.ring_r(j), pu.ring_r(l),
                     pu.ring_g(i), pu.ring_g(j), pu.ring_g(l);
                if (std::abs(t.determinant()) > 1e-12)
                    pu.triangles.push_back({{i, j, l}, t.inverse()});
            }
    if (pu.triangles.empty())
        throw ConfigError("build_pu_basis: ring chromaticities are degenerate (no triangles)");
    return pu;
}

namespace {

Eigen::Vector3d chroma_embedding(const std::array<double, 3>& rgb) {
    const double s = rgb[0] + rgb[1] + rgb[2];
    if (!(s > 0.0))
        throw DomainError("pu metamer: target RGB has nonpositive sum " + std::to_string(s));
    return Eigen::Vector3d(1.0, rgb[0] / s, rgb[1] / s);
}

// columns (1, r_f, g_f) of the free set
Eigen::MatrixXd free_embedding(const PUBasis& pu, const std::vector<int>& free_set) {
    Eigen::MatrixXd f(3, static_cast<int>(free_set.size()));
    for (std::size_t i = 0; i < free_set.size(); ++i) {
        f(0, static_cast<int>(i)) = 1.0;
        f(1, static_cast<int>(i)) = pu.ring_r(free_set[i]);
        f(2, static_cast<int>(i)) = pu.ring_g(free_set[i]);
    }
    return f;
}

std::vector<int> free_set_of(const PUBasis& pu, const std::array<int, 3>& tri) {
    std::vector<int> f;
    f.reserve(pu.m_funcs - 3);
    for (int m = 0; m < pu.m_funcs; ++m)
        if (m != tri[0] && m != tri[1] && m != tri[2]) f.push_back(m);
    return f;
}

Eigen::VectorXd assemble_full(const PUBasis& pu, const std::array<int, 3>& tri,
                              const Eigen::Vector3d& tri_coords, const std::vector<int>& free_set,
                              const Eigen::VectorXd& free_coords) {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(pu.m_funcs);
    for (int i = 0; i < 3; ++i) a(tri[i]) = tri_coords(i);
    for (std::size_t i = 0; i < free_set.size(); ++i) a(free_set[i]) = free_coords(static_cast<int>(i));
    return a;
}

} // namespace

std::vector<TriangleMatch> containing_triangles(const PUBasis& basis,
                                                const std::array<double, 3>& rgb) {
    const Eigen::Vector3d xi = chroma_embedding(rgb);
    std::vector<TriangleMatch> out;
    for (std::size_t t = 0; t < basis.triangles.size(); ++t) {
        Eigen::Vector3d a = basis.triangles[t].inv * xi;
        if (a.minCoeff() >= -1e-12) out.push_back({static_cast<int>(t), a});
    }
    if (out.empty())
        throw GamutError("pu metamer: target chromaticity outside the ring polygon");
    return out;
}

PuWeights pu_weights(const PUBasis& basis, const std::array<double, 3>& rgb, int tri_index,
                     const Eigen::Vector3d& bary, const Eigen::VectorXd& free_coords) {
    const auto& tri = basis.triangles.at(tri_index);
    const std::vector<int> fset = free_set_of(basis, tri.v);
    if (free_coords.size() != static_cast<int>(fset.size()))
        throw ShapeError("pu_weights: free coordinate count != M-3");
    for (int i = 0; i < free_coords.size(); ++i)
        if (free_coords(i) < 0.0)
            throw FeasibilityError("pu_weights: free coordinate " + std::to_string(i) +
                                   " is negative (" + std::to_string(free_coords(i)) + ")");

    const Eigen::MatrixXd geom = tri.inv * free_embedding(basis, fset);  // 3 x (M-3)
    const Eigen::Vector3d tri_coords = bary - geom * free_coords;
    for (int i = 0; i < 3; ++i)
        if (tri_coords(i) < -1e-12)
            throw FeasibilityError("pu_weights: triangle coordinate " + std::to_string(i) +
                                   " driven negative (" + std::to_string(tri_coords(i)) +
                                   ") by the free coordinates");

    PuWeights out;
    out.a = assemble_full(basis, tri.v, tri_coords, fset, free_coords);
    const double s = rgb[0] + rgb[1] + rgb[2];
    out.w = s * out.a.cwiseQuotient(basis.lum);
    return out;
}

namespace {

// Cyclic projection onto {E a = xi} ∩ {a >= 0} ∩ {G a <= 1}; finds a
// feasible generalized-barycentric vector when the per-triangle sampler
// cannot. Returns false if the residual never settles.
bool project_feasible(const PUBasis& pu, const Eigen::MatrixXd& e_mat,
                      const Eigen::Matrix3d& eet_inv, const Eigen::MatrixXd& g_mat,
                      const Eigen::Vector3d& xi, Eigen::VectorXd& a) {
    const int iters = 600;
    for (int it = 0; it < iters; ++it) {
        a -= e_mat.transpose() * (eet_inv * (e_mat * a - xi));
        a = a.cwiseMax(0.0);
        Eigen::VectorXd viol = g_mat * a - Eigen::VectorXd::Ones(g_mat.rows());
        int worst = 0;
        const double v = viol.maxCoeff(&worst);
        if (v > 1e-12) {
            const Eigen::VectorXd g = g_mat.row(worst).transpose();
            a -= (v / g.squaredNorm()) * g;
        } else if ((e_mat * a - xi).cwiseAbs().maxCoeff() < 1e-12 && a.minCoeff() > -1e-13) {
            break;
        }
    }
    a -= e_mat.transpose() * (eet_inv * (e_mat * a - xi));  // exact chromaticity last
    return (g_mat * a).maxCoeff() <= 1.0 + 1e-9 && a.minCoeff() >= -1e-9;
}

} // namespace

std::vector<double> pu_metamer_pixel(const PUBasis& basis, const std::array<double, 3>& rgb,
                                     Rng& rng) {
    const Eigen::Vector3d xi = chroma_embedding(rgb);
    const double s = rgb[0] + rgb[1] + rgb[2];
    const auto matches = containing_triangles(basis, rgb);
    const int m = basis.m_funcs;

    // rows of (S / S_m) * lit_basis bound the synthesized spectrum by 1
    Eigen::MatrixXd g_mat = basis.lit_basis;
    for (int c = 0; c < m; ++c) g_mat.col(c) *= s / basis.lum(c);

    const int tri_tries = std::min<int>(4, static_cast<int>(matches.size()));
    const int draw_tries = 64 / tri_tries;
    std::vector<int> order(matches.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[rng.next_u64() % i]);

    Eigen::VectorXd a;
    bool found = false;
    for (int tt = 0; tt < tri_tries && !found; ++tt) {
        const auto& match = matches[order[tt]];
        const auto& tri = basis.triangles[match.tri_index];
        const std::vector<int> fset = free_set_of(basis, tri.v);
        const Eigen::MatrixXd geom = tri.inv * free_embedding(basis, fset);
        const int nf = static_cast<int>(fset.size());

        // per-coordinate caps: nonnegativity of the triangle part, unit mass,
        // and the no-overshoot luminance bound on the free vertex itself
        Eigen::VectorXd ub(nf);
        for (int f = 0; f < nf; ++f) {
            double u = std::min(1.0, basis.lum(fset[f]) / s);
            for (int rrow = 0; rrow < 3; ++rrow)
                if (geom(rrow, f) > 1e-14) u = std::min(u, match.bary(rrow) / geom(rrow, f));
            ub(f) = std::max(0.0, u);
        }

        for (int dt = 0; dt < draw_tries; ++dt) {
            Eigen::VectorXd af(nf);
            for (int f = 0; f < nf; ++f) af(f) = rng.uniform(0.0, 0.8 * ub(f));
            const Eigen::Vector3d tc = match.bary - geom * af;
            if (tc.minCoeff() < 0.0) continue;
            Eigen::VectorXd cand = assemble_full(basis, tri.v, tc, fset, af);
            if ((g_mat * cand).maxCoeff() <= 1.0 + 1e-12) {
                a = cand;
                found = true;
                break;
            }
        }
    }

    bool repaired = false;
    if (!found) {
        // rejection budget exhausted: repair a jittered triangle start by
        // cyclic projection onto the full feasible polytope
        Eigen::MatrixXd e_mat(3, m);
        for (int c = 0; c < m; ++c) {
            e_mat(0, c) = 1.0;
            e_mat(1, c) = basis.ring_r(c);
            e_mat(2, c) = basis.ring_g(c);
        }
        const Eigen::Matrix3d eet_inv = (e_mat * e_mat.transpose()).inverse();
        const auto& match = matches[order[0]];
        const auto& tri = basis.triangles[match.tri_index];
        a = Eigen::VectorXd::Zero(m);
        for (int i = 0; i < 3; ++i) a(tri.v[i]) = match.bary(i);
        for (int c = 0; c < m; ++c) a(c) += 0.02 * rng.uniform();
        repaired = project_feasible(basis, e_mat, eet_inv, g_mat, xi, a);
        if (!repaired) {
            // fall back to the bare triangle coordinates (a_F = 0), accept clipping
            a = Eigen::VectorXd::Zero(m);
            for (int i = 0; i < 3; ++i) a(tri.v[i]) = match.bary(i);
        }
    }

    const Eigen::VectorXd w = s * a.cwiseQuotient(basis.lum);
    Eigen::VectorXd spec = basis.lit_basis * w;
    std::vector<double> out(basis.grid.bands());
    for (int b = 0; b < basis.grid.bands(); ++b) out[b] = std::clamp(spec(b), 0.0, 1.0);
    return out;
}

PuCubeResult pu_metamer_cube(const HSICube& cube, const PUBasis& basis,
                             const SpectralResponse& srf, std::uint64_t seed) {
    if (cube.domain != Domain::Reflectance)
        throw DomainError("pu_metamer_cube: expected a reflectance-domain cube");
    if (cube.grid.nm != basis.grid.nm)
        throw ShapeError("pu_metamer_cube: cube grid != basis grid");
    const RGBImage rgb = apply_srf(cube, srf);
    const int k = cube.bands();
    const std::size_t npix = static_cast<std::size_t>(cube.rows) * cube.cols;

    PuCubeResult res;
    res.cube = HSICube(cube.rows, cube.cols, cube.grid, cube.domain);
    long oog = 0;
#pragma omp parallel for schedule(dynamic, 64) reduction(+ : oog)
    for (long long p = 0; p < static_cast<long long>(npix); ++p) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(p)));
        std::array<double, 3> t{rgb.data[p * 3 + 0], rgb.data[p * 3 + 1], rgb.data[p * 3 + 2]};
        std::vector<double> spec;
        try {
            spec = pu_metamer_pixel(basis, t, rng);
        } catch (const Error&) {
            ++oog;  // out of gamut or degenerate target: pass through unchanged
            for (int b = 0; b < k; ++b)
                res.cube.data[static_cast<std::size_t>(b) * npix + p] =
                    cube.data[static_cast<std::size_t>(b) * npix + p];
            continue;
        }
        for (int b = 0; b < k; ++b)
            res.cube.data[static_cast<std::size_t>(b) * npix + p] = spec[b];
    }
    res.out_of_gamut = oog;
    return res;
}

} // namespace hsdiff
