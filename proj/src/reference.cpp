#include "hsdiff/reference.hpp"

#include <cmath>
#include <limits>

namespace hsdiff::ref {

RGBImage apply_srf(const HSICube& cube, const SpectralResponse& srf) {
    RGBImage out(cube.rows, cube.cols, 3);
    for (int i = 0; i < cube.rows; ++i)
        for (int j = 0; j < cube.cols; ++j)
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int b = 0; b < cube.bands(); ++b)
                    acc += cube.at(i, j, b) * srf.at(b, c);
                out.at(i, j, c) = acc;
            }
    return out;
}

HSICube convolve_per_band(const HSICube& cube, const PSFStack& psf) {
    const int p = psf.size;
    const int r = (p - 1) / 2;
    HSICube out(cube.rows, cube.cols, cube.grid, cube.domain);
    for (int b = 0; b < cube.bands(); ++b)
        for (int i = 0; i < cube.rows; ++i)
            for (int j = 0; j < cube.cols; ++j) {
                double acc = 0.0;
                for (int u = 0; u < p; ++u)
                    for (int v = 0; v < p; ++v) {
                        const int du = u - r, dv = v - r;
                        const int si = ((i - du) % cube.rows + cube.rows) % cube.rows;
                        const int sj = ((j - dv) % cube.cols + cube.cols) % cube.cols;
                        acc += cube.at(si, sj, b) * psf.at(b, u, v);
                    }
                out.at(i, j, b) = acc;
            }
    return out;
}

MeasurementImage apply_cassi(const HSICube& cube, const CodedMask& mask, int shear) {
    const int out_cols = cube.cols + (cube.bands() - 1) * shear;
    MeasurementImage out(cube.rows, out_cols, 1);
    for (int i = 0; i < cube.rows; ++i)
        for (int j = 0; j < cube.cols; ++j)
            for (int b = 0; b < cube.bands(); ++b)
                if (mask.at(i, j))
                    out.at(i, j + b * shear, 0) += cube.at(i, j, b);
    return out;
}

HSICube adjoint_srf(const RGBImage& y, const SpectralResponse& srf) {
    HSICube out(y.rows, y.cols, srf.grid, Domain::Model);
    for (int i = 0; i < y.rows; ++i)
        for (int j = 0; j < y.cols; ++j)
            for (int b = 0; b < srf.bands(); ++b) {
                double acc = 0.0;
                for (int c = 0; c < 3; ++c) acc += srf.at(b, c) * y.at(i, j, c);
                out.at(i, j, b) = acc;
            }
    return out;
}

HSICube adjoint_cassi(const MeasurementImage& y, const CodedMask& mask, int shear,
                      const WavelengthGrid& grid) {
    HSICube out(mask.rows, mask.cols, grid, Domain::Model);
    for (int i = 0; i < mask.rows; ++i)
        for (int j = 0; j < mask.cols; ++j)
            for (int b = 0; b < grid.bands(); ++b)
                out.at(i, j, b) = mask.at(i, j) ? y.at(i, j + b * shear, 0) : 0.0;
    return out;
}

UncertaintyCube posterior_stats_streaming(const std::vector<HSICube>& members) {
    const HSICube& first = members.front();
    UncertaintyCube u;
    u.member_count = static_cast<int>(members.size());
    u.mean = HSICube(first.rows, first.cols, first.grid, first.domain);
    u.var = u.mean;
    std::vector<double> m2(u.mean.size(), 0.0);
    long n = 0;
    for (const auto& member : members) {
        ++n;
        for (std::size_t i = 0; i < member.data.size(); ++i) {
            const double delta = member.data[i] - u.mean.data[i];
            u.mean.data[i] += delta / n;
            m2[i] += delta * (member.data[i] - u.mean.data[i]);
        }
    }
    for (std::size_t i = 0; i < m2.size(); ++i) u.var.data[i] = m2[i] / n;
    u.std = u.var;
    for (double& v : u.std.data) v = std::sqrt(v);
    return u;
}

double psnr(const HSICube& reference, const HSICube& estimate) {
    double sq = 0.0;
    for (std::size_t i = 0; i < reference.data.size(); ++i) {
        const double d = reference.data[i] - estimate.data[i];
        sq += d * d;
    }
    const double mse = sq / static_cast<double>(reference.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

double sam_degrees(const HSICube& reference, const HSICube& estimate) {
    double total = 0.0;
    long count = 0;
    for (int i = 0; i < reference.rows; ++i)
        for (int j = 0; j < reference.cols; ++j) {
            double rr = 0.0, ee = 0.0, re = 0.0;
            for (int b = 0; b < reference.bands(); ++b) {
                const double r = reference.at(i, j, b);
                const double e = estimate.at(i, j, b);
                rr += r * r;
                ee += e * e;
                re += r * e;
            }
            if (rr == 0.0 || ee == 0.0) continue;
            double c = re / (std::sqrt(rr) * std::sqrt(ee));
            if (c > 1.0) c = 1.0;
            if (c < -1.0) c = -1.0;
            total += std::acos(c);
            ++count;
        }
    return total / count * 180.0 / 3.14159265358979323846;
}

double gaussian_nll(const HSICube& reference, const HSICube& mean, const HSICube& variance) {
    double total = 0.0;
    for (std::size_t i = 0; i < reference.data.size(); ++i) {
        const double v = std::max(variance.data[i], 1e-12);
        const double d = reference.data[i] - mean.data[i];
        total += d * d / v + std::log(v);
    }
    return 0.5 * total / static_cast<double>(reference.size());
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

} // namespace hsdiff::ref
