#include "hsdiff/core.hpp"

#include <cmath>
#include <string>

namespace hsdiff {

void WavelengthGrid::validate() const {
    if (nm.size() < 2)
        throw ConfigError("wavelength grid needs K >= 2, got " + std::to_string(nm.size()));
    for (std::size_t i = 1; i < nm.size(); ++i)
        if (!(nm[i] > nm[i - 1]))
            throw FormatError("wavelengths not strictly increasing at index " + std::to_string(i));
}

WavelengthGrid WavelengthGrid::default_vis() { return uniform(400.0, 700.0, 31); }

WavelengthGrid WavelengthGrid::uniform(double lo, double hi, int k) {
    WavelengthGrid g;
    g.nm.resize(k);
    for (int i = 0; i < k; ++i)
        g.nm[i] = lo + (hi - lo) * i / (k - 1);
    g.validate();
    return g;
}

void HSICube::validate() const {
    grid.validate();
    if (data.size() != static_cast<std::size_t>(rows) * cols * bands())
        throw ShapeError("cube data length " + std::to_string(data.size()) +
                         " != M*N*K = " + std::to_string(static_cast<std::size_t>(rows) * cols * bands()));
    for (std::size_t i = 0; i < data.size(); ++i)
        if (!std::isfinite(data[i]))
            throw DataError("non-finite cube value at flat index " + std::to_string(i));
}

void SpectralResponse::validate() const {
    grid.validate();
    if (q.size() != static_cast<std::size_t>(bands()) * 3)
        throw ShapeError("SRF entries != K*3");
    bool col_pos[3] = {false, false, false};
    for (int b = 0; b < bands(); ++b)
        for (int c = 0; c < 3; ++c) {
            double v = at(b, c);
            if (!(v >= 0.0))
                throw DataError("negative SRF entry at band " + std::to_string(b) +
                                " channel " + std::to_string(c));
            if (v > 0.0) col_pos[c] = true;
        }
    for (int c = 0; c < 3; ++c)
        if (!col_pos[c])
            throw DataError("SRF column " + std::to_string(c) + " has no positive entry");
}

int LabelMap::num_classes() const {
    int mx = 0;
    std::vector<bool> seen;
    for (std::size_t p = 0; p < cls.size(); ++p) {
        int c = cls[p];
        if (c == 0)
            throw DataError("unlabeled pixel (class 0) at flat index " + std::to_string(p));
        if (c > mx) {
            mx = c;
            seen.resize(mx, false);
        }
        seen[c - 1] = true;
    }
    for (int c = 0; c < mx; ++c)
        if (!seen[c])
            throw DataError("class indices not contiguous: class " + std::to_string(c + 1) + " missing");
    return mx;
}

void PSFStack::validate() const {
    grid.validate();
    if (size <= 0 || size % 2 == 0)
        throw ConfigError("PSF kernel size must be odd and positive, got " + std::to_string(size));
    if (k.size() != static_cast<std::size_t>(bands()) * size * size)
        throw ShapeError("PSF stack entries != K*P*P");
    for (int b = 0; b < bands(); ++b) {
        double s = 0.0;
        for (int u = 0; u < size; ++u)
            for (int v = 0; v < size; ++v) {
                double val = at(b, u, v);
                if (!(val >= 0.0))
                    throw DataError("negative PSF entry in band " + std::to_string(b));
                s += val;
            }
        if (std::abs(s - 1.0) > 1e-9)
            throw DataError("PSF band " + std::to_string(b) + " sum " + std::to_string(s) +
                            " violates energy conservation");
    }
}

namespace {

HSICube affine_map(const HSICube& cube, double scale, double shift, Domain out_domain,
                   double lo, double hi, const char* what) {
    HSICube out(cube.rows, cube.cols, cube.grid, out_domain);
    for (int b = 0; b < cube.bands(); ++b) {
        const double* src = cube.band(b);
        double* dst = out.band(b);
        const std::size_t n = static_cast<std::size_t>(cube.rows) * cube.cols;
        for (std::size_t p = 0; p < n; ++p) {
            double v = src[p];
            if (!(v >= lo && v <= hi)) {
                std::size_t i = p / cube.cols, j = p % cube.cols;
                throw DomainError(std::string(what) + ": value " + std::to_string(v) +
                                  " out of range at (i=" + std::to_string(i) +
                                  ", j=" + std::to_string(j) + ", band=" + std::to_string(b) + ")");
            }
            dst[p] = scale * v + shift;
        }
    }
    return out;
}

} // namespace

HSICube to_model_range(const HSICube& cube) {
    return affine_map(cube, 2.0, -1.0, Domain::Model, 0.0, 1.0, "to_model_range");
}

HSICube to_reflectance_range(const HSICube& cube) {
    return affine_map(cube, 0.5, 0.5, Domain::Reflectance, -1.0, 1.0, "to_reflectance_range");
}

HSICube to_reflectance_affine(const HSICube& cube) {
    HSICube out = cube;
    if (cube.domain == Domain::Reflectance) return out;
    for (double& v : out.data) v = 0.5 * (v + 1.0);
    out.domain = Domain::Reflectance;
    return out;
}

} // namespace hsdiff
