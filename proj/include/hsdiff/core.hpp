#pragma once

#include <cstdint>
#include <vector>

#include "hsdiff/errors.hpp"

namespace hsdiff {

// Wavelength sampling grid in nanometers, strictly increasing, K >= 2.
struct WavelengthGrid {
    std::vector<double> nm;

    int bands() const { return static_cast<int>(nm.size()); }
    double span() const { return nm.back() - nm.front(); }
    void validate() const;

    // 31 samples, 400..700 nm inclusive, 10 nm step.
    static WavelengthGrid default_vis();
    static WavelengthGrid uniform(double lo, double hi, int k);
};

// Value-range convention carried by cubes and container files.
enum class Domain : std::uint8_t { Reflectance = 0, Model = 1 };

// Spatial-spectral volume, band-major planar storage:
// data[(b*rows + i)*cols + j]. Immutable by convention after construction.
struct HSICube {
    int rows = 0;
    int cols = 0;
    WavelengthGrid grid;
    Domain domain = Domain::Reflectance;
    std::vector<double> data;

    HSICube() = default;
    HSICube(int m, int n, WavelengthGrid g, Domain d = Domain::Reflectance)
        : rows(m), cols(n), grid(std::move(g)), domain(d),
          data(static_cast<std::size_t>(m) * n * grid.bands(), 0.0) {}

    int bands() const { return grid.bands(); }
    std::size_t size() const { return data.size(); }
    std::size_t index(int i, int j, int b) const {
        return (static_cast<std::size_t>(b) * rows + i) * cols + j;
    }
    double& at(int i, int j, int b) { return data[index(i, j, b)]; }
    double at(int i, int j, int b) const { return data[index(i, j, b)]; }
    const double* band(int b) const { return data.data() + static_cast<std::size_t>(b) * rows * cols; }
    double* band(int b) { return data.data() + static_cast<std::size_t>(b) * rows * cols; }

    bool same_shape(const HSICube& o) const {
        return rows == o.rows && cols == o.cols && bands() == o.bands();
    }
    void validate() const;  // finite values, shape consistency
};

// Generic pixel image: RGB measurements have channels == 3, CASSI has 1.
// Storage: data[(i*cols + j)*channels + c].
struct Image {
    int rows = 0;
    int cols = 0;
    int channels = 1;
    std::vector<double> data;

    Image() = default;
    Image(int m, int n, int c)
        : rows(m), cols(n), channels(c),
          data(static_cast<std::size_t>(m) * n * c, 0.0) {}

    std::size_t size() const { return data.size(); }
    std::size_t index(int i, int j, int c) const {
        return (static_cast<std::size_t>(i) * cols + j) * channels + c;
    }
    double& at(int i, int j, int c) { return data[index(i, j, c)]; }
    double at(int i, int j, int c) const { return data[index(i, j, c)]; }
    bool same_shape(const Image& o) const {
        return rows == o.rows && cols == o.cols && channels == o.channels;
    }
};

using RGBImage = Image;          // channels == 3
using MeasurementImage = Image;  // channels == 1

// Camera spectral response Q, K x 3 row-major (band, channel).
struct SpectralResponse {
    WavelengthGrid grid;
    std::vector<double> q;

    int bands() const { return grid.bands(); }
    static constexpr int channels = 3;
    double at(int band, int ch) const { return q[static_cast<std::size_t>(band) * 3 + ch]; }
    double& at(int band, int ch) { return q[static_cast<std::size_t>(band) * 3 + ch]; }
    void validate() const;  // nonneg entries, each column has a positive entry
};

// Integer class index per pixel, 1..num_classes contiguous. Class 0 forbidden.
struct LabelMap {
    int rows = 0;
    int cols = 0;
    std::vector<std::uint16_t> cls;

    LabelMap() = default;
    LabelMap(int m, int n) : rows(m), cols(n), cls(static_cast<std::size_t>(m) * n, 1) {}
    std::uint16_t at(int i, int j) const { return cls[static_cast<std::size_t>(i) * cols + j]; }
    std::uint16_t& at(int i, int j) { return cls[static_cast<std::size_t>(i) * cols + j]; }
    int num_classes() const;  // validates labeling, returns max class
};

// One odd P x P blur kernel per band; each kernel sums to 1 within 1e-9.
struct PSFStack {
    int size = 0;  // P, odd
    WavelengthGrid grid;
    std::vector<double> k;  // (b*P + u)*P + v

    int bands() const { return grid.bands(); }
    double at(int b, int u, int v) const {
        return k[(static_cast<std::size_t>(b) * size + u) * size + v];
    }
    double& at(int b, int u, int v) {
        return k[(static_cast<std::size_t>(b) * size + u) * size + v];
    }
    const double* kernel(int b) const { return k.data() + static_cast<std::size_t>(b) * size * size; }
    void validate() const;
};

// Binary coded-aperture mask, reproducible from (seed, density, M, N).
struct CodedMask {
    int rows = 0;
    int cols = 0;
    std::uint64_t seed = 0;
    double density = 0.5;
    std::vector<std::uint8_t> m;

    std::uint8_t at(int i, int j) const { return m[static_cast<std::size_t>(i) * cols + j]; }
};

// Range maps between the reflectance [0,1] and model [-1,1] conventions.
// Mutually inverse bijections; out-of-range input raises DomainError naming
// the offending index.
HSICube to_model_range(const HSICube& cube);
HSICube to_reflectance_range(const HSICube& cube);

// Affine (x+1)/2 without range validation; metric plumbing for cubes that
// carry the model tag but may exceed [-1,1] (e.g. Gaussian prior samples).
HSICube to_reflectance_affine(const HSICube& cube);

} // namespace hsdiff
