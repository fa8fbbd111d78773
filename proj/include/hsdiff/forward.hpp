#pragma once

#include <memory>

#include "hsdiff/core.hpp"

namespace hsdiff {

enum class OperatorKind { SRF, OpticsSrf, Cassi };

const char* to_string(OperatorKind k);

// Additive Gaussian measurement noise, deterministic given the seed.
struct NoiseModel {
    double sigma_y = 0.0;
    std::uint64_t seed = 0;
};

// Y(i,j,c) = sum_b X(i,j,b) * Q(b,c). Linear in the cube.
RGBImage apply_srf(const HSICube& cube, const SpectralResponse& srf);

// Circular (FFT-consistent) per-band convolution with the PSF stack.
HSICube convolve_per_band(const HSICube& cube, const PSFStack& psf);

// Adjoint of convolve_per_band: correlation with the flipped kernels.
HSICube correlate_per_band(const HSICube& cube, const PSFStack& psf);

// apply_srf(convolve_per_band(cube, psf), srf).
RGBImage apply_optics(const HSICube& cube, const PSFStack& psf, const SpectralResponse& srf);

// Y(i, j') = sum_b M(i, j'-b*shear) * X(i, j'-b*shear, b) on the dispersed
// grid of width N + (K-1)*shear; zero outside support.
MeasurementImage apply_cassi(const HSICube& cube, const CodedMask& mask, int shear);

// Exact adjoints under the standard inner product.
HSICube adjoint_srf(const RGBImage& y, const SpectralResponse& srf);
HSICube adjoint_cassi(const MeasurementImage& y, const CodedMask& mask, int shear,
                      const WavelengthGrid& grid);

enum class PsfKind { Gaussian, Grating, Rotational };

struct PsfParams {
    int size = 15;             // odd kernel side P
    // Gaussian: sigma(l) = sigma0 + sigma1 * (l - l0) / span, in pixels
    double gauss_sigma0 = 0.5;
    double gauss_sigma1 = 2.0;
    // Grating: satellite at round(offset0 + disp * (l - l0)/span) px along +x
    double grating_offset0 = 1.0;
    double grating_disp = 6.0;
    double grating_energy = 0.3;  // satellite fraction
    // Rotational: two lobes at radius px, rotated theta1 * (l - l0)/span
    double rot_radius = 3.0;
    double rot_sigma = 0.75;
    double rot_theta1 = 3.14159265358979323846;
};

PSFStack synth_psf(PsfKind kind, const WavelengthGrid& grid, const PsfParams& params = {});

// I.i.d. Bernoulli(density) mask, bit-reproducible from the seed.
CodedMask gen_cassi_mask(int rows, int cols, std::uint64_t seed, double density);

Image add_noise(const Image& y, const NoiseModel& noise);

// Shape-bound measurement operator A with exact adjoint. Pure and reentrant:
// apply/adjoint are safe to call concurrently on a shared instance.
class ForwardOperator {
public:
    static ForwardOperator srf(SpectralResponse srf, int rows, int cols);
    static ForwardOperator optics(SpectralResponse srf, PSFStack psf, int rows, int cols);
    static ForwardOperator cassi(CodedMask mask, int shear, WavelengthGrid grid);

    Image apply(const HSICube& x) const;
    HSICube adjoint(const Image& y) const;

    OperatorKind kind() const { return kind_; }
    int rows() const { return rows_; }
    int cols() const { return cols_; }
    int bands() const { return grid_.bands(); }
    const WavelengthGrid& grid() const { return grid_; }
    int out_rows() const;
    int out_cols() const;
    int out_channels() const;

private:
    ForwardOperator() = default;
    OperatorKind kind_ = OperatorKind::SRF;
    int rows_ = 0, cols_ = 0;
    WavelengthGrid grid_;
    SpectralResponse srf_;
    PSFStack psf_;
    CodedMask mask_;
    int shear_ = 1;
    std::shared_ptr<const class FftConvolver> conv_;  // optics only
};

} // namespace hsdiff
