#pragma once

#include "hsdiff/core.hpp"
#include "hsdiff/metrics.hpp"

// Serial reference implementations: naive loop forms of the production
// kernels, kept independent of the OpenMP/FFT code paths. Tests use them as
// oracles; the benchmark uses them as the baseline.
namespace hsdiff::ref {

RGBImage apply_srf(const HSICube& cube, const SpectralResponse& srf);

// direct spatial-domain circular convolution
HSICube convolve_per_band(const HSICube& cube, const PSFStack& psf);

MeasurementImage apply_cassi(const HSICube& cube, const CodedMask& mask, int shear);

HSICube adjoint_srf(const RGBImage& y, const SpectralResponse& srf);
HSICube adjoint_cassi(const MeasurementImage& y, const CodedMask& mask, int shear,
                      const WavelengthGrid& grid);

// streaming (Welford) mean/variance across members
UncertaintyCube posterior_stats_streaming(const std::vector<HSICube>& members);

double psnr(const HSICube& reference, const HSICube& estimate);
double sam_degrees(const HSICube& reference, const HSICube& estimate);
double gaussian_nll(const HSICube& reference, const HSICube& mean, const HSICube& variance);
double pearson(const std::vector<double>& x, const std::vector<double>& y);

} // namespace hsdiff::ref
