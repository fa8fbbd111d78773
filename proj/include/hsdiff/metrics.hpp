#pragma once

#include "hsdiff/sampler.hpp"

namespace hsdiff {

// Per-voxel posterior mean and (population) variance across ensemble members.
struct UncertaintyCube {
    HSICube mean;
    HSICube var;
    HSICube std;
    int member_count = 0;
};

UncertaintyCube posterior_stats(const PosteriorEnsemble& ens);
UncertaintyCube posterior_stats(const std::vector<HSICube>& members);

// Crossplot coordinates of one image-operator pair (Fig. 4 style).
struct CalibrationRecord {
    std::string image_id;
    OperatorKind op_kind = OperatorKind::SRF;
    double mae = 0.0;       // mean absolute error of the posterior mean
    double mean_std = 0.0;  // mean posterior standard deviation
};

// 10 log10(1 / MSE), peak 1.0, reflectance domain. Identical cubes return
// +infinity.
double psnr(const HSICube& reference, const HSICube& estimate);

// Mean per-pixel spectral angle in degrees; zero-norm pixels are skipped.
struct SamResult {
    double degrees = 0.0;
    long skipped = 0;
};
SamResult sam(const HSICube& reference, const HSICube& estimate);

// Voxelwise fraction with |ref - mean| <= k * std.
double picp(const HSICube& reference, const UncertaintyCube& u, double k = 2.0);

// Per-pixel variant: a pixel counts as covered only when every band is.
double picp_per_pixel(const HSICube& reference, const UncertaintyCube& u, double k = 2.0);

// Binary coverage map: pixel = 1 when any band violates mean +- k std.
Image bcm(const HSICube& reference, const UncertaintyCube& u, double k = 2.0);

double bcm_violation_rate(const Image& map);

// Pearson correlation between per-image MAE and mean std over >= 3 records.
double pearson_calibration(const std::vector<CalibrationRecord>& records);

// (1/2) mean[ (ref-mean)^2 / var + log var ], variance floored at 1e-12.
double gaussian_nll(const HSICube& reference, const HSICube& mean, const HSICube& variance);

double mean_abs_error(const HSICube& reference, const HSICube& estimate);
double mean_of(const HSICube& cube);

} // namespace hsdiff
