#pragma once

#include <map>
#include <optional>
#include <string>

#include "hsdiff/core.hpp"
#include "hsdiff/prior.hpp"

namespace hsdiff {

// "HSC1" container: 4-byte magic, little-endian u32 M, N, K, flags,
// K little-endian f32 wavelengths (nm), then M*N*K little-endian f32
// band-major planar payload. Flags bit 0 carries the domain.
HSICube read_cube(const std::string& path);
void write_cube(const HSICube& cube, const std::string& path);  // atomic temp+rename

// Measurements reuse the container with K = channels and integer channel
// indices in place of wavelengths.
Image read_image(const std::string& path);
void write_image(const Image& img, const std::string& path);

// PSF stacks stored as P x P x K cubes on the stack's wavelength grid.
PSFStack read_psf(const std::string& path);
void write_psf(const PSFStack& psf, const std::string& path);

// Plain text, K data rows of "wavelength_nm,R,G,B"; '#' comments allowed.
SpectralResponse read_srf(const std::string& path);
void write_srf(const SpectralResponse& srf, const std::string& path);

// 16-bit binary portable graymap (P5, maxval 65535); class 0 forbidden.
LabelMap read_labels(const std::string& path);
void write_labels(const LabelMap& labels, const std::string& path);

CodedMask read_mask(const std::string& path);
void write_mask(const CodedMask& mask, const std::string& path);

// One wavelength,value row per band.
std::vector<double> read_illuminant(const std::string& path, const WavelengthGrid& grid);

// Gaussian prior stored as <prefix>.mean.hsc and <prefix>.var.hsc.
GaussianAnalyticPrior read_prior(const std::string& prefix);
void write_prior(const GaussianAnalyticPrior& prior, const std::string& prefix);

// Plain-text key = value configuration with [operator], [sampler],
// [guidance], [metamer], [io] sections. Unknown sections or keys are errors.
class PipelineConfig {
public:
    static PipelineConfig parse_file(const std::string& path);
    static PipelineConfig parse_string(const std::string& text);

    bool has(const std::string& section, const std::string& key) const;
    std::string get_str(const std::string& section, const std::string& key,
                        const std::string& fallback) const;
    double get_num(const std::string& section, const std::string& key, double fallback) const;
    long get_int(const std::string& section, const std::string& key, long fallback) const;

private:
    std::map<std::string, std::string> values_;  // "section.key" -> value
};

} // namespace hsdiff
