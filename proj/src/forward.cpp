#include "hsdiff/forward.hpp"

#include <cmath>
#include <complex>
#include <cstring>
#include <mutex>
#include <string>

#include <fftw3.h>

#include "hsdiff/rng.hpp"

namespace hsdiff {

const char* to_string(OperatorKind k) {
    switch (k) {
        case OperatorKind::SRF: return "srf";
        case OperatorKind::OpticsSrf: return "optics";
        case OperatorKind::Cassi: return "cassi";
    }
    return "?";
}

namespace {

std::mutex g_planner_mutex;  // FFTW planner is not thread-safe

struct FftwBuf {
    double* re = nullptr;
    fftw_complex* cx = nullptr;
    FftwBuf(int n_re, int n_cx) {
        re = static_cast<double*>(fftw_malloc(sizeof(double) * n_re));
        cx = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n_cx));
    }
    ~FftwBuf() {
        fftw_free(re);
        fftw_free(cx);
    }
    FftwBuf(const FftwBuf&) = delete;
    FftwBuf& operator=(const FftwBuf&) = delete;
};

} // namespace

// Per-shape r2c/c2r plans plus the kernel spectra of one PSF stack.
// Execution uses the new-array interface on per-thread fftw_malloc'd buffers.
class FftConvolver {
public:
    FftConvolver(int rows, int cols, const PSFStack& psf)
        : rows_(rows), cols_(cols), ccols_(cols / 2 + 1) {
        const int n_re = rows_ * cols_;
        const int n_cx = rows_ * ccols_;
        FftwBuf tmpl(n_re, n_cx);
        {
            std::lock_guard<std::mutex> lock(g_planner_mutex);
            fwd_ = fftw_plan_dft_r2c_2d(rows_, cols_, tmpl.re, tmpl.cx, FFTW_ESTIMATE);
            bwd_ = fftw_plan_dft_c2r_2d(rows_, cols_, tmpl.cx, tmpl.re, FFTW_ESTIMATE);
        }
        kernel_fft_.resize(static_cast<std::size_t>(psf.bands()) * n_cx);
        const int p = psf.size;
        const int r = (p - 1) / 2;
        for (int b = 0; b < psf.bands(); ++b) {
            std::memset(tmpl.re, 0, sizeof(double) * n_re);
            // centered kernel embedded with wraparound so FFT convolution
            // equals circular convolution about the pixel itself
            for (int u = 0; u < p; ++u)
                for (int v = 0; v < p; ++v) {
                    int du = u - r, dv = v - r;
                    int ii = ((du % rows_) + rows_) % rows_;
                    int jj = ((dv % cols_) + cols_) % cols_;
                    tmpl.re[ii * cols_ + jj] += psf.at(b, u, v);
                }
            fftw_execute_dft_r2c(fwd_, tmpl.re, tmpl.cx);
            std::complex<double>* dst = kernel_fft_.data() + static_cast<std::size_t>(b) * n_cx;
            for (int i = 0; i < n_cx; ++i)
                dst[i] = std::complex<double>(tmpl.cx[i][0], tmpl.cx[i][1]);
        }
    }

    ~FftConvolver() {
        std::lock_guard<std::mutex> lock(g_planner_mutex);
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
    }

    FftConvolver(const FftConvolver&) = delete;
    FftConvolver& operator=(const FftConvolver&) = delete;

    // out_band = ifft(fft(in_band) * K_b) / (M*N); conjugate = correlation
    void filter_band(int b, const double* in, double* out, bool conjugate) const {
        const int n_re = rows_ * cols_;
        const int n_cx = rows_ * ccols_;
        FftwBuf buf(n_re, n_cx);
        std::memcpy(buf.re, in, sizeof(double) * n_re);
        fftw_execute_dft_r2c(fwd_, buf.re, buf.cx);
        const std::complex<double>* kf = kernel_fft_.data() + static_cast<std::size_t>(b) * n_cx;
        const double scale = 1.0 / n_re;
        for (int i = 0; i < n_cx; ++i) {
            std::complex<double> v(buf.cx[i][0], buf.cx[i][1]);
            std::complex<double> w = conjugate ? v * std::conj(kf[i]) : v * kf[i];
            buf.cx[i][0] = w.real() * scale;
            buf.cx[i][1] = w.imag() * scale;
        }
        fftw_execute_dft_c2r(bwd_, buf.cx, buf.re);
        std::memcpy(out, buf.re, sizeof(double) * n_re);
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }

private:
    int rows_, cols_, ccols_;
    fftw_plan fwd_ = nullptr, bwd_ = nullptr;
    std::vector<std::complex<double>> kernel_fft_;
};

namespace {

void check_grids(const WavelengthGrid& a, const WavelengthGrid& b, const char* what) {
    if (a.nm != b.nm)
        throw ShapeError(std::string(what) + ": wavelength grids do not match");
}

HSICube filtered_cube(const HSICube& cube, const PSFStack& psf, const FftConvolver& conv,
                      bool conjugate) {
    HSICube out(cube.rows, cube.cols, cube.grid, cube.domain);
#pragma omp parallel for schedule(static)
    for (int b = 0; b < cube.bands(); ++b)
        conv.filter_band(b, cube.band(b), out.band(b), conjugate);
    (void)psf;
    return out;
}

} // namespace

RGBImage apply_srf(const HSICube& cube, const SpectralResponse& srf) {
    check_grids(cube.grid, srf.grid, "apply_srf");
    const int K = cube.bands();
    RGBImage out(cube.rows, cube.cols, 3);
    const std::size_t npix = static_cast<std::size_t>(cube.rows) * cube.cols;
#pragma omp parallel for schedule(static)
    for (long long p = 0; p < static_cast<long long>(npix); ++p) {
        double acc[3] = {0.0, 0.0, 0.0};
        for (int b = 0; b < K; ++b) {
            double x = cube.data[static_cast<std::size_t>(b) * npix + p];
            acc[0] += x * srf.q[static_cast<std::size_t>(b) * 3 + 0];
            acc[1] += x * srf.q[static_cast<std::size_t>(b) * 3 + 1];
            acc[2] += x * srf.q[static_cast<std::size_t>(b) * 3 + 2];
        }
        out.data[p * 3 + 0] = acc[0];
        out.data[p * 3 + 1] = acc[1];
        out.data[p * 3 + 2] = acc[2];
    }
    return out;
}

HSICube adjoint_srf(const RGBImage& y, const SpectralResponse& srf) {
    if (y.channels != 3)
        throw ShapeError("adjoint_srf: expected a 3-channel image");
    const int K = srf.bands();
    HSICube out(y.rows, y.cols, srf.grid, Domain::Model);
    const std::size_t npix = static_cast<std::size_t>(y.rows) * y.cols;
#pragma omp parallel for schedule(static)
    for (long long p = 0; p < static_cast<long long>(npix); ++p)
        for (int b = 0; b < K; ++b) {
            double acc = 0.0;
            for (int c = 0; c < 3; ++c)
                acc += srf.q[static_cast<std::size_t>(b) * 3 + c] * y.data[p * 3 + c];
            out.data[static_cast<std::size_t>(b) * npix + p] = acc;
        }
    return out;
}

HSICube convolve_per_band(const HSICube& cube, const PSFStack& psf) {
    check_grids(cube.grid, psf.grid, "convolve_per_band");
    psf.validate();
    FftConvolver conv(cube.rows, cube.cols, psf);
    return filtered_cube(cube, psf, conv, false);
}

HSICube correlate_per_band(const HSICube& cube, const PSFStack& psf) {
    check_grids(cube.grid, psf.grid, "correlate_per_band");
    psf.validate();
    FftConvolver conv(cube.rows, cube.cols, psf);
    return filtered_cube(cube, psf, conv, true);
}

RGBImage apply_optics(const HSICube& cube, const PSFStack& psf, const SpectralResponse& srf) {
    check_grids(psf.grid, srf.grid, "apply_optics");
    return apply_srf(convolve_per_band(cube, psf), srf);
}

MeasurementImage apply_cassi(const HSICube& cube, const CodedMask& mask, int shear) {
    if (shear < 0)
        throw ConfigError("apply_cassi: negative shear " + std::to_string(shear));
    if (mask.rows != cube.rows || mask.cols != cube.cols)
        throw ShapeError("apply_cassi: mask does not match the cube spatial shape");
    const int K = cube.bands();
    const int out_cols = cube.cols + (K - 1) * shear;
    MeasurementImage out(cube.rows, out_cols, 1);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < cube.rows; ++i)
        for (int b = 0; b < K; ++b) {
            const double* xb = cube.band(b) + static_cast<std::size_t>(i) * cube.cols;
            const std::uint8_t* mr = mask.m.data() + static_cast<std::size_t>(i) * cube.cols;
            double* yr = out.data.data() + static_cast<std::size_t>(i) * out_cols;
            const int off = b * shear;
            for (int j = 0; j < cube.cols; ++j)
                if (mr[j]) yr[j + off] += xb[j];
        }
    return out;
}

HSICube adjoint_cassi(const MeasurementImage& y, const CodedMask& mask, int shear,
                      const WavelengthGrid& grid) {
    if (shear < 0)
        throw ConfigError("adjoint_cassi: negative shear");
    const int K = grid.bands();
    const int exp_cols = mask.cols + (K - 1) * shear;
    if (y.channels != 1 || y.rows != mask.rows || y.cols != exp_cols)
        throw ShapeError("adjoint_cassi: measurement shape mismatch (expected " +
                         std::to_string(mask.rows) + "x" + std::to_string(exp_cols) + "x1)");
    HSICube out(mask.rows, mask.cols, grid, Domain::Model);
#pragma omp parallel for schedule(static)
    for (int b = 0; b < K; ++b) {
        const int off = b * shear;
        for (int i = 0; i < mask.rows; ++i) {
            double* xb = out.band(b) + static_cast<std::size_t>(i) * mask.cols;
            const std::uint8_t* mr = mask.m.data() + static_cast<std::size_t>(i) * mask.cols;
            const double* yr = y.data.data() + static_cast<std::size_t>(i) * y.cols;
            for (int j = 0; j < mask.cols; ++j)
                xb[j] = mr[j] ? yr[j + off] : 0.0;
        }
    }
    return out;
}

PSFStack synth_psf(PsfKind kind, const WavelengthGrid& grid, const PsfParams& params) {
    grid.validate();
    const int p = params.size;
    if (p <= 0 || p % 2 == 0)
        throw ConfigError("synth_psf: kernel size must be odd, got " + std::to_string(p));
    const int r = (p - 1) / 2;
    const double l0 = grid.nm.front();
    const double span = grid.span();

    PSFStack out;
    out.size = p;
    out.grid = grid;
    out.k.assign(static_cast<std::size_t>(grid.bands()) * p * p, 0.0);

    for (int b = 0; b < grid.bands(); ++b) {
        const double frac = (grid.nm[b] - l0) / span;
        switch (kind) {
            case PsfKind::Gaussian: {
                const double sigma = params.gauss_sigma0 + params.gauss_sigma1 * frac;
                if (!(sigma > 0.0))
                    throw ConfigError("synth_psf: gaussian sigma must be positive");
                for (int u = 0; u < p; ++u)
                    for (int v = 0; v < p; ++v) {
                        double du = u - r, dv = v - r;
                        out.at(b, u, v) = std::exp(-(du * du + dv * dv) / (2.0 * sigma * sigma));
                    }
                break;
            }
            case PsfKind::Grating: {
                const int off = static_cast<int>(std::lround(params.grating_offset0 +
                                                             params.grating_disp * frac));
                if (off < 0 || off > r)
                    throw ConfigError("synth_psf: grating satellite offset " + std::to_string(off) +
                                      " exceeds kernel radius " + std::to_string(r));
                out.at(b, r, r) = 1.0 - params.grating_energy;
                out.at(b, r, r + off) += params.grating_energy;
                break;
            }
            case PsfKind::Rotational: {
                const double theta = params.rot_theta1 * frac;
                const double cx = params.rot_radius * std::cos(theta);
                const double cy = params.rot_radius * std::sin(theta);
                const double s2 = 2.0 * params.rot_sigma * params.rot_sigma;
                for (int u = 0; u < p; ++u)
                    for (int v = 0; v < p; ++v) {
                        double du = u - r, dv = v - r;
                        double d1 = (dv - cx) * (dv - cx) + (du - cy) * (du - cy);
                        double d2 = (dv + cx) * (dv + cx) + (du + cy) * (du + cy);
                        out.at(b, u, v) = std::exp(-d1 / s2) + std::exp(-d2 / s2);
                    }
                break;
            }
        }
        double s = 0.0;
        for (int u = 0; u < p; ++u)
            for (int v = 0; v < p; ++v) s += out.at(b, u, v);
        for (int u = 0; u < p; ++u)
            for (int v = 0; v < p; ++v) out.at(b, u, v) /= s;
    }
    out.validate();
    return out;
}

CodedMask gen_cassi_mask(int rows, int cols, std::uint64_t seed, double density) {
    if (!(density > 0.0 && density < 1.0))
        throw ConfigError("gen_cassi_mask: density must lie in (0,1), got " + std::to_string(density));
    if (rows <= 0 || cols <= 0)
        throw ConfigError("gen_cassi_mask: nonpositive shape");
    CodedMask mask;
    mask.rows = rows;
    mask.cols = cols;
    mask.seed = seed;
    mask.density = density;
    mask.m.resize(static_cast<std::size_t>(rows) * cols);
    Rng rng(seed);
    for (auto& v : mask.m) v = rng.uniform() < density ? 1 : 0;
    return mask;
}

Image add_noise(const Image& y, const NoiseModel& noise) {
    if (!(noise.sigma_y >= 0.0))
        throw ConfigError("add_noise: sigma_y must be >= 0");
    Image out = y;
    if (noise.sigma_y == 0.0) return out;
    Rng rng(noise.seed);
    for (auto& v : out.data) v += noise.sigma_y * rng.normal();
    return out;
}

ForwardOperator ForwardOperator::srf(SpectralResponse srf, int rows, int cols) {
    srf.validate();
    ForwardOperator op;
    op.kind_ = OperatorKind::SRF;
    op.rows_ = rows;
    op.cols_ = cols;
    op.grid_ = srf.grid;
    op.srf_ = std::move(srf);
    return op;
}

ForwardOperator ForwardOperator::optics(SpectralResponse srf, PSFStack psf, int rows, int cols) {
    srf.validate();
    psf.validate();
    check_grids(srf.grid, psf.grid, "ForwardOperator::optics");
    ForwardOperator op;
    op.kind_ = OperatorKind::OpticsSrf;
    op.rows_ = rows;
    op.cols_ = cols;
    op.grid_ = srf.grid;
    op.srf_ = std::move(srf);
    op.conv_ = std::make_shared<FftConvolver>(rows, cols, psf);
    op.psf_ = std::move(psf);
    return op;
}

ForwardOperator ForwardOperator::cassi(CodedMask mask, int shear, WavelengthGrid grid) {
    if (shear < 0)
        throw ConfigError("ForwardOperator::cassi: negative shear");
    grid.validate();
    ForwardOperator op;
    op.kind_ = OperatorKind::Cassi;
    op.rows_ = mask.rows;
    op.cols_ = mask.cols;
    op.grid_ = std::move(grid);
    op.mask_ = std::move(mask);
    op.shear_ = shear;
    return op;
}

int ForwardOperator::out_rows() const { return rows_; }

int ForwardOperator::out_cols() const {
    return kind_ == OperatorKind::Cassi ? cols_ + (bands() - 1) * shear_ : cols_;
}

int ForwardOperator::out_channels() const {
    return kind_ == OperatorKind::Cassi ? 1 : 3;
}

Image ForwardOperator::apply(const HSICube& x) const {
    if (x.rows != rows_ || x.cols != cols_ || x.bands() != bands())
        throw ShapeError("ForwardOperator::apply: cube shape mismatch");
    switch (kind_) {
        case OperatorKind::SRF:
            return apply_srf(x, srf_);
        case OperatorKind::OpticsSrf:
            return apply_srf(filtered_cube(x, psf_, *conv_, false), srf_);
        case OperatorKind::Cassi:
            return apply_cassi(x, mask_, shear_);
    }
    throw ConfigError("unreachable operator kind");
}

HSICube ForwardOperator::adjoint(const Image& y) const {
    if (y.rows != out_rows() || y.cols != out_cols() || y.channels != out_channels())
        throw ShapeError("ForwardOperator::adjoint: measurement shape mismatch");
    switch (kind_) {
        case OperatorKind::SRF:
            return adjoint_srf(y, srf_);
        case OperatorKind::OpticsSrf:
            return filtered_cube(adjoint_srf(y, srf_), psf_, *conv_, true);
        case OperatorKind::Cassi:
            return adjoint_cassi(y, mask_, shear_, grid_);
    }
    throw ConfigError("unreachable operator kind");
}

} // namespace hsdiff
