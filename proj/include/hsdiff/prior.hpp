#pragma once

#include <functional>
#include <memory>

#include "hsdiff/core.hpp"

namespace hsdiff {

// Clean-signal predictor D(x; sigma) plus the transpose-Jacobian action of
// evaluate at (x, sigma). Implementations are stateless after construction
// and safe for concurrent calls.
class Denoiser {
public:
    virtual ~Denoiser() = default;
    virtual HSICube evaluate(const HSICube& x, double sigma) const = 0;
    virtual HSICube vjp(const HSICube& x, double sigma, const HSICube& v) const = 0;
};

// Diagonal Gaussian prior N(m, c); closed-form posterior-mean denoiser used
// as the verification oracle for the sampler.
struct GaussianAnalyticPrior {
    HSICube mean;
    HSICube var;  // strictly positive, same shape as mean

    void validate() const;
};

// evaluate(x, s) = m + c/(c+s^2) (x - m); vjp(x, s, v) = c/(c+s^2) v.
class GaussianDenoiser : public Denoiser {
public:
    explicit GaussianDenoiser(GaussianAnalyticPrior prior);
    HSICube evaluate(const HSICube& x, double sigma) const override;
    HSICube vjp(const HSICube& x, double sigma, const HSICube& v) const override;
    const GaussianAnalyticPrior& prior() const { return prior_; }

private:
    GaussianAnalyticPrior prior_;
};

// D(x; s) = x. Trivial second implementation for tests.
class IdentityDenoiser : public Denoiser {
public:
    HSICube evaluate(const HSICube& x, double) const override { return x; }
    HSICube vjp(const HSICube&, double, const HSICube& v) const override { return v; }
};

// Discrete noise levels t_0 > t_1 > ... > t_{N-1} > t_N = 0 with
// t_0 = sigma_max and t_{N-1} = sigma_min.
struct NoiseSchedule {
    std::vector<double> levels;  // N+1 values, last is 0
    double sigma_min = 0.002;
    double sigma_max = 80.0;
    double rho = 7.0;

    int steps() const { return static_cast<int>(levels.size()) - 1; }
};

// t_i = (sigma_max^(1/rho) + i/(N-1) (sigma_min^(1/rho) - sigma_max^(1/rho)))^rho.
NoiseSchedule karras_schedule(int n, double sigma_min = 0.002, double sigma_max = 80.0,
                              double rho = 7.0);

// (D(x; sigma) - x) / sigma^2.
HSICube score_from_denoiser(const Denoiser& d, const HSICube& x, double sigma);

// w(sigma) * || D(x0 + sigma*eps; sigma) - x0 ||_2^2.
double edm_loss(const Denoiser& d, const HSICube& x0, double sigma, const HSICube& eps,
                const std::function<double(double)>& weight);

// 1/sigma^2, the reduced noise-level weighting with data variance 0.25.
double default_edm_weight(double sigma);

} // namespace hsdiff
