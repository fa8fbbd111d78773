#include "hsdiff/prior.hpp"

#include <cmath>
#include <string>

namespace hsdiff {

void GaussianAnalyticPrior::validate() const {
    if (!mean.same_shape(var))
        throw ShapeError("gaussian prior: mean and variance cubes differ in shape");
    for (double v : var.data)
        if (!(v > 0.0))
            throw DataError("gaussian prior: variance must be strictly positive");
}

GaussianDenoiser::GaussianDenoiser(GaussianAnalyticPrior prior) : prior_(std::move(prior)) {
    prior_.validate();
}

HSICube GaussianDenoiser::evaluate(const HSICube& x, double sigma) const {
    if (!x.same_shape(prior_.mean))
        throw ShapeError("gaussian denoiser: input shape != prior shape");
    HSICube out = x;
    const double s2 = sigma * sigma;
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        const double c = prior_.var.data[i];
        const double m = prior_.mean.data[i];
        out.data[i] = m + c / (c + s2) * (x.data[i] - m);
    }
    return out;
}

HSICube GaussianDenoiser::vjp(const HSICube& x, double sigma, const HSICube& v) const {
    if (!v.same_shape(prior_.mean))
        throw ShapeError("gaussian denoiser vjp: shape mismatch");
    (void)x;  // the Jacobian is independent of x for a Gaussian prior
    HSICube out = v;
    const double s2 = sigma * sigma;
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        const double c = prior_.var.data[i];
        out.data[i] = c / (c + s2) * v.data[i];
    }
    return out;
}

NoiseSchedule karras_schedule(int n, double sigma_min, double sigma_max, double rho) {
    if (n < 2)
        throw ConfigError("karras_schedule: N must be >= 2, got " + std::to_string(n));
    if (!(sigma_min > 0.0) || !(sigma_min < sigma_max))
        throw ConfigError("karras_schedule: need 0 < sigma_min < sigma_max");
    if (!(rho > 0.0))
        throw ConfigError("karras_schedule: rho must be positive");

    NoiseSchedule sched;
    sched.sigma_min = sigma_min;
    sched.sigma_max = sigma_max;
    sched.rho = rho;
    sched.levels.resize(n + 1);
    const double hi = std::pow(sigma_max, 1.0 / rho);
    const double lo = std::pow(sigma_min, 1.0 / rho);
    for (int i = 0; i < n; ++i)
        sched.levels[i] = std::pow(hi + static_cast<double>(i) / (n - 1) * (lo - hi), rho);
    sched.levels[n] = 0.0;
    return sched;
}

HSICube score_from_denoiser(const Denoiser& d, const HSICube& x, double sigma) {
    if (!(sigma > 0.0))
        throw DomainError("score_from_denoiser: sigma must be positive");
    HSICube dx = d.evaluate(x, sigma);
    const double inv = 1.0 / (sigma * sigma);
    for (std::size_t i = 0; i < dx.data.size(); ++i)
        dx.data[i] = (dx.data[i] - x.data[i]) * inv;
    return dx;
}

double edm_loss(const Denoiser& d, const HSICube& x0, double sigma, const HSICube& eps,
                const std::function<double(double)>& weight) {
    if (!x0.same_shape(eps))
        throw ShapeError("edm_loss: x0 and eps differ in shape");
    const double w = weight(sigma);
    if (!(w > 0.0))
        throw ConfigError("edm_loss: weight w(sigma) must be positive");
    HSICube noisy = x0;
    for (std::size_t i = 0; i < noisy.data.size(); ++i) noisy.data[i] += sigma * eps.data[i];
    HSICube den = d.evaluate(noisy, sigma);
    double sq = 0.0;
    for (std::size_t i = 0; i < den.data.size(); ++i) {
        const double r = den.data[i] - x0.data[i];
        sq += r * r;
    }
    return w * sq;
}

double default_edm_weight(double sigma) { return 1.0 / (sigma * sigma); }

} // namespace hsdiff
