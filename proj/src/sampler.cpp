#include "hsdiff/sampler.hpp"

#include <cmath>
#include <string>

#include "hsdiff/rng.hpp"

namespace hsdiff {

void SamplerConfig::validate() const {
    if (schedule.levels.size() < 2 || schedule.levels.back() != 0.0)
        throw ConfigError("sampler: schedule must end at level 0");
    if (churn.s_churn < 0.0) throw ConfigError("sampler: S_churn must be >= 0");
    if (!(churn.s_noise > 0.0)) throw ConfigError("sampler: S_noise must be > 0");
    if (guidance.sigma_y < 0.0) throw ConfigError("sampler: sigma_y must be >= 0");
    if (guidance.nu < 0.0) throw ConfigError("sampler: nu must be >= 0");
    if (guidance.lambda < 0.0) throw ConfigError("sampler: lambda must be >= 0");
    if (n_samples < 1) throw ConfigError("sampler: N_samples must be >= 1");
}

double guidance_weight(double t_hat, double sigma_y, double nu, double lambda) {
    const double denom = sigma_y + t_hat * t_hat * nu;
    if (!(denom > 0.0))
        throw ConfigError("guidance_weight: zero denominator (sigma_y + t^2 nu)");
    return lambda / denom;
}

namespace {

// gradient with the denoiser output already at hand
HSICube gradient_core(const Denoiser& d, const ForwardOperator& op, const Image& y,
                      const HSICube& x_hat, double t_hat, double w, const HSICube& denoised) {
    Image resid = op.apply(denoised);
    if (!resid.same_shape(y))
        throw ShapeError("likelihood_gradient: measurement shape mismatch");
    for (std::size_t i = 0; i < resid.data.size(); ++i) resid.data[i] -= y.data[i];
    HSICube back = op.adjoint(resid);
    HSICube grad = d.vjp(x_hat, t_hat, back);
    for (double& g : grad.data) g *= 2.0 * w;
    return grad;
}

} // namespace

HSICube likelihood_gradient(const Denoiser& d, const ForwardOperator& op, const Image& y,
                            const HSICube& x_hat, double t_hat, double w) {
    if (!(t_hat > 0.0))
        throw DomainError("likelihood_gradient: t_hat must be positive");
    return gradient_core(d, op, y, x_hat, t_hat, w, d.evaluate(x_hat, t_hat));
}

HSICube guided_sample(const Denoiser& d, const ForwardOperator* op, const Image* y,
                      const CubeShape& shape, const SamplerConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    const bool guided = cfg.guidance.lambda > 0.0;
    if (guided && (op == nullptr || y == nullptr))
        throw ConfigError("guided_sample: lambda > 0 requires an operator and a measurement");
    if (op != nullptr && (op->rows() != shape.rows || op->cols() != shape.cols ||
                          op->bands() != shape.grid.bands()))
        throw ShapeError("guided_sample: operator shape != sample shape");

    const auto& t = cfg.schedule.levels;
    const int n = cfg.schedule.steps();
    const double gamma_on = std::min(cfg.churn.s_churn / n, std::sqrt(2.0) - 1.0);

    Rng rng(seed);
    HSICube x(shape.rows, shape.cols, shape.grid, Domain::Model);
    for (double& v : x.data) v = t[0] * rng.normal();

    HSICube noise = x;  // scratch, same shape

    for (int i = 0; i < n; ++i) {
        const double ti = t[i];
        const double tn = t[i + 1];
        const double gamma = (ti >= cfg.churn.s_min && ti <= cfg.churn.s_max) ? gamma_on : 0.0;
        const double t_hat = ti + gamma * ti;

        for (double& v : noise.data) v = cfg.churn.s_noise * rng.normal();
        const double amp = std::sqrt(std::max(t_hat * t_hat - ti * ti, 0.0));
        HSICube x_hat = x;
        if (amp > 0.0)
            for (std::size_t p = 0; p < x_hat.data.size(); ++p) x_hat.data[p] += amp * noise.data[p];

        // slope at t_hat
        HSICube den = d.evaluate(x_hat, t_hat);
        HSICube slope = x_hat;
        for (std::size_t p = 0; p < slope.data.size(); ++p)
            slope.data[p] = (x_hat.data[p] - den.data[p]) / t_hat;
        if (guided) {
            const double w = guidance_weight(t_hat, cfg.guidance.sigma_y, cfg.guidance.nu,
                                             cfg.guidance.lambda);
            HSICube grad = gradient_core(d, *op, *y, x_hat, t_hat, w, den);
            for (std::size_t p = 0; p < slope.data.size(); ++p)
                slope.data[p] += t_hat * grad.data[p];
        }

        // Euler step from t_hat to t_{i+1}
        const double h = tn - t_hat;
        HSICube x_next = x_hat;
        for (std::size_t p = 0; p < x_next.data.size(); ++p)
            x_next.data[p] += h * slope.data[p];

        if (tn != 0.0) {
            // Heun correction with the weight and gradient re-evaluated at t_{i+1}
            HSICube den2 = d.evaluate(x_next, tn);
            HSICube slope2 = x_next;
            for (std::size_t p = 0; p < slope2.data.size(); ++p)
                slope2.data[p] = (x_next.data[p] - den2.data[p]) / tn;
            if (guided) {
                const double w2 = guidance_weight(tn, cfg.guidance.sigma_y, cfg.guidance.nu,
                                                  cfg.guidance.lambda);
                HSICube grad2 = gradient_core(d, *op, *y, x_next, tn, w2, den2);
                for (std::size_t p = 0; p < slope2.data.size(); ++p)
                    slope2.data[p] += tn * grad2.data[p];
            }
            for (std::size_t p = 0; p < x_next.data.size(); ++p)
                x_next.data[p] = x_hat.data[p] + h * 0.5 * (slope.data[p] + slope2.data[p]);
        }

        x = std::move(x_next);
        for (double v : x.data)
            if (!(std::abs(v) <= cfg.divergence_limit))
                throw DivergenceError("guided_sample: state exceeded " +
                                      std::to_string(cfg.divergence_limit) + " at step " +
                                      std::to_string(i));
    }
    return x;
}

PosteriorEnsemble run_ensemble(const Denoiser& d, const ForwardOperator* op, const Image* y,
                               const CubeShape& shape, const SamplerConfig& cfg) {
    cfg.validate();
    PosteriorEnsemble ens;
    ens.config = cfg;
    ens.guided = cfg.guidance.lambda > 0.0 && op != nullptr;
    if (op != nullptr) ens.op_kind = op->kind();
    ens.members.resize(cfg.n_samples);
    ens.seeds.resize(cfg.n_samples);
    for (int k = 0; k < cfg.n_samples; ++k)
        ens.seeds[k] = derive_seed(cfg.seed, static_cast<std::uint64_t>(k));

    std::vector<std::string> failures(cfg.n_samples);
    std::vector<char> failed(cfg.n_samples, 0);
#pragma omp parallel for schedule(dynamic)
    for (int k = 0; k < cfg.n_samples; ++k) {
        try {
            ens.members[k] = guided_sample(d, op, y, shape, cfg, ens.seeds[k]);
        } catch (const std::exception& e) {
            failed[k] = 1;
            failures[k] = e.what();
        }
    }
    std::vector<int> failed_idx;
    for (int k = 0; k < cfg.n_samples; ++k)
        if (failed[k]) failed_idx.push_back(k);
    if (!failed_idx.empty()) {
        std::string msg = "ensemble member " + std::to_string(failed_idx.front()) +
                          " failed: " + failures[failed_idx.front()];
        PosteriorEnsemble partial;
        partial.config = ens.config;
        partial.guided = ens.guided;
        partial.op_kind = ens.op_kind;
        for (int k = 0; k < cfg.n_samples; ++k)
            if (!failed[k]) {
                partial.members.push_back(std::move(ens.members[k]));
                partial.seeds.push_back(ens.seeds[k]);
            }
        throw EnsembleFailure(msg, std::move(failed_idx), std::move(partial));
    }
    return ens;
}

} // namespace hsdiff
