#pragma once

#include "hsdiff/forward.hpp"
#include "hsdiff/prior.hpp"

namespace hsdiff {

// Churn parameters of the stochastic EDM sampler.
struct ChurnParams {
    double s_churn = 10.0;
    double s_min = 0.05;
    double s_max = 50.0;
    double s_noise = 1.003;
};

// Perturbed-likelihood guidance scalars: weight = lambda / (sigma_y + t^2 nu).
struct GuidanceParams {
    double sigma_y = 0.001;
    double nu = 1.0;
    double lambda = 0.1;
};

struct SamplerConfig {
    NoiseSchedule schedule;
    ChurnParams churn;
    GuidanceParams guidance;
    int n_samples = 20;
    std::uint64_t seed = 0;
    double divergence_limit = 1e6;

    void validate() const;
};

struct CubeShape {
    int rows = 0;
    int cols = 0;
    WavelengthGrid grid;
};

// lambda / (sigma_y + t_hat^2 nu); zero denominator raises ConfigError.
double guidance_weight(double t_hat, double sigma_y, double nu, double lambda);

// w * grad_x || y - A(D(x; t)) ||^2 = 2 w J_D^T A^T (A(D(x; t)) - y),
// the exact gradient of the quadratic through the denoiser Jacobian.
HSICube likelihood_gradient(const Denoiser& d, const ForwardOperator& op, const Image& y,
                            const HSICube& x_hat, double t_hat, double w);

// One trajectory of the guided EDM stochastic sampler. Pass op == nullptr
// (or lambda == 0) for unconditional sampling; the trajectory is
// bit-identical either way for equal seeds. Deterministic given the seed.
HSICube guided_sample(const Denoiser& d, const ForwardOperator* op, const Image* y,
                      const CubeShape& shape, const SamplerConfig& cfg, std::uint64_t seed);

struct PosteriorEnsemble {
    std::vector<HSICube> members;
    std::vector<std::uint64_t> seeds;
    SamplerConfig config;
    bool guided = false;
    OperatorKind op_kind = OperatorKind::SRF;
};

// Thrown when members diverge; completed members are retained in `partial`.
class EnsembleFailure : public EnsembleError {
public:
    EnsembleFailure(const std::string& msg, std::vector<int> failed, PosteriorEnsemble partial)
        : EnsembleError(msg), failed_members(std::move(failed)),
          partial(std::make_shared<PosteriorEnsemble>(std::move(partial))) {}
    std::vector<int> failed_members;
    std::shared_ptr<PosteriorEnsemble> partial;
};

// n_samples independent trajectories with member seed = hash(root, index);
// members run concurrently, output ordering is by member index.
PosteriorEnsemble run_ensemble(const Denoiser& d, const ForwardOperator* op, const Image* y,
                               const CubeShape& shape, const SamplerConfig& cfg);

} // namespace hsdiff
