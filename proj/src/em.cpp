#include "confide/em.hpp"

#include <cmath>

#include "confide/errors.hpp"
#include "confide/kernels.hpp"

namespace confide {

namespace {

void check_map_config(const EmConfig& config) {
    if (config.variant == EmVariant::MAP &&
        (!config.confusion_prior || !config.temp_prior))
        throw Error("ConfigInvalid", "MAP EM requires both a confusion prior and a temperature prior");
}

ConfusionMatrix m_step_confusion_packed(const PackedData& packed, LabelSpace space,
                                        std::span<const double> resp, EmVariant variant,
                                        const std::optional<DirichletPrior>& prior) {
    const int k = space.k;
    const std::vector<double> sums = kernels::confusion_sums(packed, resp);
    std::vector<double> col_mass(static_cast<std::size_t>(k), 0.0);
    for (int j = 0; j < k; ++j)
        for (int i = 0; i < k; ++i)
            col_mass[static_cast<std::size_t>(j)] +=
                sums[static_cast<std::size_t>(i) * static_cast<std::size_t>(k) +
                     static_cast<std::size_t>(j)];

    std::vector<double> e(sums.size());
    for (int j = 0; j < k; ++j) {
        const double mass = col_mass[static_cast<std::size_t>(j)];
        for (int i = 0; i < k; ++i) {
            const std::size_t idx = static_cast<std::size_t>(i) * static_cast<std::size_t>(k) +
                                    static_cast<std::size_t>(j);
            if (variant == EmVariant::ML) {
                e[idx] = mass < 1e-9 ? 1.0 / static_cast<double>(k) : sums[idx] / mass;
            } else {
                const double denom =
                    std::max(prior->alpha_total() - static_cast<double>(k) + mass, 1e-9);
                e[idx] = (prior->alpha(i, j) - 1.0 + sums[idx]) / denom;
            }
        }
    }
    return ConfusionMatrix::from_entries(space, std::move(e));
}

Temperature m_step_temperature_packed(const PackedData& packed, std::span<const double> resp,
                                      EmVariant variant,
                                      const std::optional<LogTempPrior>& prior, double tol) {
    if (variant == EmVariant::ML) {
        auto objective = [&](double tau) { return kernels::soft_nll_sum(packed, resp, tau); };
        return Temperature(std::exp(detail::minimize_scalar(objective, kTauMin, kTauMax, 0.0, tol)));
    }
    const double inv_two_var = 1.0 / (2.0 * prior->sigma * prior->sigma);
    auto objective = [&](double tau) {
        const double d = tau - prior->mu;
        return kernels::soft_nll_sum(packed, resp, tau) + d * d * inv_two_var;
    };
    return Temperature(
        std::exp(detail::minimize_scalar(objective, kTauMin, kTauMax, prior->mu, tol)));
}

// Observed-data objective; for MAP adds the Dirichlet and Gaussian
// log-densities (up to constants).
double penalized_objective(const PackedData& packed, const ConfusionMatrix& phi, double tau,
                           const EmConfig& config) {
    double obj = kernels::observed_loglik_sum(packed, phi.entries(), tau);
    if (config.variant == EmVariant::MAP) {
        const DirichletPrior& dp = *config.confusion_prior;
        for (int i = 0; i < phi.k(); ++i)
            for (int j = 0; j < phi.k(); ++j)
                obj += (dp.alpha(i, j) - 1.0) * std::log(phi(i, j));
        const LogTempPrior& tp = *config.temp_prior;
        const double d = tau - tp.mu;
        obj -= d * d / (2.0 * tp.sigma * tp.sigma);
    }
    return obj;
}

} // namespace

std::vector<double> e_step(const CombinationDataset& data, const ConfusionMatrix& phi,
                           Temperature t) {
    const PackedData packed = PackedData::from(data);
    std::vector<double> resp(packed.n * static_cast<std::size_t>(packed.k));
    kernels::e_step(packed, phi.entries(), t.tau(), resp);
    return resp;
}

ConfusionMatrix m_step_confusion(const CombinationDataset& data, std::span<const double> resp,
                                 EmVariant variant, const std::optional<DirichletPrior>& prior) {
    if (variant == EmVariant::MAP && !prior)
        throw Error("ConfigInvalid", "MAP confusion M-step requires a prior");
    return m_step_confusion_packed(PackedData::from(data), data.space(), resp, variant, prior);
}

Temperature m_step_temperature(const CombinationDataset& data, std::span<const double> resp,
                               EmVariant variant, const std::optional<LogTempPrior>& prior,
                               double tol) {
    if (variant == EmVariant::MAP && !prior)
        throw Error("ConfigInvalid", "MAP temperature M-step requires a prior");
    return m_step_temperature_packed(PackedData::from(data), resp, variant, prior, tol);
}

std::pair<CombinerParams, EmTrace> run_em(const CombinationDataset& data, const EmConfig& config) {
    check_map_config(config);
    if (data.size() == 0) throw Error("EmptySplit", "EM needs at least one row");

    const PackedData packed = PackedData::from(data);

    // Diagonally dominant start breaks the label-permutation symmetry.
    ConfusionMatrix phi = config.variant == EmVariant::MAP
                              ? config.confusion_prior->mode()
                              : ConfusionMatrix::symmetric(data.space(), 0.7);
    double t0 = 1.0;
    if (config.init_temperature) t0 = *config.init_temperature;
    else if (config.variant == EmVariant::MAP) t0 = std::exp(config.temp_prior->mu);
    Temperature t(t0);

    EmTrace trace;
    trace.loglik_history.push_back(penalized_objective(packed, phi, t.tau(), config));

    std::vector<double> resp(packed.n * static_cast<std::size_t>(packed.k));
    for (int it = 0; it < config.max_iters; ++it) {
        kernels::e_step(packed, phi.entries(), t.tau(), resp);
        phi = m_step_confusion_packed(packed, data.space(), resp, config.variant,
                                      config.confusion_prior);
        t = m_step_temperature_packed(packed, resp, config.variant, config.temp_prior,
                                      config.fit_tol);

        const double obj = penalized_objective(packed, phi, t.tau(), config);
        const double prev = trace.loglik_history.back();
        trace.loglik_history.push_back(obj);
        trace.iterations = it + 1;
        if (std::abs(obj - prev) <= config.loglik_tol * (1.0 + std::abs(prev))) {
            trace.converged = true;
            break;
        }
    }

    CombinerParams params;
    params.method = Method::PL_EM;
    params.space = data.space();
    params.phi_human = std::move(phi);
    params.temperature = t;
    return {std::move(params), std::move(trace)};
}

} // namespace confide
