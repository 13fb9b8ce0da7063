#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "confide/calibration.hpp"
#include "confide/combiner.hpp"
#include "confide/confusion.hpp"
#include "confide/types.hpp"

namespace confide {

enum class EmVariant { ML, MAP };

struct EmConfig {
    EmVariant variant = EmVariant::MAP;
    std::optional<DirichletPrior> confusion_prior; // required for MAP
    std::optional<LogTempPrior> temp_prior;        // required for MAP
    int max_iters = 500;
    double loglik_tol = 1e-6;
    std::optional<double> init_temperature;        // default: MAP e^mu, ML 1.0
    double fit_tol = 1e-6;                         // inner 1-D search tolerance
};

struct EmTrace {
    int iterations = 0;
    std::vector<double> loglik_history; // observed-data (penalized) objective
    bool converged = false;
};

/// E-step: responsibilities resp[l][j] = combine_pl(h_l, m_l, phi, t)[j],
/// returned n x K row-major.
std::vector<double> e_step(const CombinationDataset& data, const ConfusionMatrix& phi,
                           Temperature t);

/// M-step for the confusion matrix. ML: soft relative frequencies; columns
/// with no responsibility mass fall back to uniform. MAP: Dirichlet
/// posterior-mode update with the denominator floored away from zero.
ConfusionMatrix m_step_confusion(const CombinationDataset& data, std::span<const double> resp,
                                 EmVariant variant, const std::optional<DirichletPrior>& prior);

/// M-step for the temperature: maximizes the responsibility-weighted
/// log-likelihood (plus the log-prior for MAP) over the clamped tau domain.
Temperature m_step_temperature(const CombinationDataset& data, std::span<const double> resp,
                               EmVariant variant, const std::optional<LogTempPrior>& prior,
                               double tol = 1e-6);

/// Full EM loop for (phi, T) with latent ground truth. Ignores any true
/// labels present in `data`.
std::pair<CombinerParams, EmTrace> run_em(const CombinationDataset& data, const EmConfig& config);

} // namespace confide
