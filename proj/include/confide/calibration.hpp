#pragma once

#include <functional>
#include <vector>

#include "confide/types.hpp"

namespace confide {

/// Clamped search domain for the temperature, in log space.
inline constexpr double kTauMin = -6.907755278982137; // log(1e-3)
inline constexpr double kTauMax = 6.907755278982137;  // log(1e3)

/// Temperature T > 0; T > 1 corrects overconfidence.
struct Temperature {
    double t = 1.0;

    explicit Temperature(double t_);
    Temperature() = default;

    double tau() const; // log T
};

/// Gaussian prior on tau = log T.
struct LogTempPrior {
    double mu = 0.5;
    double sigma = 0.5;

    LogTempPrior(double mu_, double sigma_);
    LogTempPrior() = default;
};

/// Discrete posterior over tau: quadrature nodes with normalized weights.
struct TemperaturePosterior {
    std::vector<double> grid;    // strictly increasing tau values
    std::vector<double> weights; // nonnegative, sum to 1
};

/// m_j -> m_j^(1/T), renormalized (computed in log space).
ProbVector temper(const ProbVector& m, Temperature t);

/// Mean negative log-likelihood of the supervised rows at log-temperature tau.
double nll_of_temperature(const CombinationDataset& data, double tau);

/// Maximum-likelihood temperature: coarse 64-point bracket over the clamped
/// tau domain, then golden-section to |interval| < tol. A flat objective
/// returns the domain value closest to tau = 0.
Temperature fit_temperature_ml(const CombinationDataset& data, double tol = 1e-6);

/// MAP temperature under the Gaussian log-temperature prior; with no
/// supervised rows returns the prior mode exp(mu).
Temperature fit_temperature_map(const CombinationDataset& data, const LogTempPrior& prior,
                                double tol = 1e-6);

/// Grid posterior over tau: uniform nodes on
/// [min(mu-4*sigma, tau_map-2), max(mu+4*sigma, tau_map+2)], weights from
/// the normalized log-posterior. nodes must be odd and >= 33.
TemperaturePosterior posterior_temperature(const CombinationDataset& data,
                                           const LogTempPrior& prior, int nodes = 513);

/// Posterior-averaged calibrated probabilities: sum_g w_g * temper(m, e^tau_g),
/// renormalized.
ProbVector bayes_calibrated_probs(const ProbVector& m, const TemperaturePosterior& post);

namespace detail {
/// Shared 1-D minimizer over [lo, hi]: 64-point coarse scan brackets the
/// global minimum, golden-section refines to |interval| < tol. When the
/// coarse scan is flat, returns tie_center clamped into the domain.
double minimize_scalar(const std::function<double(double)>& f, double lo, double hi,
                       double tie_center, double tol);
} // namespace detail

} // namespace confide
