#pragma once

#include <optional>
#include <vector>

#include "confide/types.hpp"

namespace confide {

struct MetricsReport {
    std::size_t n = 0;
    double error_rate = 0.0;
    double nll = 0.0;
    double ece = 0.0;
    double cw_ece = 0.0;
    std::optional<double> mce_l1;
    int bins = 15;
};

double error_rate(std::span<const int> preds, std::span<const int> truth);

/// Mean -log posterior[y], floored at kProbFloor.
double nll(std::span<const ProbVector> posteriors, std::span<const int> truth);

/// Expected calibration error over equal-mass confidence bins: rows are
/// stably sorted by max-probability confidence and split into `bins`
/// contiguous groups (the remainder goes one-per-bin starting from the
/// lowest-confidence bin).
double ece(std::span<const ProbVector> posteriors, std::span<const int> truth, int bins = 15);

/// Classwise ECE: mean over classes j of the equal-mass binned gap between
/// mean posterior_j and the empirical frequency of y = j.
double cw_ece(std::span<const ProbVector> posteriors, std::span<const int> truth, int bins = 15);

/// l1 marginal calibration error. With oracle posteriors (synthetic data)
/// the expectation is exact; otherwise p(y=j|m_j) is estimated by
/// per-class equal-mass binning.
double mce_l1(std::span<const ProbVector> posteriors, std::span<const int> truth, int bins = 15,
              std::span<const ProbVector> oracle_posteriors = {});

MetricsReport evaluate_metrics(std::span<const ProbVector> posteriors, std::span<const int> truth,
                               int bins = 15,
                               std::span<const ProbVector> oracle_posteriors = {});

} // namespace confide
