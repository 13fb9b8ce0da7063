#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "confide/calibration.hpp"
#include "confide/confusion.hpp"
#include "confide/types.hpp"

namespace confide {

/// Odds cap standing in for infinity at boundary probabilities.
inline constexpr double kOddsCap = 1e15;

struct BoundReport {
    double empirical_accuracy = 0.0;
    double bound_weak = 0.0;   // freq of r_m > 1 / r_h
    double bound_strong = 0.0; // max-ratio form
    std::size_t n = 0;
    std::optional<double> binary_gap; // accuracy - bound_weak, K = 2 only
};

struct ClassShift {
    double mean_given_y = 0.0;        // E[m_y | Y = y]
    double mean_given_y_and_hy = 0.0; // E[m_y | Y = y, H = y]
};

struct DependenceReport {
    double cmi = 0.0; // nats
    double mi = 0.0;  // nats
    std::vector<ClassShift> per_class_shift;
};

struct EstimationErrorReport {
    double eta_mean = 0.0;
    double bound = 0.0; // ||phi - phi_hat||_1 + MCE
    bool holds = false;
};

/// Calibrated-odds of the true class: c / (1 - c) with c = temper(m, t)[y].
double confidence_ratio_model(const ProbVector& m, Temperature t, int y);

/// Same with c = phi[h][y].
double confidence_ratio_human(const ConfusionMatrix& phi, int h, int y);

/// Empirical accuracy of the product-rule combination against its
/// confidence-ratio lower bounds. All rows must be supervised.
BoundReport theorem1_report(const CombinationDataset& data, const ConfusionMatrix& phi,
                            Temperature t);

/// Estimation-error check: mean per-row |phi p(y|m) - m^theta phi_hat|
/// against ||phi - phi_hat||_1 + MCE, both computed with the oracle
/// posteriors. Throws OracleRequired without them.
EstimationErrorReport theorem2_report(const CombinationDataset& data,
                                      std::span<const ProbVector> oracle_posteriors,
                                      const ConfusionMatrix& phi_true,
                                      const ConfusionMatrix& phi_hat, Temperature t);

/// |a1 b1 - a2 b2| <= |a1 - a2| + |b1 - b2| for values in [0, 1].
bool lemma1_check(double a1, double b1, double a2, double b2);

/// Plug-in conditional and unconditional mutual information (nats) between
/// the model's argmax label and the human label, plus the per-class
/// conditional-mean shift of m_y. All rows must be supervised.
DependenceReport cmi_discrete(const CombinationDataset& data);

} // namespace confide
