#pragma once

#include <cstdint>
#include <vector>

#include "confide/confusion.hpp"
#include "confide/fit.hpp"
#include "confide/types.hpp"

namespace confide {

/// Conditionally independent synthetic world with exactly known ground
/// truth: per row, a true posterior p ~ Dirichlet(alpha), y ~ Cat(p), the
/// reported model vector m_i proportional to p_i^t_star (so tempering m at
/// t_star recovers p exactly), and h drawn from phi_star's column y —
/// except with probability rho, h copies the model argmax (the
/// dependence-injection knob).
struct SyntheticConfig {
    LabelSpace space;
    std::size_t n = 0;
    ProbVector class_prior;
    std::vector<double> dirichlet_alpha; // defaults to class_prior * concentration
    ConfusionMatrix phi_star;
    double t_star = 1.0;
    double rho = 0.0;
    std::uint64_t seed = 0;

    /// alpha = class_prior * concentration keeps E[p] = class_prior.
    static SyntheticConfig make(LabelSpace space, std::size_t n, ProbVector class_prior,
                                ConfusionMatrix phi_star, double t_star, double rho,
                                std::uint64_t seed, double concentration = 5.0);

    void validate() const;
};

struct SyntheticData {
    CombinationDataset data;
    std::vector<ProbVector> oracle_posteriors; // true p(y | m) per row
};

/// Deterministic under (config, seed); row generation is parallel with
/// per-row derived sub-seeds, so thread count cannot change the output.
SyntheticData generate(const SyntheticConfig& config);

struct LearningCurvePoint {
    std::size_t size = 0;
    double mean_error = 0.0;
    double std_error = 0.0; // sample standard deviation across seeds
};

/// For each (size, seed) cell: subsample `size` training rows without
/// replacement, fit `method`, and score the error rate on the full eval
/// set. Cells fan out to a worker pool; the output order is fixed.
std::vector<LearningCurvePoint> learning_curve(const CombinationDataset& train,
                                               const CombinationDataset& eval,
                                               FitMethod method, const FitOptions& opts,
                                               std::span<const std::size_t> sizes, int seeds,
                                               std::uint64_t base_seed);

} // namespace confide
