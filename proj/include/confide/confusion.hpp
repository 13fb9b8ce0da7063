#pragma once

#include <span>
#include <vector>

#include "confide/types.hpp"

namespace confide {

/// Column-stochastic K x K matrix, entry (i, j) = p(h = i | y = j).
/// Stored row-major; every column sums to 1 and entries live in
/// [kProbFloor, 1] after smoothing.
class ConfusionMatrix {
public:
    ConfusionMatrix() = default;

    /// Takes raw nonnegative entries (row-major), floors and renormalizes
    /// each column.
    static ConfusionMatrix from_entries(LabelSpace space, std::vector<double> entries);

    static ConfusionMatrix identity(LabelSpace space);
    static ConfusionMatrix uniform(LabelSpace space);
    /// diag on the diagonal, (1-diag)/(K-1) elsewhere.
    static ConfusionMatrix symmetric(LabelSpace space, double diag);

    double operator()(int i, int j) const {
        return entries_[static_cast<std::size_t>(i) * static_cast<std::size_t>(k()) +
                        static_cast<std::size_t>(j)];
    }
    std::span<const double> row(int i) const {
        return {entries_.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(k()),
                static_cast<std::size_t>(k())};
    }
    const std::vector<double>& entries() const noexcept { return entries_; }
    const LabelSpace& space() const noexcept { return space_; }
    int k() const noexcept { return space_.k; }

private:
    LabelSpace space_;
    std::vector<double> entries_;
};

/// Per-column Dirichlet prior: pseudo-parameter gamma on the diagonal,
/// beta off the diagonal. gamma > 1 keeps the column mode well-defined.
struct DirichletPrior {
    LabelSpace space;
    double gamma = 0.0;
    double beta = 0.0;

    DirichletPrior(LabelSpace space_, double gamma_, double beta_);

    double alpha(int i, int j) const noexcept { return i == j ? gamma : beta; }
    /// sum_i alpha(i, j), identical for every column.
    double alpha_total() const noexcept {
        return gamma + static_cast<double>(space.k - 1) * beta;
    }
    /// Per-column Dirichlet mode (diagonal entry); equals the anchor
    /// accuracy when built by prior_from_accuracy.
    ConfusionMatrix mode() const;
};

/// Prior whose per-column mode has diagonal exactly `accuracy`, with
/// `strength` pseudo-observations per column.
/// Throws AccuracyOutOfRange unless 1/K < accuracy < 1.
DirichletPrior prior_from_accuracy(double accuracy, LabelSpace space, double strength = 10.0);

/// Relative-frequency estimate from the supervised rows. Columns for
/// classes never observed fall back to the uniform column.
ConfusionMatrix estimate_mle(const CombinationDataset& data);

/// Per-column posterior mode under the conjugate Dirichlet prior. Legal
/// with zero supervised rows (returns the prior mode).
ConfusionMatrix estimate_map(const CombinationDataset& data, const DirichletPrior& prior);

/// phi[h][y]: the class-level confidence the combination assigns the human.
double human_confidence(const ConfusionMatrix& phi, int h, int y);

} // namespace confide
