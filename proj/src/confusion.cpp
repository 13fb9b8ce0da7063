#include "confide/confusion.hpp"

#include <cmath>
#include <string>

#include "confide/errors.hpp"

namespace confide {

namespace {

// Floors and renormalizes every column of a row-major K x K matrix.
void normalize_columns(std::vector<double>& entries, int k) {
    std::vector<double> col(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) {
        for (int i = 0; i < k; ++i)
            col[static_cast<std::size_t>(i)] =
                entries[static_cast<std::size_t>(i) * static_cast<std::size_t>(k) +
                        static_cast<std::size_t>(j)];
        floor_and_normalize(col);
        for (int i = 0; i < k; ++i)
            entries[static_cast<std::size_t>(i) * static_cast<std::size_t>(k) +
                    static_cast<std::size_t>(j)] = col[static_cast<std::size_t>(i)];
    }
}

} // namespace

ConfusionMatrix ConfusionMatrix::from_entries(LabelSpace space, std::vector<double> entries) {
    if (entries.size() != static_cast<std::size_t>(space.k) * static_cast<std::size_t>(space.k))
        throw Error("WrongLength", "confusion matrix needs K*K entries");
    for (double x : entries)
        if (!(x >= 0.0) || !std::isfinite(x))
            throw Error("NegativeEntry", "confusion entries must be finite and nonnegative");
    normalize_columns(entries, space.k);
    ConfusionMatrix out;
    out.space_ = space;
    out.entries_ = std::move(entries);
    return out;
}

ConfusionMatrix ConfusionMatrix::identity(LabelSpace space) {
    const std::size_t k = static_cast<std::size_t>(space.k);
    std::vector<double> e(k * k, 0.0);
    for (std::size_t i = 0; i < k; ++i) e[i * k + i] = 1.0;
    return from_entries(space, std::move(e));
}

ConfusionMatrix ConfusionMatrix::uniform(LabelSpace space) {
    const std::size_t k = static_cast<std::size_t>(space.k);
    return from_entries(space, std::vector<double>(k * k, 1.0 / static_cast<double>(space.k)));
}

ConfusionMatrix ConfusionMatrix::symmetric(LabelSpace space, double diag) {
    const std::size_t k = static_cast<std::size_t>(space.k);
    const double off = (1.0 - diag) / static_cast<double>(space.k - 1);
    std::vector<double> e(k * k, off);
    for (std::size_t i = 0; i < k; ++i) e[i * k + i] = diag;
    return from_entries(space, std::move(e));
}

DirichletPrior::DirichletPrior(LabelSpace space_, double gamma_, double beta_)
    : space(space_), gamma(gamma_), beta(beta_) {
    if (!(gamma > 1.0))
        throw Error("BadPrior", "gamma must exceed 1, got " + std::to_string(gamma));
    if (!(beta >= 1.0))
        throw Error("BadPrior", "beta must be at least 1, got " + std::to_string(beta));
}

ConfusionMatrix DirichletPrior::mode() const {
    const int k = space.k;
    const double denom = alpha_total() - static_cast<double>(k);
    std::vector<double> e(static_cast<std::size_t>(k) * static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
            e[static_cast<std::size_t>(i) * static_cast<std::size_t>(k) +
              static_cast<std::size_t>(j)] = (alpha(i, j) - 1.0) / denom;
    return ConfusionMatrix::from_entries(space, std::move(e));
}

DirichletPrior prior_from_accuracy(double accuracy, LabelSpace space, double strength) {
    const double lo = 1.0 / static_cast<double>(space.k);
    if (!(accuracy > lo && accuracy < 1.0))
        throw Error("AccuracyOutOfRange",
                    "anchor accuracy " + std::to_string(accuracy) + " must lie in (1/K, 1)");
    if (!(strength > 0.0)) throw Error("AccuracyOutOfRange", "strength must be positive");
    const double gamma = 1.0 + accuracy * strength;
    const double beta = 1.0 + (1.0 - accuracy) * strength / static_cast<double>(space.k - 1);
    return DirichletPrior(space, gamma, beta);
}

namespace {

// counts[i*k+j] = #{rows with h=i, y=j}; col_counts[j] = #{rows with y=j}
void count_pairs(const CombinationDataset& data, std::vector<double>& counts,
                 std::vector<double>& col_counts) {
    const std::size_t k = static_cast<std::size_t>(data.k());
    counts.assign(k * k, 0.0);
    col_counts.assign(k, 0.0);
    for (const Example& row : data.rows()) {
        if (!row.true_label) continue;
        const std::size_t i = static_cast<std::size_t>(row.human_label);
        const std::size_t j = static_cast<std::size_t>(*row.true_label);
        counts[i * k + j] += 1.0;
        col_counts[j] += 1.0;
    }
}

} // namespace

ConfusionMatrix estimate_mle(const CombinationDataset& data) {
    if (data.supervised_count() == 0)
        throw Error("NoSupervisedRows", "MLE confusion estimate needs ground-truth labels");
    const int k = data.k();
    std::vector<double> counts, col_counts;
    count_pairs(data, counts, col_counts);
    std::vector<double> e(counts.size());
    for (int j = 0; j < k; ++j) {
        const double nj = col_counts[static_cast<std::size_t>(j)];
        for (int i = 0; i < k; ++i) {
            const std::size_t idx = static_cast<std::size_t>(i) * static_cast<std::size_t>(k) +
                                    static_cast<std::size_t>(j);
            // Unseen classes fall back to the uniform column.
            e[idx] = nj > 0.0 ? counts[idx] / nj : 1.0 / static_cast<double>(k);
        }
    }
    return ConfusionMatrix::from_entries(data.space(), std::move(e));
}

ConfusionMatrix estimate_map(const CombinationDataset& data, const DirichletPrior& prior) {
    if (data.k() != prior.space.k) throw Error("InconsistentK", "prior/dataset K mismatch");
    const int k = data.k();
    std::vector<double> counts, col_counts;
    count_pairs(data, counts, col_counts);
    std::vector<double> e(counts.size());
    for (int j = 0; j < k; ++j) {
        const double denom =
            prior.alpha_total() - static_cast<double>(k) + col_counts[static_cast<std::size_t>(j)];
        if (!(denom > 0.0))
            throw Error("DegenerateMode", "posterior mode undefined for column " + std::to_string(j));
        for (int i = 0; i < k; ++i) {
            const std::size_t idx = static_cast<std::size_t>(i) * static_cast<std::size_t>(k) +
                                    static_cast<std::size_t>(j);
            e[idx] = (prior.alpha(i, j) - 1.0 + counts[idx]) / denom;
        }
    }
    return ConfusionMatrix::from_entries(data.space(), std::move(e));
}

double human_confidence(const ConfusionMatrix& phi, int h, int y) {
    if (h < 0 || h >= phi.k() || y < 0 || y >= phi.k())
        throw Error("LabelOutOfRange", "confusion index out of range");
    return phi(h, y);
}

} // namespace confide
