#pragma once

// Shared test fixtures: small dataset builders and seeded generators.

#include <optional>
#include <random>
#include <vector>

#include "confide/confusion.hpp"
#include "confide/simulate.hpp"
#include "confide/types.hpp"

namespace test_helpers {

inline confide::Example row(int h, std::vector<double> probs, std::optional<int> y = {}) {
    confide::Example e;
    e.human_label = h;
    e.model_probs =
        confide::ProbVector::validated(probs, static_cast<int>(probs.size()));
    e.true_label = y;
    return e;
}

inline confide::ProbVector uniform_prior(int k) {
    return confide::ProbVector::validated(
        std::vector<double>(static_cast<std::size_t>(k), 1.0 / static_cast<double>(k)), k);
}

inline confide::ProbVector random_prob(std::mt19937_64& rng, int k, double sharpness = 1.0) {
    std::gamma_distribution<double> gamma(sharpness, 1.0);
    std::vector<double> p(static_cast<std::size_t>(k));
    double s = 0.0;
    for (double& x : p) {
        x = gamma(rng) + 1e-9;
        s += x;
    }
    for (double& x : p) x /= s;
    return confide::ProbVector::validated(p, k);
}

/// Synthetic CI world shorthand used across tests.
inline confide::SyntheticData make_ci_data(int k, std::size_t n, double phi_diag, double t_star,
                                           std::uint64_t seed, double concentration = 5.0,
                                           double rho = 0.0) {
    const confide::LabelSpace space(k);
    return confide::generate(confide::SyntheticConfig::make(
        space, n, uniform_prior(k), confide::ConfusionMatrix::symmetric(space, phi_diag), t_star,
        rho, seed, concentration));
}

/// Copy of a dataset with every true label removed.
inline confide::CombinationDataset strip_labels(const confide::CombinationDataset& data) {
    std::vector<confide::Example> rows;
    rows.reserve(data.size());
    for (auto r : data.rows()) {
        r.true_label.reset();
        rows.push_back(std::move(r));
    }
    return confide::CombinationDataset(data.space(), std::move(rows));
}

} // namespace test_helpers
