#include "confide/types.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "confide/errors.hpp"

namespace confide {

LabelSpace::LabelSpace(int k_) : k(k_) {
    if (k < 2) throw Error("BadLabelSpace", "need at least 2 classes, got " + std::to_string(k));
}

void floor_and_normalize(std::span<double> probs, double floor) {
    double sum = 0.0;
    for (double& x : probs) {
        if (x < 0.0) x = 0.0;
        sum += x;
    }
    if (sum <= 0.0) {
        const double u = 1.0 / static_cast<double>(probs.size());
        for (double& x : probs) x = u;
        return;
    }
    for (double& x : probs) x /= sum;
    // Iterate because rescaling can push an entry just above the floor
    // below it; the floored set only grows, so this terminates.
    for (int pass = 0; pass < 8; ++pass) {
        double rest = 0.0;
        int floored = 0;
        for (double x : probs) {
            if (x <= floor) ++floored;
            else rest += x;
        }
        const double target = 1.0 - floored * floor;
        const double scale = target / rest;
        bool stable = true;
        for (double& x : probs) {
            if (x <= floor) x = floor;
            else {
                x *= scale;
                if (x <= floor) stable = false;
            }
        }
        if (stable) return;
    }
}

ProbVector ProbVector::validated(std::span<const double> raw, int k, double tolerance) {
    if (static_cast<int>(raw.size()) != k)
        throw Error("WrongLength", "expected " + std::to_string(k) + " probabilities, got " +
                                        std::to_string(raw.size()));
    double sum = 0.0;
    for (double x : raw) {
        if (x < -tolerance)
            throw Error("NegativeEntry", "probability entry " + std::to_string(x) + " is negative");
        sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-6)
        throw Error("BadSum", "probabilities sum to " + std::to_string(sum));
    std::vector<double> p(raw.begin(), raw.end());
    floor_and_normalize(p);
    return ProbVector(std::move(p));
}

ProbVector ProbVector::from_normalized(std::vector<double> probs) {
    return ProbVector(std::move(probs));
}

int ProbVector::argmax() const noexcept {
    int best = 0;
    for (int i = 1; i < size(); ++i)
        if (p_[static_cast<std::size_t>(i)] > p_[static_cast<std::size_t>(best)]) best = i;
    return best;
}

CombinationDataset::CombinationDataset(LabelSpace space, std::vector<Example> rows)
    : space_(space), rows_(std::move(rows)) {
    for (const Example& row : rows_) {
        if (row.human_label < 0 || row.human_label >= space_.k)
            throw Error("LabelOutOfRange", "human label " + std::to_string(row.human_label));
        if (row.true_label && (*row.true_label < 0 || *row.true_label >= space_.k))
            throw Error("LabelOutOfRange", "true label " + std::to_string(*row.true_label));
        if (row.model_probs.size() != space_.k)
            throw Error("InconsistentK", "row has " + std::to_string(row.model_probs.size()) +
                                             " probabilities, dataset K=" + std::to_string(space_.k));
        if (row.true_label) ++supervised_;
    }
}

void CombinationDataset::push_row(Example row) {
    if (row.human_label < 0 || row.human_label >= space_.k)
        throw Error("LabelOutOfRange", "human label " + std::to_string(row.human_label));
    if (row.true_label && (*row.true_label < 0 || *row.true_label >= space_.k))
        throw Error("LabelOutOfRange", "true label " + std::to_string(*row.true_label));
    if (row.model_probs.size() != space_.k)
        throw Error("InconsistentK", "row probability count mismatch");
    if (row.true_label) ++supervised_;
    rows_.push_back(std::move(row));
}

PackedData PackedData::from(const CombinationDataset& data) {
    PackedData out;
    out.k = data.k();
    out.n = data.size();
    out.log_probs.resize(out.n * static_cast<std::size_t>(out.k));
    out.h.resize(out.n);
    out.y.resize(out.n);
    for (std::size_t i = 0; i < out.n; ++i) {
        const Example& row = data.rows()[i];
        out.h[i] = row.human_label;
        out.y[i] = row.true_label ? *row.true_label : -1;
        for (int j = 0; j < out.k; ++j)
            out.log_probs[i * static_cast<std::size_t>(out.k) + static_cast<std::size_t>(j)] =
                std::log(row.model_probs[static_cast<std::size_t>(j)]);
    }
    return out;
}

} // namespace confide
