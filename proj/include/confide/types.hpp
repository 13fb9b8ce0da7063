#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace confide {

/// Probability floor applied before any logarithm or normalization.
inline constexpr double kProbFloor = 1e-12;

/// Number of classes K. Labels are 0-based indices in [0, K).
struct LabelSpace {
    int k = 0;

    explicit LabelSpace(int k_);
    LabelSpace() = default;

    bool operator==(const LabelSpace&) const = default;
};

/// Floors entries of a nonnegative vector at kProbFloor and rescales the
/// unfloored entries so the total is 1. The floored entries keep the exact
/// floor value, so min(out) >= kProbFloor and |sum(out) - 1| is at machine
/// precision. Input must have at least one entry well above the floor.
void floor_and_normalize(std::span<double> probs, double floor = kProbFloor);

/// A length-K probability vector: entries in [kProbFloor, 1], summing to 1.
class ProbVector {
public:
    ProbVector() = default;

    /// Validates a raw vector against LabelSpace{k}:
    ///   WrongLength   if raw.size() != k
    ///   NegativeEntry if any entry < -tolerance
    ///   BadSum        if |sum - 1| > 1e-6
    /// then clamps entries into [kProbFloor, 1] and renormalizes.
    static ProbVector validated(std::span<const double> raw, int k,
                                double tolerance = 1e-9);

    /// Wraps a vector already known to satisfy the invariants (floored and
    /// normalized). Used on internal hot paths; no checks.
    static ProbVector from_normalized(std::vector<double> probs);

    const std::vector<double>& probs() const noexcept { return p_; }
    double operator[](std::size_t i) const noexcept { return p_[i]; }
    int size() const noexcept { return static_cast<int>(p_.size()); }

    /// Index of the largest entry; ties go to the smallest index.
    int argmax() const noexcept;

private:
    explicit ProbVector(std::vector<double> p) : p_(std::move(p)) {}
    std::vector<double> p_;
};

/// One combination-dataset row: hard human label, model probability vector,
/// and the ground-truth label when known.
struct Example {
    int human_label = 0;
    ProbVector model_probs;
    std::optional<int> true_label;
};

/// An ordered dataset of rows sharing one label space.
class CombinationDataset {
public:
    CombinationDataset() = default;
    CombinationDataset(LabelSpace space, std::vector<Example> rows);

    const LabelSpace& space() const noexcept { return space_; }
    int k() const noexcept { return space_.k; }
    const std::vector<Example>& rows() const noexcept { return rows_; }
    std::size_t size() const noexcept { return rows_.size(); }
    std::size_t supervised_count() const noexcept { return supervised_; }

    void push_row(Example row);

private:
    LabelSpace space_;
    std::vector<Example> rows_;
    std::size_t supervised_ = 0;
};

/// Flat row-major views of a dataset for the batch kernels:
/// log_probs is n x K, h and y are per-row labels (y = -1 when absent).
struct PackedData {
    int k = 0;
    std::size_t n = 0;
    std::vector<double> log_probs;
    std::vector<int> h;
    std::vector<int> y;

    static PackedData from(const CombinationDataset& data);

    std::span<const double> log_row(std::size_t i) const {
        return {log_probs.data() + i * static_cast<std::size_t>(k),
                static_cast<std::size_t>(k)};
    }
};

} // namespace confide
