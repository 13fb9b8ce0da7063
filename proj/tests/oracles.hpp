#pragma once

// Independent brute-force oracles. These deliberately re-derive results
// through a different code path than the library so tests can compare
// against them.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "confide/types.hpp"

namespace test_oracles {

/// Equal-mass binned ECE, written directly from the definition: stable
/// ascending sort by confidence, remainder rows assigned one-per-bin from
/// the lowest-confidence bin.
inline double brute_force_ece(std::span<const confide::ProbVector> posteriors,
                              std::span<const int> truth, int bins) {
    const std::size_t n = posteriors.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return posteriors[a][static_cast<std::size_t>(posteriors[a].argmax())] <
               posteriors[b][static_cast<std::size_t>(posteriors[b].argmax())];
    });
    double total = 0.0;
    std::size_t start = 0;
    for (int b = 0; b < bins; ++b) {
        std::size_t count = n / static_cast<std::size_t>(bins);
        if (static_cast<std::size_t>(b) < n % static_cast<std::size_t>(bins)) ++count;
        double acc = 0.0, conf = 0.0;
        for (std::size_t p = start; p < start + count; ++p) {
            const std::size_t i = idx[p];
            const int pred = posteriors[i].argmax();
            acc += pred == truth[i] ? 1.0 : 0.0;
            conf += posteriors[i][static_cast<std::size_t>(pred)];
        }
        total += (static_cast<double>(count) / static_cast<double>(n)) *
                 std::abs(acc / static_cast<double>(count) - conf / static_cast<double>(count));
        start += count;
    }
    return total;
}

/// Classwise equal-mass ECE from the definition.
inline double brute_force_cw_ece(std::span<const confide::ProbVector> posteriors,
                                 std::span<const int> truth, int bins) {
    const std::size_t n = posteriors.size();
    const int k = posteriors[0].size();
    double total = 0.0;
    for (int j = 0; j < k; ++j) {
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            return posteriors[a][static_cast<std::size_t>(j)] <
                   posteriors[b][static_cast<std::size_t>(j)];
        });
        double ece_j = 0.0;
        std::size_t start = 0;
        for (int b = 0; b < bins; ++b) {
            std::size_t count = n / static_cast<std::size_t>(bins);
            if (static_cast<std::size_t>(b) < n % static_cast<std::size_t>(bins)) ++count;
            double freq = 0.0, mean_p = 0.0;
            for (std::size_t p = start; p < start + count; ++p) {
                const std::size_t i = idx[p];
                freq += truth[i] == j ? 1.0 : 0.0;
                mean_p += posteriors[i][static_cast<std::size_t>(j)];
            }
            ece_j += (static_cast<double>(count) / static_cast<double>(n)) *
                     std::abs(freq / static_cast<double>(count) -
                              mean_p / static_cast<double>(count));
            start += count;
        }
        total += ece_j;
    }
    return total / static_cast<double>(k);
}

/// Dense-grid argmin of a 1-D objective; the reference for the golden
/// section fits.
template <class F>
double grid_argmin(F&& f, double lo, double hi, int points) {
    double best_x = lo, best_f = f(lo);
    for (int i = 1; i < points; ++i) {
        const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
        const double fx = f(x);
        if (fx < best_f) {
            best_f = fx;
            best_x = x;
        }
    }
    return best_x;
}

} // namespace test_oracles
