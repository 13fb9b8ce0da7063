#pragma once

#include <span>
#include <vector>

#include "confide/types.hpp"

// Row-parallel batch kernels. Each kernel has an OpenMP driver here and a
// serial reference twin in kernels::serial; both share the same per-row
// routines and the same fixed-order reductions, so their results are
// bit-identical (asserted in tests, compared in the benchmark target).

namespace confide::kernels {

/// out = softmax(log_m * inv_t), floored and renormalized.
/// This is the single tempering routine shared by every module.
void tempered_row(std::span<const double> log_m, double inv_t, std::span<double> out);

/// out[j] proportional to phi_row[j] * tempered_row(log_m, inv_t)[j].
void combine_pl_row(std::span<const double> log_m, double inv_t,
                    std::span<const double> phi_row, std::span<double> out);

/// -log tempered_row(...)[y]; scratch must have k entries.
double row_nll(std::span<const double> log_m, double inv_t, int y, std::span<double> scratch);

/// -sum_j resp[j] * log tempered_row(...)[j].
double row_soft_nll(std::span<const double> log_m, double inv_t,
                    std::span<const double> resp_row, std::span<double> scratch);

/// log sum_y tempered_row(...)[y] * phi_row[y] (observed-data likelihood term).
double row_observed_ll(std::span<const double> log_m, double inv_t,
                       std::span<const double> phi_row, std::span<double> scratch);

/// Sum of row_nll over supervised rows (y >= 0), pairwise-reduced.
double nll_sum(const PackedData& d, double tau);

/// Sum of row_soft_nll over all rows; resp is n x K row-major.
double soft_nll_sum(const PackedData& d, std::span<const double> resp, double tau);

/// resp_out[l] = combine_pl_row(row l); n x K row-major.
void e_step(const PackedData& d, std::span<const double> phi, double tau,
            std::span<double> resp_out);

/// S[i*K+j] = sum over rows with h=i of resp[l][j]; blocked pairwise reduce.
std::vector<double> confusion_sums(const PackedData& d, std::span<const double> resp);

/// Sum of row_observed_ll over all rows with phi_row = phi[h_l].
double observed_loglik_sum(const PackedData& d, std::span<const double> phi, double tau);

namespace serial {
double nll_sum(const PackedData& d, double tau);
double soft_nll_sum(const PackedData& d, std::span<const double> resp, double tau);
void e_step(const PackedData& d, std::span<const double> phi, double tau,
            std::span<double> resp_out);
std::vector<double> confusion_sums(const PackedData& d, std::span<const double> resp);
double observed_loglik_sum(const PackedData& d, std::span<const double> phi, double tau);
} // namespace serial

} // namespace confide::kernels
