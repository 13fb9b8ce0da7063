#include "confide/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "confide/parallel.hpp"

namespace confide::kernels {

void tempered_row(std::span<const double> log_m, double inv_t, std::span<double> out) {
    const std::size_t k = log_m.size();
    double max_l = -HUGE_VAL;
    for (std::size_t j = 0; j < k; ++j) {
        out[j] = log_m[j] * inv_t;
        max_l = std::max(max_l, out[j]);
    }
    for (std::size_t j = 0; j < k; ++j) out[j] = std::exp(out[j] - max_l);
    floor_and_normalize(out);
}

void combine_pl_row(std::span<const double> log_m, double inv_t,
                    std::span<const double> phi_row, std::span<double> out) {
    tempered_row(log_m, inv_t, out);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] *= phi_row[j];
    floor_and_normalize(out);
}

double row_nll(std::span<const double> log_m, double inv_t, int y, std::span<double> scratch) {
    tempered_row(log_m, inv_t, scratch);
    return -std::log(scratch[static_cast<std::size_t>(y)]);
}

double row_soft_nll(std::span<const double> log_m, double inv_t,
                    std::span<const double> resp_row, std::span<double> scratch) {
    tempered_row(log_m, inv_t, scratch);
    double s = 0.0;
    for (std::size_t j = 0; j < scratch.size(); ++j) s -= resp_row[j] * std::log(scratch[j]);
    return s;
}

double row_observed_ll(std::span<const double> log_m, double inv_t,
                       std::span<const double> phi_row, std::span<double> scratch) {
    tempered_row(log_m, inv_t, scratch);
    double s = 0.0;
    for (std::size_t j = 0; j < scratch.size(); ++j) s += scratch[j] * phi_row[j];
    return std::log(s);
}

namespace {

const double* phi_row_ptr(std::span<const double> phi, int h, int k) {
    return phi.data() + static_cast<std::size_t>(h) * static_cast<std::size_t>(k);
}

template <class RowFn>
double map_sum_parallel(std::size_t n, RowFn&& fn) {
    std::vector<double> terms(n);
#pragma omp parallel num_threads(confide::par::thread_count())
    {
        std::vector<double> scratch;
#pragma omp for schedule(static)
        for (long long i = 0; i < static_cast<long long>(n); ++i)
            terms[static_cast<std::size_t>(i)] = fn(static_cast<std::size_t>(i), scratch);
    }
    return par::pairwise_sum(terms);
}

template <class RowFn>
double map_sum_serial(std::size_t n, RowFn&& fn) {
    std::vector<double> terms(n);
    std::vector<double> scratch;
    for (std::size_t i = 0; i < n; ++i) terms[i] = fn(i, scratch);
    return par::pairwise_sum(terms);
}

struct NllRow {
    const PackedData& d;
    double inv_t;
    double operator()(std::size_t i, std::vector<double>& scratch) const {
        if (d.y[i] < 0) return 0.0;
        scratch.resize(static_cast<std::size_t>(d.k));
        return row_nll(d.log_row(i), inv_t, d.y[i], scratch);
    }
};

struct SoftNllRow {
    const PackedData& d;
    std::span<const double> resp;
    double inv_t;
    double operator()(std::size_t i, std::vector<double>& scratch) const {
        scratch.resize(static_cast<std::size_t>(d.k));
        const std::size_t k = static_cast<std::size_t>(d.k);
        return row_soft_nll(d.log_row(i), inv_t, resp.subspan(i * k, k), scratch);
    }
};

struct ObservedRow {
    const PackedData& d;
    std::span<const double> phi;
    double inv_t;
    double operator()(std::size_t i, std::vector<double>& scratch) const {
        scratch.resize(static_cast<std::size_t>(d.k));
        return row_observed_ll(d.log_row(i), inv_t,
                               {phi_row_ptr(phi, d.h[i], d.k), static_cast<std::size_t>(d.k)},
                               scratch);
    }
};

std::vector<double> confusion_sums_impl(const PackedData& d, std::span<const double> resp,
                                        bool parallel) {
    const std::size_t k = static_cast<std::size_t>(d.k);
    using Partial = std::vector<double>;
    auto block_fn = [&](Partial& acc, std::size_t lo, std::size_t hi) {
        acc.assign(k * k, 0.0);
        for (std::size_t l = lo; l < hi; ++l) {
            double* row = acc.data() + static_cast<std::size_t>(d.h[l]) * k;
            const double* r = resp.data() + l * k;
            for (std::size_t j = 0; j < k; ++j) row[j] += r[j];
        }
    };
    auto merge = [&](Partial& a, const Partial& b) {
        if (a.empty()) a.assign(k * k, 0.0);
        if (b.empty()) return;
        for (std::size_t i = 0; i < k * k; ++i) a[i] += b[i];
    };
    Partial out = par::block_reduce<Partial>(d.n, block_fn, merge, parallel);
    if (out.empty()) out.assign(k * k, 0.0);
    return out;
}

} // namespace

double nll_sum(const PackedData& d, double tau) {
    return map_sum_parallel(d.n, NllRow{d, std::exp(-tau)});
}

double soft_nll_sum(const PackedData& d, std::span<const double> resp, double tau) {
    return map_sum_parallel(d.n, SoftNllRow{d, resp, std::exp(-tau)});
}

void e_step(const PackedData& d, std::span<const double> phi, double tau,
            std::span<double> resp_out) {
    const double inv_t = std::exp(-tau);
    const std::size_t k = static_cast<std::size_t>(d.k);
#pragma omp parallel for schedule(static) num_threads(confide::par::thread_count())
    for (long long i = 0; i < static_cast<long long>(d.n); ++i) {
        const std::size_t l = static_cast<std::size_t>(i);
        combine_pl_row(d.log_row(l), inv_t, {phi_row_ptr(phi, d.h[l], d.k), k},
                       resp_out.subspan(l * k, k));
    }
}

std::vector<double> confusion_sums(const PackedData& d, std::span<const double> resp) {
    return confusion_sums_impl(d, resp, true);
}

double observed_loglik_sum(const PackedData& d, std::span<const double> phi, double tau) {
    return map_sum_parallel(d.n, ObservedRow{d, phi, std::exp(-tau)});
}

namespace serial {

double nll_sum(const PackedData& d, double tau) {
    return map_sum_serial(d.n, NllRow{d, std::exp(-tau)});
}

double soft_nll_sum(const PackedData& d, std::span<const double> resp, double tau) {
    return map_sum_serial(d.n, SoftNllRow{d, resp, std::exp(-tau)});
}

void e_step(const PackedData& d, std::span<const double> phi, double tau,
            std::span<double> resp_out) {
    const double inv_t = std::exp(-tau);
    const std::size_t k = static_cast<std::size_t>(d.k);
    for (std::size_t l = 0; l < d.n; ++l)
        combine_pl_row(d.log_row(l), inv_t, {phi_row_ptr(phi, d.h[l], d.k), k},
                       resp_out.subspan(l * k, k));
}

std::vector<double> confusion_sums(const PackedData& d, std::span<const double> resp) {
    return confusion_sums_impl(d, resp, false);
}

double observed_loglik_sum(const PackedData& d, std::span<const double> phi, double tau) {
    return map_sum_serial(d.n, ObservedRow{d, phi, std::exp(-tau)});
}

} // namespace serial

} // namespace confide::kernels
