#pragma once

#include <cstddef>
#include <span>
#include <vector>

// Deterministic parallelism helpers. All reductions run over a fixed block
// grid (independent of thread count) and merge partials in a fixed pairwise
// order, so parallel results are bit-identical to the serial reference.

namespace confide::par {

// Rows per reduction block. Fixed so the block grid never depends on the
// number of worker threads.
inline constexpr std::size_t kBlockSize = 2048;

/// Worker count: min(CONFIDE_THREADS, OpenMP default). At least 1.
int thread_count();

/// Pairwise (tree) summation of a buffer; deterministic for a given input
/// order regardless of thread count (it is serial by design — callers
/// parallelize the buffer fill, not the merge).
double pairwise_sum(std::span<const double> xs);

/// Parallel map: fills out[i] = f(i) for i in [0, n). Each index is
/// independent, so execution order cannot change the result.
template <class F>
void parallel_fill(std::size_t n, double* out, F&& f) {
#pragma omp parallel for schedule(static) num_threads(confide::par::thread_count())
    for (long long i = 0; i < static_cast<long long>(n); ++i)
        out[i] = f(static_cast<std::size_t>(i));
}

template <class F>
void serial_fill(std::size_t n, double* out, F&& f) {
    for (std::size_t i = 0; i < n; ++i) out[i] = f(i);
}

/// Blocked reduction: partial[b] = block_fn over rows [b*B, min(n,(b+1)*B)),
/// computed in parallel; partials merged with pairwise_sum-style tree order.
/// `Partial` must be default-constructible; `merge(a, b)` folds b into a.
template <class Partial, class BlockFn, class MergeFn>
Partial block_reduce(std::size_t n, BlockFn&& block_fn, MergeFn&& merge,
                     bool parallel = true) {
    const std::size_t nblocks = (n + kBlockSize - 1) / kBlockSize;
    if (nblocks == 0) return Partial{};
    std::vector<Partial> partials(nblocks);
    if (parallel) {
#pragma omp parallel for schedule(static) num_threads(confide::par::thread_count())
        for (long long b = 0; b < static_cast<long long>(nblocks); ++b) {
            const std::size_t lo = static_cast<std::size_t>(b) * kBlockSize;
            const std::size_t hi = std::min(n, lo + kBlockSize);
            block_fn(partials[static_cast<std::size_t>(b)], lo, hi);
        }
    } else {
        for (std::size_t b = 0; b < nblocks; ++b) {
            const std::size_t lo = b * kBlockSize;
            const std::size_t hi = std::min(n, lo + kBlockSize);
            block_fn(partials[b], lo, hi);
        }
    }
    // Fixed-order pairwise merge over the block axis.
    std::size_t m = nblocks;
    while (m > 1) {
        const std::size_t half = m / 2;
        for (std::size_t i = 0; i < half; ++i) merge(partials[i], partials[m - 1 - i]);
        m -= half;
    }
    return partials[0];
}

} // namespace confide::par
