// Serial reference vs OpenMP kernels on a synthetic workload.

#include <benchmark/benchmark.h>

#include "confide/confusion.hpp"
#include "confide/kernels.hpp"
#include "confide/simulate.hpp"

namespace {

const confide::PackedData& workload() {
    static const confide::PackedData packed = [] {
        const confide::LabelSpace space(10);
        auto prior = confide::ProbVector::validated(std::vector<double>(10, 0.1), 10);
        auto config = confide::SyntheticConfig::make(
            space, 50000, prior, confide::ConfusionMatrix::symmetric(space, 0.95), 2.5, 0.0, 7);
        return confide::PackedData::from(confide::generate(config).data);
    }();
    return packed;
}

const std::vector<double>& workload_phi() {
    static const std::vector<double> phi =
        confide::ConfusionMatrix::symmetric(confide::LabelSpace(10), 0.9).entries();
    return phi;
}

void BM_nll_serial(benchmark::State& state) {
    const auto& d = workload();
    for (auto _ : state)
        benchmark::DoNotOptimize(confide::kernels::serial::nll_sum(d, 0.9));
}

void BM_nll_parallel(benchmark::State& state) {
    const auto& d = workload();
    for (auto _ : state) benchmark::DoNotOptimize(confide::kernels::nll_sum(d, 0.9));
}

void BM_estep_serial(benchmark::State& state) {
    const auto& d = workload();
    std::vector<double> resp(d.n * static_cast<std::size_t>(d.k));
    for (auto _ : state) {
        confide::kernels::serial::e_step(d, workload_phi(), 0.9, resp);
        benchmark::DoNotOptimize(resp.data());
    }
}

void BM_estep_parallel(benchmark::State& state) {
    const auto& d = workload();
    std::vector<double> resp(d.n * static_cast<std::size_t>(d.k));
    for (auto _ : state) {
        confide::kernels::e_step(d, workload_phi(), 0.9, resp);
        benchmark::DoNotOptimize(resp.data());
    }
}

void BM_confusion_sums_serial(benchmark::State& state) {
    const auto& d = workload();
    std::vector<double> resp(d.n * static_cast<std::size_t>(d.k));
    confide::kernels::e_step(d, workload_phi(), 0.9, resp);
    for (auto _ : state)
        benchmark::DoNotOptimize(confide::kernels::serial::confusion_sums(d, resp));
}

void BM_confusion_sums_parallel(benchmark::State& state) {
    const auto& d = workload();
    std::vector<double> resp(d.n * static_cast<std::size_t>(d.k));
    confide::kernels::e_step(d, workload_phi(), 0.9, resp);
    for (auto _ : state) benchmark::DoNotOptimize(confide::kernels::confusion_sums(d, resp));
}

BENCHMARK(BM_nll_serial);
BENCHMARK(BM_nll_parallel);
BENCHMARK(BM_estep_serial);
BENCHMARK(BM_estep_parallel);
BENCHMARK(BM_confusion_sums_serial);
BENCHMARK(BM_confusion_sums_parallel);

} // namespace

BENCHMARK_MAIN();
