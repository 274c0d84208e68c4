// Parallel distance kernels against their serial reference.
//
//   ./speedclust_bench --benchmark_filter=Pairwise

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "speedclust/dtw.hpp"
#include "speedclust/parallel.hpp"

using namespace speedclust;

namespace {

std::vector<ObservedSeries> make_series(std::size_t count, std::size_t length) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> noise(0.0, 3.0);
    std::uniform_real_distribution<double> level(20.0, 90.0);
    std::bernoulli_distribution missing(0.3);
    std::vector<ObservedSeries> out;
    for (std::size_t i = 0; i < count; ++i) {
        const double base = level(rng);
        ObservedSeries s;
        for (std::size_t b = 0; b < length; ++b) {
            if (missing(rng)) continue;
            s.values.push_back(base + noise(rng));
            s.source_buckets.push_back(b);
        }
        out.push_back(std::move(s));
    }
    return out;
}

void BM_DtwPair(benchmark::State& state) {
    const auto series = make_series(2, static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(dtw_distance(series[0], series[1]));
    state.SetItemsProcessed(state.iterations());
}

void BM_PairwiseReference(benchmark::State& state) {
    const auto series = make_series(static_cast<std::size_t>(state.range(0)), 672);
    for (auto _ : state) benchmark::DoNotOptimize(reference::pairwise_distances(series));
}

void BM_PairwiseParallel(benchmark::State& state) {
    const auto series = make_series(static_cast<std::size_t>(state.range(0)), 672);
    set_thread_count(static_cast<int>(state.range(1)));
    for (auto _ : state) benchmark::DoNotOptimize(pairwise_distances(series));
    set_thread_count(0);
}

void BM_CrossReference(benchmark::State& state) {
    const auto rows = make_series(static_cast<std::size_t>(state.range(0)), 672);
    const auto cols = make_series(3, 672);
    for (auto _ : state) benchmark::DoNotOptimize(reference::cross_distances(rows, cols));
}

void BM_CrossParallel(benchmark::State& state) {
    const auto rows = make_series(static_cast<std::size_t>(state.range(0)), 672);
    const auto cols = make_series(3, 672);
    set_thread_count(static_cast<int>(state.range(1)));
    for (auto _ : state) benchmark::DoNotOptimize(cross_distances(rows, cols));
    set_thread_count(0);
}

} // namespace

BENCHMARK(BM_DtwPair)->Arg(96)->Arg(336)->Arg(672);
BENCHMARK(BM_PairwiseReference)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PairwiseParallel)->ArgsProduct({{32, 64}, {1, 2, 4, 8}})->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_CrossReference)->Arg(100)->Arg(300)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CrossParallel)->ArgsProduct({{100, 300}, {1, 2, 4, 8}})->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
