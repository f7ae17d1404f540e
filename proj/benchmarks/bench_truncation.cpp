#include <random>

#include <benchmark/benchmark.h>

#include "cliniqa/truncation.hpp"

using namespace cliniqa;

namespace {

RankedList random_list(std::size_t n, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    std::vector<double> scores(n);
    for (auto& s : scores) s = dist(rng);
    std::sort(scores.begin(), scores.end(), std::greater<>());
    RankedList list;
    list.case_id = "bench";
    for (std::size_t i = 0; i < n; ++i)
        list.entries.push_back({static_cast<int>(i + 1), scores[i]});
    return list;
}

void BM_Elbow(benchmark::State& state) {
    const auto list = random_list(static_cast<std::size_t>(state.range(0)), 1);
    for (auto _ : state) benchmark::DoNotOptimize(elbow(list));
}
BENCHMARK(BM_Elbow)->Arg(20)->Arg(54);

void BM_Autocut(benchmark::State& state) {
    const auto list = random_list(static_cast<std::size_t>(state.range(0)), 2);
    for (auto _ : state) benchmark::DoNotOptimize(autocut(list));
}
BENCHMARK(BM_Autocut)->Arg(20)->Arg(54);

void BM_AutocutStar(benchmark::State& state) {
    const auto list = random_list(static_cast<std::size_t>(state.range(0)), 3);
    for (auto _ : state) benchmark::DoNotOptimize(autocut_star(list));
}
BENCHMARK(BM_AutocutStar)->Arg(20)->Arg(54);

void BM_Surprise(benchmark::State& state) {
    const auto list = random_list(static_cast<std::size_t>(state.range(0)), 4);
    for (auto _ : state) benchmark::DoNotOptimize(surprise(list));
}
BENCHMARK(BM_Surprise)->Arg(20)->Arg(54);

void BM_GpdFit(benchmark::State& state) {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> uniform(1e-12, 1.0);
    std::vector<double> excesses(static_cast<std::size_t>(state.range(0)));
    for (auto& x : excesses) x = -std::log(uniform(rng));
    for (auto _ : state) benchmark::DoNotOptimize(gpd_fit(excesses));
}
BENCHMARK(BM_GpdFit)->Arg(10)->Arg(100)->Arg(10000);

} // namespace

BENCHMARK_MAIN();
