#include <random>

#include <benchmark/benchmark.h>

#include "cliniqa/attribution.hpp"
#include "cliniqa/embedding.hpp"
#include "cliniqa/evaluation.hpp"
#include "cliniqa/text.hpp"

using namespace cliniqa;

namespace {

const std::string kHyp =
    "he underwent an emergent salvage repair of the ruptured aneurysm with a tube graft";
const std::string kRef =
    "an emergent salvage repair with a dacron tube graft was performed for the rupture";
const std::string kSource = "why did they perform the emergency salvage repair on him";

void BM_LexicalSim(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(lexical_sim(kHyp, kRef));
}
BENCHMARK(BM_LexicalSim);

void BM_FuzzySim(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(fuzzy_sim(kHyp, kRef));
}
BENCHMARK(BM_FuzzySim);

void BM_Bleu(benchmark::State& state) {
    const std::vector<std::string> refs{kRef};
    for (auto _ : state) benchmark::DoNotOptimize(bleu(kHyp, refs));
}
BENCHMARK(BM_Bleu);

void BM_Sari(benchmark::State& state) {
    const std::vector<std::string> refs{kRef};
    for (auto _ : state) benchmark::DoNotOptimize(sari(kSource, kHyp, refs));
}
BENCHMARK(BM_Sari);

void BM_Cosine1024(benchmark::State& state) {
    std::mt19937 rng(9);
    std::normal_distribution<double> normal(0.0, 1.0);
    Embedding a(1024), b(1024);
    for (auto& x : a) x = normal(rng);
    for (auto& x : b) x = normal(rng);
    for (auto _ : state) benchmark::DoNotOptimize(cosine(a, b));
}
BENCHMARK(BM_Cosine1024);

void BM_Levenshtein(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(text::levenshtein(kHyp, kRef));
}
BENCHMARK(BM_Levenshtein);

} // namespace
