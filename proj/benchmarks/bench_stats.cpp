#include <benchmark/benchmark.h>

#include "pfoa/common/rng.hpp"
#include "pfoa/stats/delong.hpp"
#include "pfoa/stats/metrics.hpp"

using namespace pfoa;

namespace {

stats::ScoredSet make_scored(int n, std::uint64_t seed) {
    Rng rng(seed);
    stats::ScoredSet s;
    for (int i = 0; i < n; ++i) {
        const int y = rng.bernoulli(0.12) ? 1 : 0;
        s.labels.push_back(y);
        s.scores.push_back(rng.normal(y ? 1.0 : 0.0, 1.0));
    }
    return s;
}

void BM_Auc(benchmark::State& state) {
    const auto s = make_scored(static_cast<int>(state.range(0)), 1);
    for (auto _ : state) benchmark::DoNotOptimize(stats::auc(s));
}
BENCHMARK(BM_Auc)->Arg(1000)->Arg(10000);

void BM_DeLongTest(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const auto a = make_scored(n, 2);
    auto b = a;
    Rng rng(3);
    for (double& v : b.scores) v += rng.normal(0.0, 0.3);
    for (auto _ : state)
        benchmark::DoNotOptimize(stats::delong_test(a.scores, b.scores, a.labels).p_value);
}
BENCHMARK(BM_DeLongTest)->Arg(1000)->Arg(10000);

void BM_RocPoints(benchmark::State& state) {
    const auto s = make_scored(5000, 4);
    for (auto _ : state) {
        auto pts = stats::roc_points(s);
        benchmark::DoNotOptimize(pts.data());
    }
}
BENCHMARK(BM_RocPoints);

}  // namespace
