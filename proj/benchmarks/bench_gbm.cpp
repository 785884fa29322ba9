#include <benchmark/benchmark.h>

#include <cmath>

#include "pfoa/common/rng.hpp"
#include "pfoa/gbm/gbm.hpp"
#include "pfoa/gbm/shap.hpp"

using namespace pfoa;

namespace {

struct TabularData {
    gbm::FeatureMatrix X;
    std::vector<int> y;
};

TabularData make_data(int rows, int features, std::uint64_t seed) {
    Rng rng(seed);
    TabularData d;
    std::vector<std::vector<double>> cols(static_cast<std::size_t>(features));
    for (int i = 0; i < rows; ++i) {
        double risk = 0.0;
        for (int f = 0; f < features; ++f) {
            const double v = rng.normal();
            cols[static_cast<std::size_t>(f)].push_back(v);
            risk += v * (f + 1) * 0.2;
        }
        d.y.push_back(rng.bernoulli(1.0 / (1.0 + std::exp(-risk))) ? 1 : 0);
    }
    for (int f = 0; f < features; ++f)
        d.X.add_column("f" + std::to_string(f), std::move(cols[static_cast<std::size_t>(f)]));
    return d;
}

void BM_FitGbm(benchmark::State& state) {
    const auto d = make_data(static_cast<int>(state.range(0)), 5, 1);
    gbm::GbmConfig cfg;
    cfg.n_trees = 100;
    for (auto _ : state) {
        auto model = gbm::fit_gbm(d.X, d.y, cfg);
        benchmark::DoNotOptimize(model.trees.size());
    }
}
BENCHMARK(BM_FitGbm)->Arg(1000)->Arg(3000)->Unit(benchmark::kMillisecond);

void BM_PredictGbm(benchmark::State& state) {
    const auto d = make_data(3000, 5, 2);
    gbm::GbmConfig cfg;
    cfg.n_trees = 200;
    const auto model = gbm::fit_gbm(d.X, d.y, cfg);
    for (auto _ : state) {
        auto p = model.predict_proba(d.X);
        benchmark::DoNotOptimize(p.data());
    }
    state.SetItemsProcessed(state.iterations() * 3000);
}
BENCHMARK(BM_PredictGbm);

void BM_ExactShap(benchmark::State& state) {
    const int features = static_cast<int>(state.range(0));
    const auto d = make_data(400, features, 3);
    const auto model = gbm::fit_gbm(d.X, d.y, gbm::GbmConfig{});
    gbm::FeatureMatrix background;
    for (std::size_t f = 0; f < d.X.n_features(); ++f) {
        std::vector<double> col(d.X.column(f).begin(), d.X.column(f).begin() + 100);
        background.add_column(d.X.feature_names()[f], std::move(col));
    }
    const auto row = d.X.row(0);
    for (auto _ : state) {
        auto shap = gbm::exact_shap(model, row, background);
        benchmark::DoNotOptimize(shap.phi.data());
    }
}
BENCHMARK(BM_ExactShap)->Arg(3)->Arg(5)->Arg(8)->Unit(benchmark::kMillisecond);

}  // namespace
