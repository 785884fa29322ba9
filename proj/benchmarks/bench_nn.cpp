#include <benchmark/benchmark.h>

#include "pfoa/common/rng.hpp"
#include "pfoa/nn/model.hpp"
#include "pfoa/nn/ops.hpp"

using namespace pfoa;

namespace {

nn::Tensor random_tensor(nn::Shape shape, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> v(nn::shape_numel(shape));
    for (double& x : v) x = rng.normal();
    return nn::Tensor::from_values(std::move(shape), std::move(v));
}

void BM_Conv2dForward(benchmark::State& state) {
    const int c = static_cast<int>(state.range(0));
    const auto in = random_tensor({8, c, 32, 32}, 1);
    const auto ker = random_tensor({c, c, 3, 3}, 2);
    const auto bias = random_tensor({c}, 3);
    for (auto _ : state) {
        auto out = nn::conv2d(in, ker, bias, 1, 1);
        benchmark::DoNotOptimize(out.values().data());
    }
    state.SetItemsProcessed(state.iterations() * 8);
}
BENCHMARK(BM_Conv2dForward)->Arg(16)->Arg(32)->Arg(64);

void BM_AttentionNetForward(benchmark::State& state) {
    nn::AttentionNet net(nn::BackboneConfig::desk(), true, 7);
    const auto batch = random_tensor({static_cast<int>(state.range(0)), 1, 64, 64}, 4);
    for (auto _ : state) {
        auto fwd = net.forward(batch);
        benchmark::DoNotOptimize(fwd.logits.values().data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_AttentionNetForward)->Arg(1)->Arg(32);

void BM_TrainStep(benchmark::State& state) {
    nn::AttentionNet net(nn::BackboneConfig::desk(), true, 7);
    const auto batch = random_tensor({32, 1, 64, 64}, 5);
    std::vector<int> labels(32);
    for (int i = 0; i < 32; ++i) labels[static_cast<std::size_t>(i)] = i % 2;
    auto params = net.parameters();
    for (auto _ : state) {
        net.zero_grad();
        auto fwd = net.forward(batch);
        auto loss = nn::focal_loss(fwd.logits, labels, 2.0, 1.0);
        nn::backward(loss);
        nn::sgd_momentum_step(params, 1e-3, 0.9);
        benchmark::DoNotOptimize(loss.item());
    }
    state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_TrainStep);

}  // namespace
