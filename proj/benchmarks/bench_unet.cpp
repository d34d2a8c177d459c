// Copyright (c) 2026 the isorecon authors
// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "isorecon/nn/unet.hpp"

using namespace isorecon;

namespace {

nn::UNet<float> desk_net() {
    nn::UNet<float>::Spec spec;
    spec.base = 16;
    spec.mults = {1, 2, 2};
    spec.attn_stages = {2};
    spec.temb_dim = 64;
    spec.res_per_stage = 2;
    return nn::UNet<float>(spec, 1);
}

}  // namespace

static void BM_UNetForward(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    nn::UNet<float> net = desk_net();
    GaussianStream rng(3);
    nn::Mat<float> x(1, side * side);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(0, i) = static_cast<float>(rng.next());
    for (auto _ : state) {
        nn::Mat<float> y = net.forward(x, side, side, 500);
        benchmark::DoNotOptimize(y);
    }
}
BENCHMARK(BM_UNetForward)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

static void BM_UNetTrainStep(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    nn::UNet<float> net = desk_net();
    GaussianStream rng(4);
    nn::Mat<float> x(1, side * side), target(1, side * side);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        x(0, i) = static_cast<float>(rng.next());
        target(0, i) = static_cast<float>(rng.next());
    }
    for (auto _ : state) {
        net.zero_grads();
        nn::Mat<float> y = net.forward(x, side, side, 250);
        nn::Mat<float> d = 2.0f / static_cast<float>(y.size()) * (y - target);
        net.backward(d);
        benchmark::DoNotOptimize(net.params());
    }
}
BENCHMARK(BM_UNetTrainStep)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
