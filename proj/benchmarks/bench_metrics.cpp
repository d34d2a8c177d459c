// Copyright (c) 2026 the isorecon authors
// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "isorecon/eval.hpp"

using namespace isorecon;

static void BM_Psnr(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    GaussianStream rng(5);
    const Image a = rng.next_image(side, side);
    const Image b = a + 0.01 * rng.next_image(side, side);
    for (auto _ : state) {
        double v = psnr(a, b, 1.0);
        benchmark::DoNotOptimize(v);
    }
}
BENCHMARK(BM_Psnr)->Arg(256)->Arg(512);

static void BM_MsSsim(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    GaussianStream rng(6);
    const Image a = rng.next_image(side, side);
    const Image b = a + 0.01 * rng.next_image(side, side);
    for (auto _ : state) {
        double v = ms_ssim(a, b, 1.0);
        benchmark::DoNotOptimize(v);
    }
}
BENCHMARK(BM_MsSsim)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

static void BM_SimulateAnisotropy(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    const Volume vol = make_membrane_phantom(side, 7);
    for (auto _ : state) {
        Volume low = simulate_anisotropy(vol, 2.0, 4);
        benchmark::DoNotOptimize(low);
    }
}
BENCHMARK(BM_SimulateAnisotropy)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
