// Copyright (c) 2026 the isorecon authors
// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "isorecon/degrade.hpp"

using namespace isorecon;

static void BM_ExactOperatorBuild(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    for (auto _ : state) {
        LinearDegradation op = make_exact_operator(gaussian_psf(2.0), 4, n);
        benchmark::DoNotOptimize(op.A_pinv);
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ExactOperatorBuild)->Arg(64)->Arg(128)->Arg(256)->Arg(512)->Complexity();

static void BM_RangeSpaceReplace(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const LinearDegradation& op = make_operator({DegradationKind::Interpolation, 4}, n);
    GaussianStream rng(1);
    const Image x = rng.next_image(n, n);
    const Image y = rng.next_image(n / 4, n);
    for (auto _ : state) {
        Image out = range_space_replace(x, y, op);
        benchmark::DoNotOptimize(out);
    }
}
BENCHMARK(BM_RangeSpaceReplace)->Arg(64)->Arg(256)->Arg(512);

static void BM_Apply(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const LinearDegradation& op = make_operator({DegradationKind::Average, 8}, n);
    GaussianStream rng(2);
    const Image x = rng.next_image(n, n);
    for (auto _ : state) {
        Image out = apply(op, x);
        benchmark::DoNotOptimize(out);
    }
}
BENCHMARK(BM_Apply)->Arg(64)->Arg(256)->Arg(512);

BENCHMARK_MAIN();
