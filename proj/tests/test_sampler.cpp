// Copyright (c) 2026 the isorecon authors
// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "isorecon/eval.hpp"
#include "isorecon/sampler.hpp"

using namespace isorecon;

namespace {

struct ZeroPredictor : NoisePredictor {
    Image predict(const Image& x, int) override { return Image::Zero(x.rows(), x.cols()); }
};

struct ScalePredictor : NoisePredictor {
    double k;
    explicit ScalePredictor(double k_) : k(k_) {}
    Image predict(const Image& x, int) override { return k * x; }
};

// Straight-line replay of the encode recursion and the decode loop for a
// stub predictor eps_hat = k * x. Kept deliberately flat and separate from
// the sampler implementation.
Image oracle_encode(const Image& x0, const std::vector<int>& grid, double k,
                    const NoiseSchedule& sched) {
    Image x = x0;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        const double aa = sched.alpha_bar(grid[i]);
        const double ab = sched.alpha_bar(grid[i + 1]);
        const Image eps = k * x;
        const Image x0_est = (x - std::sqrt(1.0 - aa) * eps) / std::sqrt(aa);
        x = std::sqrt(ab) * x0_est + std::sqrt(1.0 - ab) * eps;
    }
    return x;
}

Image oracle_decode(const Image& x_start, const std::vector<int>& grid, double k, const Image& y,
                    const LinearDegradation& op, const NoiseSchedule& sched, GaussianStream rng,
                    bool clip = false) {
    Image x = x_start;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const int t = grid[j];
        const Image eps = k * x;
        const double at = sched.alpha_bar(t);
        Image x0 = (x - std::sqrt(1.0 - at) * eps) / std::sqrt(at);
        if (clip) x0 = x0.cwiseMax(-1.0).cwiseMin(1.0);
        const Image x0h = op.A_pinv * y + x0 - op.A_pinv * (op.A * x0);
        if (j + 1 == grid.size()) return x0h;
        const int tp = grid[j + 1];
        const double ap = sched.alpha_bar(tp);
        const double sigma =
            std::sqrt((1.0 - ap) / (1.0 - at)) * std::sqrt(1.0 - at / ap);
        const double coef = std::sqrt(std::max(0.0, 1.0 - ap - sigma * sigma));
        const Image z = rng.next_image(x.rows(), x.cols());
        x = std::sqrt(ap) * x0h + coef * eps + sigma * z;
    }
    return x;
}

}  // namespace

TEST_CASE("estimate_x0") {
    const NoiseSchedule sched = make_cosine_schedule(100, 0.008);
    GaussianStream rng(1);
    const Image x0 = rng.next_image(6, 5);
    const Image eps = rng.next_image(6, 5);

    SUBCASE("zero predicted noise rescales x_t") {
        const Image xt = rng.next_image(6, 5);
        const Image out = estimate_x0(xt, 40, Image::Zero(6, 5), sched);
        CHECK((out - xt / std::sqrt(sched.alpha_bar(40))).cwiseAbs().maxCoeff() < 1e-14);
    }
    SUBCASE("inverts the forward perturbation exactly") {
        for (int t : {1, 37, 100}) {
            const Image xt = forward_perturb(x0, t, eps, sched);
            const Image rec = estimate_x0(xt, t, eps, sched);
            CHECK((rec - x0).cwiseAbs().maxCoeff() < 1e-10);
        }
    }
    SUBCASE("matches an elementwise scalar oracle") {
        const Image xt = rng.next_image(6, 5);
        const Image eh = rng.next_image(6, 5);
        const int t = 73;
        const Image out = estimate_x0(xt, t, eh, sched);
        const double a = sched.alpha_bar(t);
        for (int r = 0; r < 6; ++r)
            for (int c = 0; c < 5; ++c) {
                const double expect = (xt(r, c) - std::sqrt(1.0 - a) * eh(r, c)) / std::sqrt(a);
                CHECK(std::abs(out(r, c) - expect) < 1e-12);
            }
    }
    SUBCASE("rejects bad steps and shapes") {
        CHECK_THROWS_AS(estimate_x0(x0, 0, eps, sched), std::invalid_argument);
        CHECK_THROWS_AS(estimate_x0(x0, 101, eps, sched), std::invalid_argument);
        CHECK_THROWS_AS(estimate_x0(x0, 5, Image::Zero(3, 3), sched), std::invalid_argument);
    }
}

TEST_CASE("sub-step grid contracts") {
    const NoiseSchedule sched = make_cosine_schedule(1000, 0.008);
    StepPlan plan;
    plan.R = 200;
    plan.encode_steps = 4;
    plan.decode_steps = 50;
    plan.first_slice_T = 1000;
    plan.validate(sched);

    const std::vector<int> enc = encode_grid(plan);
    CHECK(enc == std::vector<int>{0, 50, 100, 150, 200});

    const std::vector<int> dec = decode_grid(plan, 200);
    CHECK(dec.size() == 50);
    CHECK(dec.front() == 200);
    CHECK(dec.back() == 1);
    for (std::size_t i = 0; i + 1 < dec.size(); ++i) CHECK(dec[i] > dec[i + 1]);

    const std::vector<int> first = decode_grid(plan, 1000);
    CHECK(first.front() == 1000);
    CHECK(first.back() == 1);
    CHECK(first.size() == 250);  // same stride density as the [R, 0] segment
    for (std::size_t i = 0; i + 1 < first.size(); ++i) CHECK(first[i] > first[i + 1]);

    SUBCASE("T=8 consecutive grid") {
        const NoiseSchedule s8 = make_cosine_schedule(8, 0.008);
        StepPlan p8;
        p8.R = 8;
        p8.encode_steps = 8;
        p8.decode_steps = 8;
        p8.first_slice_T = 8;
        p8.validate(s8);
        CHECK(encode_grid(p8) == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7, 8});
        CHECK(decode_grid(p8, 8) == std::vector<int>{8, 7, 6, 5, 4, 3, 2, 1});
    }
    SUBCASE("invalid plans are rejected") {
        StepPlan bad;
        bad.R = 2000;
        CHECK_THROWS_AS(bad.validate(sched), std::invalid_argument);
        bad = plan;
        bad.encode_steps = 0;
        CHECK_THROWS_AS(bad.validate(sched), std::invalid_argument);
        bad = plan;
        bad.first_slice_T = 100;  // below R
        CHECK_THROWS_AS(bad.validate(sched), std::invalid_argument);
    }
}

TEST_CASE("ddim_encode") {
    const NoiseSchedule sched = make_cosine_schedule(1000, 0.008);
    GaussianStream rng(3);
    const Image x0 = rng.next_image(16, 16);

    SUBCASE("R = 0 is the identity") {
        StepPlan plan;
        plan.R = 0;
        plan.first_slice_T = 1000;
        ZeroPredictor zero;
        CHECK(ddim_encode(x0, plan, zero, sched) == x0);
    }
    SUBCASE("bit-identical across runs") {
        StepPlan plan;
        plan.R = 200;
        plan.encode_steps = 4;
        plan.decode_steps = 50;
        plan.first_slice_T = 1000;
        ScalePredictor model(0.25);
        const Image a = ddim_encode(x0, plan, model, sched);
        const Image b = ddim_encode(x0, plan, model, sched);
        CHECK(a == b);
    }
    SUBCASE("matches the straight-line recursion for stub predictors") {
        StepPlan plan;
        plan.R = 200;
        plan.encode_steps = 4;
        plan.decode_steps = 50;
        plan.first_slice_T = 1000;
        for (double k : {0.0, 0.3, 1.0}) {
            ScalePredictor model(k);
            const Image got = ddim_encode(x0, plan, model, sched);
            const Image expect = oracle_encode(x0, encode_grid(plan), k, sched);
            CHECK((got - expect).cwiseAbs().maxCoeff() < 1e-8);
        }
    }
}

TEST_CASE("ddnm_decode") {
    const NoiseSchedule sched = make_cosine_schedule(1000, 0.008);
    StepPlan plan;
    plan.R = 200;
    plan.encode_steps = 4;
    plan.decode_steps = 50;
    plan.first_slice_T = 1000;
    GaussianStream data_rng(5);

    SUBCASE("identity operator forces the observation") {
        const LinearDegradation id = make_imputation_operator(1, 16);
        const Image y = data_rng.next_image(16, 16);
        const Image start = data_rng.next_image(16, 16);
        ScalePredictor model(0.5);
        GaussianStream rng(7);
        const Image out = ddnm_decode(start, 200, y, id, plan, model, sched, rng);
        CHECK((out - y).cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("exact kinds end data-consistent") {
        const LinearDegradation op = make_average_operator(4, 16);
        const Image x_gt = data_rng.next_image(16, 16);
        const Image y = apply(op, x_gt);
        ScalePredictor model(0.2);
        GaussianStream rng(9);
        const Image out = ddnm_decode(data_rng.next_image(16, 16), 200, y, op, plan, model,
                                      sched, rng);
        CHECK((apply(op, out) - y).cwiseAbs().maxCoeff() < 1e-6);
    }
    SUBCASE("matches the straight-line oracle on both grids") {
        const LinearDegradation op = make_exact_operator(gaussian_psf(1.0), 4, 16);
        const Image x_gt = data_rng.next_image(16, 16);
        const Image y = apply(op, x_gt);
        const Image start = data_rng.next_image(16, 16);
        StepPlan pure = plan;
        pure.clip_x0 = false;  // textbook recursion, no stabilizer
        for (double k : {0.0, 0.4}) {
            ScalePredictor model(k);
            GaussianStream rng_a(11), rng_b(11);
            const Image got = ddnm_decode(start, 200, y, op, pure, model, sched, rng_a);
            const Image expect =
                oracle_decode(start, decode_grid(pure, 200), k, y, op, sched, rng_b);
            CHECK((got - expect).cwiseAbs().maxCoeff() < 1e-8);
        }
        const NoiseSchedule s8 = make_cosine_schedule(8, 0.008);
        StepPlan p8;
        p8.R = 8;
        p8.encode_steps = 8;
        p8.decode_steps = 8;
        p8.first_slice_T = 8;
        p8.clip_x0 = false;
        ScalePredictor model(1.0);
        GaussianStream rng_a(13), rng_b(13);
        const Image got = ddnm_decode(start, 8, y, op, p8, model, s8, rng_a);
        const Image expect = oracle_decode(start, decode_grid(p8, 8), 1.0, y, op, s8, rng_b);
        CHECK((got - expect).cwiseAbs().maxCoeff() < 1e-8);
    }
    SUBCASE("the clamped production path matches a clamped replay") {
        const LinearDegradation op = make_exact_operator(gaussian_psf(1.0), 4, 16);
        const Image y = apply(op, data_rng.next_image(16, 16));
        const Image start = data_rng.next_image(16, 16);
        ScalePredictor model(0.4);
        GaussianStream rng_a(17), rng_b(17);
        REQUIRE(plan.clip_x0);  // default
        const Image got = ddnm_decode(start, 200, y, op, plan, model, sched, rng_a);
        const Image expect = oracle_decode(start, decode_grid(plan, 200), 0.4, y, op, sched,
                                           rng_b, /*clip=*/true);
        CHECK((got - expect).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("reconstruct_slice") {
    const NoiseSchedule sched = make_cosine_schedule(100, 0.008);
    StepPlan plan;
    plan.R = 20;
    plan.encode_steps = 4;
    plan.decode_steps = 10;
    plan.first_slice_T = 100;
    const LinearDegradation op = make_imputation_operator(4, 16);
    GaussianStream data_rng(15);
    const Image y = data_rng.next_image(4, 16);

    SUBCASE("imputation keeps observed rows exactly") {
        ScalePredictor model(0.3);
        SliceChain chain(Axis::X, 77);
        const Image out = reconstruct_slice(y, chain, op, plan, model, sched);
        for (int i = 0; i < 4; ++i)
            CHECK((out.row(4 * i) - y.row(i)).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(chain.prev_x0.has_value());
    }
    SUBCASE("identical seeds and chain states give identical slices") {
        ScalePredictor model(0.3);
        SliceChain a(Axis::X, 123), b(Axis::X, 123);
        const Image ra = reconstruct_slice(y, a, op, plan, model, sched);
        const Image rb = reconstruct_slice(y, b, op, plan, model, sched);
        CHECK(ra == rb);
    }
    SUBCASE("a chained slice starts from the encoded previous slice") {
        ScalePredictor model(0.3);
        const Image prev = data_rng.next_image(16, 16);

        SliceChain chain(Axis::X, 55);
        chain.prev_x0 = prev;
        GaussianStream manual_rng = chain.rng;  // copy of the stream state
        const Image via_chain = reconstruct_slice(y, chain, op, plan, model, sched);

        const Image x_r = ddim_encode(prev, plan, model, sched);
        const Image manual = ddnm_decode(x_r, plan.R, y, op, plan, model, sched, manual_rng);
        CHECK(via_chain == manual);
    }
}

TEST_CASE("reconstruct_volume shapes, residuals and chain locality") {
    const NoiseSchedule sched = make_cosine_schedule(40, 0.008);
    StepPlan plan;
    plan.R = 10;
    plan.encode_steps = 2;
    plan.decode_steps = 5;
    plan.first_slice_T = 40;

    Volume low(8, 32, 32, VoxelType::F32);
    GaussianStream vr(17);
    for (double& v : low.data) v = 0.5 + 0.1 * vr.next();
    low.value_lo = 0.0;
    low.value_hi = 1.0;

    const LinearDegradation& op = make_operator({DegradationKind::Imputation, 4}, 32);
    ZeroPredictor model;
    const ValueNorm norm{0.0, 1.0};

    ReconstructOptions opts;
    opts.seed = 5;
    int callbacks = 0;
    opts.on_slice = [&callbacks](const SliceProgress&) { ++callbacks; };

    const ReconstructResult rx = reconstruct_volume(low, Axis::X, op, plan, model, sched, norm, opts);
    CHECK(rx.volume.nz == 32);
    CHECK(rx.volume.ny == 32);
    CHECK(rx.volume.nx == 32);
    CHECK(callbacks == 32);
    CHECK(rx.slices.size() == 32);
    for (const auto& s : rx.slices) CHECK(s.residual < 1e-4);

    SUBCASE("identical seeds reproduce the volume bitwise") {
        const ReconstructResult again =
            reconstruct_volume(low, Axis::X, op, plan, model, sched, norm, opts);
        CHECK(again.volume.data == rx.volume.data);
    }
    SUBCASE("y-axis chaining produces the transposed layout") {
        const ReconstructResult ry =
            reconstruct_volume(low, Axis::Y, op, plan, model, sched, norm, opts);
        CHECK(ry.volume.nz == 32);
        CHECK(ry.volume.data != rx.volume.data);
    }
    SUBCASE("reseeding the chain at slice i leaves earlier slices untouched") {
        ScalePredictor scale_model(0.2);
        const int change_at = 3;
        auto run = [&](std::uint64_t late_seed) {
            SliceChain chain(Axis::X, 5);
            std::vector<Image> out;
            for (int i = 0; i < 6; ++i) {
                if (i == change_at) chain.rng = GaussianStream(late_seed);
                const Image y = norm.normalize(low.slice_zy(i));
                out.push_back(reconstruct_slice(y, chain, op, plan, scale_model, sched));
            }
            return out;
        };
        const auto a = run(1000);
        const auto b = run(2000);
        for (int i = 0; i < change_at; ++i) CHECK(a[i] == b[i]);
        CHECK(a[change_at] != b[change_at]);
    }
}

TEST_CASE("intermediate checkpointing writes partial volumes") {
    const NoiseSchedule sched = make_cosine_schedule(20, 0.008);
    StepPlan plan;
    plan.R = 5;
    plan.encode_steps = 2;
    plan.decode_steps = 3;
    plan.first_slice_T = 20;

    Volume low(4, 8, 8, VoxelType::F32);
    GaussianStream vr(23);
    for (double& v : low.data) v = 0.5 + 0.05 * vr.next();
    low.value_lo = 0.0;
    low.value_hi = 1.0;

    const LinearDegradation& op = make_operator({DegradationKind::Average, 2}, 8);
    ZeroPredictor model;
    ReconstructOptions opts;
    opts.seed = 3;
    opts.checkpoint_every = 2;
    opts.checkpoint_path =
        std::filesystem::temp_directory_path() / "isorecon_sampler_test_partial.raw";
    std::filesystem::remove(opts.checkpoint_path);

    reconstruct_volume(low, Axis::X, op, plan, model, sched, ValueNorm{0.0, 1.0}, opts);
    CHECK(std::filesystem::exists(opts.checkpoint_path));
}

TEST_CASE("value normalization round trip") {
    const ValueNorm norm{10.0, 250.0};
    GaussianStream rng(19);
    const Image raw = (rng.next_image(5, 5).array().abs() * 100.0 + 10.0).matrix();
    const Image back = norm.denormalize(norm.normalize(raw));
    CHECK((back - raw).cwiseAbs().maxCoeff() < 1e-10);
}
