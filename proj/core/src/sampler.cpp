// Copyright (c) 2026 the isorecon authors
// SPDX-License-Identifier: Apache-2.0
#include "isorecon/sampler.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "isorecon/volume_io.hpp"

namespace isorecon {

void StepPlan::validate(const NoiseSchedule& sched) const {
    detail::require(R >= 0 && R <= sched.T, "StepPlan: need 0 <= R <= T");
    detail::require(encode_steps >= 1, "StepPlan: encode_steps must be >= 1");
    detail::require(decode_steps >= 1, "StepPlan: decode_steps must be >= 1");
    if (R >= 1) {
        detail::require(encode_steps <= R, "StepPlan: encode_steps cannot exceed R");
        detail::require(decode_steps <= R, "StepPlan: decode_steps cannot exceed R");
    }
    detail::require(first_slice_T >= 1 && first_slice_T <= sched.T,
                    "StepPlan: first_slice_T out of range");
    detail::require(first_slice_T >= R, "StepPlan: first_slice_T must be >= R");
}

std::vector<int> encode_grid(const StepPlan& plan) {
    if (plan.R == 0) return {0};
    std::vector<int> grid(static_cast<std::size_t>(plan.encode_steps) + 1);
    for (int k = 0; k <= plan.encode_steps; ++k)
        grid[static_cast<std::size_t>(k)] = static_cast<int>(
            std::llround(static_cast<double>(k) * plan.R / plan.encode_steps));
    return grid;
}

std::vector<int> decode_grid(const StepPlan& plan, int start_level) {
    if (start_level == 0) return {};
    int count = plan.decode_steps;
    if (start_level != plan.R && plan.R >= 1)
        count = std::max(plan.decode_steps,
                         static_cast<int>(std::llround(static_cast<double>(plan.decode_steps) *
                                                       start_level / plan.R)));
    count = std::min(count, start_level);
    std::vector<int> grid(static_cast<std::size_t>(count));
    if (count == 1) {
        grid[0] = start_level;
        return grid;
    }
    const double step = static_cast<double>(start_level - 1) / (count - 1);
    for (int j = 0; j < count; ++j)
        grid[static_cast<std::size_t>(j)] = static_cast<int>(std::llround(start_level - j * step));
    return grid;
}

Image estimate_x0(const Image& x_t, int t, const Image& eps_hat, const NoiseSchedule& sched) {
    detail::require(t >= 1 && t <= sched.T, "estimate_x0: t out of range");
    detail::require(x_t.rows() == eps_hat.rows() && x_t.cols() == eps_hat.cols(),
                    "estimate_x0: shape mismatch");
    const double abar = sched.alpha_bar(t);
    return (x_t - std::sqrt(1.0 - abar) * eps_hat) / std::sqrt(abar);
}

Image ddim_encode(const Image& x0, const StepPlan& plan, NoisePredictor& model,
                  const NoiseSchedule& sched) {
    plan.validate(sched);
    if (plan.R == 0) return x0;
    const std::vector<int> grid = encode_grid(plan);
    Image x = x0;
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
        const int a = grid[k];
        const int b = grid[k + 1];
        const Image eps = model.predict(x, std::max(a, 1));
        const double abar_a = sched.alpha_bar(a);
        const double abar_b = sched.alpha_bar(b);
        const Image x0_est = (x - std::sqrt(1.0 - abar_a) * eps) / std::sqrt(abar_a);
        x = std::sqrt(abar_b) * x0_est + std::sqrt(1.0 - abar_b) * eps;
    }
    return x;
}

Image ddnm_decode(const Image& x_start, int start_level, const Image& y,
                  const LinearDegradation& op, const StepPlan& plan, NoisePredictor& model,
                  const NoiseSchedule& sched, GaussianStream& rng) {
    plan.validate(sched);
    detail::require(start_level >= 1 && start_level <= sched.T,
                    "ddnm_decode: start_level out of range");
    detail::require(x_start.rows() == op.n, "ddnm_decode: x_start must have n rows");
    detail::require(y.rows() == op.m, "ddnm_decode: y must have m rows");
    detail::require(x_start.cols() == y.cols(), "ddnm_decode: column count mismatch");

    const std::vector<int> grid = decode_grid(plan, start_level);
    Image x = x_start;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const int t = grid[j];
        const Image eps = model.predict(x, t);
        Image x0 = estimate_x0(x, t, eps, sched);
        if (plan.clip_x0) x0 = x0.cwiseMax(-1.0).cwiseMin(1.0);
        const Image x0_hat = range_space_replace(x0, y, op);
        if (j + 1 == grid.size()) return x0_hat;

        const int tp = grid[j + 1];
        const double sigma = ddim_sigma_between(sched, t, tp, /*deterministic=*/false);
        const double abar_p = sched.alpha_bar(tp);
        const double coef = std::sqrt(std::max(0.0, 1.0 - abar_p - sigma * sigma));
        // Noise draw happens unconditionally so the stream advances the same
        // way for every grid; order is slice-major, step-minor.
        const Image z = rng.next_image(x.rows(), x.cols());
        x = std::sqrt(abar_p) * x0_hat + coef * eps + sigma * z;
    }
    return x;  // start_level == 0 never reaches here; grid is non-empty
}

Image reconstruct_slice(const Image& y_i, SliceChain& chain, const LinearDegradation& op,
                        const StepPlan& plan, NoisePredictor& model, const NoiseSchedule& sched) {
    plan.validate(sched);
    detail::require(y_i.rows() == op.m, "reconstruct_slice: y has wrong row count");

    Image x_start;
    int start_level = 0;
    if (chain.prev_x0) {
        detail::require(chain.prev_x0->rows() == op.n && chain.prev_x0->cols() == y_i.cols(),
                        "reconstruct_slice: chained slice shape mismatch");
        x_start = ddim_encode(*chain.prev_x0, plan, model, sched);
        start_level = plan.R;
    } else {
        x_start = chain.rng.next_image(op.n, y_i.cols());
        start_level = plan.first_slice_T;
    }

    Image x0 = ddnm_decode(x_start, start_level, y_i, op, plan, model, sched, chain.rng);
    chain.prev_x0 = x0;
    return x0;
}

ReconstructResult reconstruct_volume(const Volume& vol_low, Axis axis,
                                     const LinearDegradation& op, const StepPlan& plan,
                                     NoisePredictor& model, const NoiseSchedule& sched,
                                     const ValueNorm& norm, const ReconstructOptions& opts) {
    plan.validate(sched);
    detail::require(axis == Axis::X || axis == Axis::Y,
                    "reconstruct_volume: chain axis must be x or y");
    detail::require(vol_low.nz == op.m,
                    "reconstruct_volume: volume z-extent " + std::to_string(vol_low.nz) +
                        " does not match the operator's m=" + std::to_string(op.m));
    const int n = op.n;
    const int lateral = axis == Axis::X ? vol_low.ny : vol_low.nx;
    const int slices = axis == Axis::X ? vol_low.nx : vol_low.ny;
    const int div = model.spatial_divisor();
    detail::require(n % div == 0 && lateral % div == 0,
                    "reconstruct_volume: slice extents not divisible by the model's stage factor");

    Volume out(n, vol_low.ny, vol_low.nx, vol_low.dtype);
    out.value_lo = vol_low.value_lo;
    out.value_hi = vol_low.value_hi;
    out.voxel_size = vol_low.voxel_size;

    ReconstructResult result;
    SliceChain chain(axis, opts.seed);
    for (int i = 0; i < slices; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        if (!opts.chain) chain.prev_x0.reset();

        const Image y_raw = axis == Axis::X ? vol_low.slice_zy(i) : vol_low.slice_zx(i);
        const Image y = norm.normalize(y_raw);
        const Image x_hat = reconstruct_slice(y, chain, op, plan, model, sched);

        SliceProgress progress;
        progress.index = i;
        progress.residual = (apply(op, x_hat) - y).cwiseAbs().maxCoeff();
        if (axis == Axis::X)
            out.set_slice_zy(i, norm.denormalize(x_hat));
        else
            out.set_slice_zx(i, norm.denormalize(x_hat));
        progress.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (opts.on_slice) opts.on_slice(progress);
        result.slices.push_back(progress);

        if (opts.checkpoint_every > 0 && !opts.checkpoint_path.empty() &&
            (i + 1) % opts.checkpoint_every == 0 && i + 1 < slices)
            write_raw(opts.checkpoint_path, out);
    }

    result.volume = std::move(out);
    return result;
}

void clip_to_range(Volume& vol) {
    const double lo = std::min(vol.value_lo, vol.value_hi);
    const double hi = std::max(vol.value_lo, vol.value_hi);
    for (double& v : vol.data) v = std::clamp(v, lo, hi);
}

}  // namespace isorecon
