// Copyright (c) 2026 the isorecon authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "isorecon/degrade.hpp"
#include "isorecon/predictor.hpp"
#include "isorecon/schedule.hpp"
#include "isorecon/volume.hpp"

namespace isorecon {

/// Sub-step plan for the chained reconstruction: encode the previous slice
/// deterministically up to level R, then decode stochastically back to 0.
/// The unchained first slice decodes from first_slice_T (normally T) with the
/// same stride density.
struct StepPlan {
    int R = 200;
    int encode_steps = 4;
    int decode_steps = 50;
    int first_slice_T = 1000;

    // Clamp the clean estimate to the model range [-1, 1] before each
    // range-space replacement. Near t = T the beta-clipped cosine schedule
    // has alpha_bar ~ 1e-9, so the 1/sqrt(alpha_bar) in the clean-estimate
    // formula turns any imperfect noise prediction into unbounded output;
    // the clamp bounds it without touching the replacement itself (the
    // reconstruction stays exactly data-consistent). Disable to reproduce
    // the textbook recursion verbatim, e.g. against reference replays.
    bool clip_x0 = true;

    void validate(const NoiseSchedule& sched) const;
};

/// Ascending integer levels 0 = g0 < ... < gK = R (K = encode_steps).
std::vector<int> encode_grid(const StepPlan& plan);

/// Descending integer levels start = l0 > ... > 1. For start == R the grid
/// has exactly decode_steps levels; other start values keep the same stride
/// density.
std::vector<int> decode_grid(const StepPlan& plan, int start_level);

/// Eq.-style clean estimate: (x_t - sqrt(1-abar_t) eps_hat) / sqrt(abar_t).
Image estimate_x0(const Image& x_t, int t, const Image& eps_hat, const NoiseSchedule& sched);

/// Deterministic DDIM forward recursion over the encode grid, 0 -> R.
/// Pure function of (x0, model weights, plan); no noise is injected.
Image ddim_encode(const Image& x0, const StepPlan& plan, NoisePredictor& model,
                  const NoiseSchedule& sched);

/// Null-space-constrained reverse diffusion from start_level down to 0:
/// predict noise, estimate x0, replace the range-space component with the
/// observation, then take the stochastic strided step. Returns the final
/// clean estimate after the last replacement (data-consistent by
/// construction for exact pseudo-inverse operators).
Image ddnm_decode(const Image& x_start, int start_level, const Image& y,
                  const LinearDegradation& op, const StepPlan& plan, NoisePredictor& model,
                  const NoiseSchedule& sched, GaussianStream& rng);

/// State threaded through the sequential slice loop.
struct SliceChain {
    Axis axis = Axis::X;                // X: ZY slices, Y: ZX slices
    std::optional<Image> prev_x0;       // absent for the first slice
    GaussianStream rng{1};

    SliceChain() = default;
    SliceChain(Axis axis_, std::uint64_t seed)
        : axis(axis_), rng(mix_seed(seed, axis_ == Axis::X ? 0x78 : 0x79)) {}
};

/// One step of Algorithm-style chained sampling: the first slice decodes from
/// pure Gaussian noise at first_slice_T; later slices start from the DDIM
/// encoding of the previous reconstruction at level R. Updates chain.prev_x0.
Image reconstruct_slice(const Image& y_i, SliceChain& chain, const LinearDegradation& op,
                        const StepPlan& plan, NoisePredictor& model, const NoiseSchedule& sched);

struct SliceProgress {
    int index = 0;
    double residual = 0.0;  // max |A x_hat - y| in normalized units
    double seconds = 0.0;
};

/// Affine map between raw intensities [lo, hi] and the model range [-1, 1].
struct ValueNorm {
    double lo = 0.0, hi = 1.0;
    Image normalize(const Image& raw) const {
        return (2.0 * (raw.array() - lo) / (hi - lo) - 1.0).matrix();
    }
    Image denormalize(const Image& norm) const {
        return ((norm.array() + 1.0) * 0.5 * (hi - lo) + lo).matrix();
    }
};

struct ReconstructOptions {
    std::uint64_t seed = 0;
    bool chain = true;  // false reproduces the no-reference ablation
    std::function<void(const SliceProgress&)> on_slice;
    int checkpoint_every = 0;  // > 0: write a partial volume every K slices
    std::filesystem::path checkpoint_path;
};

struct ReconstructResult {
    Volume volume;  // denormalized, unclipped; clip at write-out
    std::vector<SliceProgress> slices;
};

/// Slice-by-slice reconstruction along the chosen axis (ascending index),
/// threading one SliceChain. vol_low holds raw intensities; norm maps them
/// into the model's value range and back.
ReconstructResult reconstruct_volume(const Volume& vol_low, Axis axis,
                                     const LinearDegradation& op, const StepPlan& plan,
                                     NoisePredictor& model, const NoiseSchedule& sched,
                                     const ValueNorm& norm, const ReconstructOptions& opts);

/// Clamp voxels to the volume's declared value range (write-out clipping).
void clip_to_range(Volume& vol);

}  // namespace isorecon
