// Copyright (c) 2026 the isorecon authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "isorecon/common.hpp"

namespace isorecon {

/// Diffusion-time coefficient tables. Arrays are 1-indexed by step t in
/// {1..T}; alpha_bar(0) == 1 is stored explicitly so that the t=1 reverse
/// step needs no special case. Immutable after construction.
struct NoiseSchedule {
    int T = 0;
    double s = 0.0;
    std::string kind;             // "cosine"
    std::vector<double> betas;        // size T+1, index 0 unused (0)
    std::vector<double> alphas;       // size T+1, alphas[t] = 1 - betas[t]
    std::vector<double> alpha_bars;   // size T+1, alpha_bars[0] = 1

    double beta(int t) const;
    double alpha(int t) const;
    double alpha_bar(int t) const;    // accepts t in [0, T]
};

/// Cosine schedule: alpha_bar(t) = g(t)/g(0) with
/// g(t) = cos^2(((t/T + s) / (1 + s)) * pi/2), each derived beta clipped to
/// at most 0.999 so alpha_bar(T) does not underflow.
NoiseSchedule make_cosine_schedule(int T, double s = 0.008);

/// Closed-form draw of x_t given x_0: sqrt(abar_t) x0 + sqrt(1-abar_t) eps.
Image forward_perturb(const Image& x0, int t, const Image& eps, const NoiseSchedule& sched);

/// DDIM noise scale sigma_t for the consecutive step t -> t-1.
/// deterministic=true gives the stochasticity-free iteration (sigma = 0).
double ddim_sigma(const NoiseSchedule& sched, int t, bool deterministic);

/// Strided generalization: sigma for a jump from level t down to level
/// t_prev (0 <= t_prev < t). ddim_sigma(sched, t, d) == the t_prev = t-1 case.
double ddim_sigma_between(const NoiseSchedule& sched, int t, int t_prev, bool deterministic);

}  // namespace isorecon
