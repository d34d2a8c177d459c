// Copyright (c) 2026 the isorecon authors
// SPDX-License-Identifier: Apache-2.0
#include "isorecon/schedule.hpp"

#include <cmath>

namespace isorecon {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kBetaMax = 0.999;

void check_t(const NoiseSchedule& sched, int t) {
    detail::require(t >= 1 && t <= sched.T,
                    "step index t=" + std::to_string(t) + " out of range [1, " +
                        std::to_string(sched.T) + "]");
}
}  // namespace

double NoiseSchedule::beta(int t) const {
    check_t(*this, t);
    return betas[static_cast<std::size_t>(t)];
}

double NoiseSchedule::alpha(int t) const {
    check_t(*this, t);
    return alphas[static_cast<std::size_t>(t)];
}

double NoiseSchedule::alpha_bar(int t) const {
    detail::require(t >= 0 && t <= T,
                    "alpha_bar index t=" + std::to_string(t) + " out of range [0, " +
                        std::to_string(T) + "]");
    return alpha_bars[static_cast<std::size_t>(t)];
}

NoiseSchedule make_cosine_schedule(int T, double s) {
    detail::require(T >= 2, "schedule needs T >= 2");
    detail::require(s > 0.0, "cosine offset s must be positive");

    auto g = [T, s](double t) {
        const double u = ((t / T + s) / (1.0 + s)) * kPi / 2.0;
        const double c = std::cos(u);
        return c * c;
    };

    NoiseSchedule sched;
    sched.T = T;
    sched.s = s;
    sched.kind = "cosine";
    sched.betas.assign(static_cast<std::size_t>(T) + 1, 0.0);
    sched.alphas.assign(static_cast<std::size_t>(T) + 1, 1.0);
    sched.alpha_bars.assign(static_cast<std::size_t>(T) + 1, 1.0);

    const double g0 = g(0.0);
    double prev_raw = 1.0;
    for (int t = 1; t <= T; ++t) {
        const double raw = g(static_cast<double>(t)) / g0;
        double beta = 1.0 - raw / prev_raw;
        prev_raw = raw;
        if (beta > kBetaMax) beta = kBetaMax;
        sched.betas[static_cast<std::size_t>(t)] = beta;
        sched.alphas[static_cast<std::size_t>(t)] = 1.0 - beta;
        // Cumulative product, not the g-ratio: keeps abar[t] == abar[t-1]*alpha[t]
        // exact even where clipping made the two differ.
        sched.alpha_bars[static_cast<std::size_t>(t)] =
            sched.alpha_bars[static_cast<std::size_t>(t) - 1] * sched.alphas[static_cast<std::size_t>(t)];
    }
    return sched;
}

Image forward_perturb(const Image& x0, int t, const Image& eps, const NoiseSchedule& sched) {
    check_t(sched, t);
    detail::require(x0.rows() == eps.rows() && x0.cols() == eps.cols(),
                    "forward_perturb: x0 and eps shapes differ");
    const double abar = sched.alpha_bar(t);
    return std::sqrt(abar) * x0 + std::sqrt(1.0 - abar) * eps;
}

double ddim_sigma(const NoiseSchedule& sched, int t, bool deterministic) {
    check_t(sched, t);
    return ddim_sigma_between(sched, t, t - 1, deterministic);
}

double ddim_sigma_between(const NoiseSchedule& sched, int t, int t_prev, bool deterministic) {
    check_t(sched, t);
    detail::require(t_prev >= 0 && t_prev < t, "ddim_sigma_between: need 0 <= t_prev < t");
    if (deterministic) return 0.0;
    const double abar_t = sched.alpha_bar(t);
    const double abar_p = sched.alpha_bar(t_prev);
    return std::sqrt((1.0 - abar_p) / (1.0 - abar_t)) * std::sqrt(1.0 - abar_t / abar_p);
}

}  // namespace isorecon
