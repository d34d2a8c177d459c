// Copyright (c) 2026 the isorecon authors
// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "isorecon/schedule.hpp"

using namespace isorecon;

namespace {

// Closed-form cosine expression, independent of the cumulative-product path.
double cosine_abar_reference(int t, int T, double s) {
    auto g = [&](double u) {
        const double c = std::cos(((u / T + s) / (1.0 + s)) * M_PI / 2.0);
        return c * c;
    };
    return g(t) / g(0);
}

NoiseSchedule handmade_schedule(std::vector<double> abars) {
    NoiseSchedule sched;
    sched.T = static_cast<int>(abars.size()) - 1;
    sched.s = 0.0;
    sched.kind = "cosine";
    sched.alpha_bars = abars;
    sched.betas.assign(abars.size(), 0.0);
    sched.alphas.assign(abars.size(), 1.0);
    for (std::size_t t = 1; t < abars.size(); ++t) {
        sched.alphas[t] = abars[t] / abars[t - 1];
        sched.betas[t] = 1.0 - sched.alphas[t];
    }
    return sched;
}

}  // namespace

TEST_CASE("cosine schedule construction and invariants") {
    const NoiseSchedule sched = make_cosine_schedule(1000, 0.008);
    CHECK(sched.T == 1000);
    CHECK(sched.alpha_bar(0) == 1.0);
    CHECK(sched.alpha_bar(1000) < 1e-2);

    for (int t = 1; t <= 1000; ++t) {
        CHECK(sched.beta(t) > 0.0);
        CHECK(sched.beta(t) < 1.0);
        CHECK(sched.alpha(t) == 1.0 - sched.beta(t));
        CHECK(sched.alpha_bar(t) == sched.alpha_bar(t - 1) * sched.alpha(t));
        CHECK(sched.alpha_bar(t) < sched.alpha_bar(t - 1));
    }
}

TEST_CASE("cosine schedule matches the closed form away from clipping") {
    const NoiseSchedule sched = make_cosine_schedule(1000, 0.008);
    CHECK(std::abs(sched.alpha_bar(500) - cosine_abar_reference(500, 1000, 0.008)) < 1e-12);
    CHECK(std::abs(sched.alpha_bar(100) - cosine_abar_reference(100, 1000, 0.008)) < 1e-12);
}

TEST_CASE("schedule rejects bad arguments") {
    CHECK_THROWS_AS(make_cosine_schedule(1, 0.008), std::invalid_argument);
    CHECK_THROWS_AS(make_cosine_schedule(1000, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(make_cosine_schedule(1000, -1.0), std::invalid_argument);
}

TEST_CASE("small-T schedules stay bounded") {
    const NoiseSchedule sched = make_cosine_schedule(8, 0.008);
    CHECK(sched.alpha_bar(8) < 1e-2);
    for (int t = 1; t <= 8; ++t) {
        CHECK(sched.beta(t) <= 0.999);
        CHECK(sched.alpha_bar(t) < sched.alpha_bar(t - 1));
    }
}

TEST_CASE("forward_perturb closed-form cases") {
    Image x0 = Image::Random(5, 7);
    Image eps = Image::Random(5, 7);

    SUBCASE("abar = 1 returns x0 exactly") {
        const NoiseSchedule sched = handmade_schedule({1.0, 1.0});
        const Image out = forward_perturb(x0, 1, eps, sched);
        CHECK(out == x0);
    }
    SUBCASE("zero signal leaves the scaled noise term") {
        const NoiseSchedule sched = make_cosine_schedule(100, 0.008);
        const Image out = forward_perturb(Image::Zero(5, 7), 30, eps, sched);
        const Image expect = std::sqrt(1.0 - sched.alpha_bar(30)) * eps;
        CHECK((out - expect).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("constant image, abar = 0.25") {
        const NoiseSchedule sched = handmade_schedule({1.0, 0.25});
        const Image out =
            forward_perturb(Image::Constant(4, 4, 1.0), 1, Image::Constant(4, 4, 1.0), sched);
        CHECK(out(2, 2) == doctest::Approx(0.5 + std::sqrt(0.75)).epsilon(1e-14));
    }
    SUBCASE("zero noise scales the signal exactly") {
        const NoiseSchedule sched = make_cosine_schedule(100, 0.008);
        for (int t : {1, 40, 100}) {
            const Image out = forward_perturb(x0, t, Image::Zero(5, 7), sched);
            const Image expect = std::sqrt(sched.alpha_bar(t)) * x0;
            CHECK(out == expect);
        }
    }
    SUBCASE("shape and range errors") {
        const NoiseSchedule sched = make_cosine_schedule(100, 0.008);
        CHECK_THROWS_AS(forward_perturb(x0, 30, Image::Zero(4, 7), sched), std::invalid_argument);
        CHECK_THROWS_AS(forward_perturb(x0, 0, eps, sched), std::invalid_argument);
        CHECK_THROWS_AS(forward_perturb(x0, 101, eps, sched), std::invalid_argument);
    }
}

TEST_CASE("forward marginal variance is 1 - abar_t (statistical)") {
    const NoiseSchedule sched = make_cosine_schedule(1000, 0.008);
    const int t = 600;
    const double expect = 1.0 - sched.alpha_bar(t);
    const int draws = 200000;

    GaussianStream rng(12345);
    const double x0 = 0.7;
    const double ca = std::sqrt(sched.alpha_bar(t));
    const double mean = ca * x0;
    double var_acc = 0.0;
    for (int i = 0; i < draws; ++i) {
        const double xt = ca * x0 + std::sqrt(expect) * rng.next();
        var_acc += (xt - mean) * (xt - mean);
    }
    const double var = var_acc / (draws - 1);
    const double se = expect * std::sqrt(2.0 / (draws - 1));
    CHECK(std::abs(var - expect) < 3.0 * se);
}

TEST_CASE("ddim_sigma values and feasibility") {
    const NoiseSchedule sched = make_cosine_schedule(1000, 0.008);

    SUBCASE("deterministic mode is exactly zero") {
        for (int t : {1, 137, 1000}) CHECK(ddim_sigma(sched, t, true) == 0.0);
    }
    SUBCASE("t = 1 vanishes because abar_0 = 1") {
        CHECK(ddim_sigma(sched, 1, false) == 0.0);
    }
    SUBCASE("matches direct formula evaluation") {
        const int t = 500;
        const double a = sched.alpha_bar(t);
        const double b = sched.alpha_bar(t - 1);
        const double expect = std::sqrt((1.0 - b) / (1.0 - a)) * std::sqrt(1.0 - a / b);
        CHECK(std::abs(ddim_sigma(sched, t, false) - expect) < 1e-12);
    }
    SUBCASE("noise decomposition stays feasible for every t") {
        for (int t = 1; t <= sched.T; ++t) {
            const double sigma = ddim_sigma(sched, t, false);
            const double arg = 1.0 - sched.alpha_bar(t - 1) - sigma * sigma;
            CHECK(arg >= -1e-12);  // the square-root argument is non-negative
            CHECK(sigma * sigma + arg <= 1.0 - sched.alpha_bar(t - 1) + 1e-12);
        }
    }
    SUBCASE("range checks") {
        CHECK_THROWS_AS(ddim_sigma(sched, 0, false), std::invalid_argument);
        CHECK_THROWS_AS(ddim_sigma(sched, 1001, false), std::invalid_argument);
        CHECK_THROWS_AS(ddim_sigma_between(sched, 10, 10, false), std::invalid_argument);
    }
    SUBCASE("strided sigma agrees with the consecutive case") {
        CHECK(ddim_sigma_between(sched, 500, 499, false) == ddim_sigma(sched, 500, false));
    }
}
