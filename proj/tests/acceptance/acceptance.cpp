// Copyright (c) 2026 the isorecon authors
// SPDX-License-Identifier: Apache-2.0
//
// End-to-end acceptance suite. Each criterion prints one PASS/FAIL line;
// the process exits non-zero if any criterion fails. Criteria 4-7 share one
// desk-scale training + reconstruction run.
#include <chrono>
#include <cmath>
#include <cstring>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <thread>
#include <vector>

#include "isorecon/degrade.hpp"
#include "isorecon/eval.hpp"
#include "isorecon/model.hpp"
#include "isorecon/sampler.hpp"
#include "isorecon/schedule.hpp"

using namespace isorecon;

namespace {

int g_failures = 0;

void report(int criterion, const std::string& name, bool pass, const std::string& detail) {
    std::cout << (pass ? "[PASS]" : "[FAIL]") << " criterion " << criterion << ": " << name
              << " — " << detail << "\n"
              << std::flush;
    if (!pass) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct ScalePredictor : NoisePredictor {
    double k;
    explicit ScalePredictor(double k_) : k(k_) {}
    Image predict(const Image& x, int) override { return k * x; }
};

// ---------------------------------------------------------------------------
// Criterion 1: operator algebra (four Penrose conditions, dense oracle).

void criterion_1() {
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    std::string worst_case;
    int combos = 0;
    for (int n : {16, 32, 64}) {
        for (int f : {2, 4, 8}) {
            std::vector<LinearDegradation> ops;
            for (double sigma : {1.0, 2.0, 4.0})
                ops.push_back(make_exact_operator(gaussian_psf(sigma), f, n));
            ops.push_back(make_average_operator(f, n));
            ops.push_back(make_imputation_operator(f, n));
            for (const auto& op : ops) {
                const double r = penrose_residuals(op.A, op.A_pinv).maxCoeff();
                ++combos;
                if (r > worst) {
                    worst = r;
                    worst_case = to_string(op.kind) + " n=" + std::to_string(n) +
                                 " f=" + std::to_string(f);
                }
            }
        }
    }
    const double secs = seconds_since(t0);
    std::ostringstream os;
    os << combos << " combinations, worst residual " << worst << " (" << worst_case << ") in "
       << secs << "s";
    report(1, "operator algebra (Penrose, tol 1e-8, < 60 s)", worst < 1e-8 && secs < 60.0,
           os.str());
}

// ---------------------------------------------------------------------------
// Criterion 2: Eq.-5-style consistency of the range-space replacement.

void criterion_2() {
    const auto t0 = std::chrono::steady_clock::now();
    GaussianStream rng(2024);
    double worst_consistency = 0.0, worst_idem = 0.0, worst_fixed = 0.0;
    for (int n : {16, 32, 64}) {
        for (int f : {2, 4, 8}) {
            std::vector<LinearDegradation> ops;
            for (double sigma : {1.0, 2.0, 4.0})
                ops.push_back(make_exact_operator(gaussian_psf(sigma), f, n));
            ops.push_back(make_average_operator(f, n));
            ops.push_back(make_imputation_operator(f, n));
            for (const auto& op : ops) {
                const Image x = rng.next_image(n, 6);
                const Image x_gt = rng.next_image(n, 6);
                const Image y = apply(op, x_gt);

                const Image out = range_space_replace(x, y, op);
                worst_consistency =
                    std::max(worst_consistency, (apply(op, out) - y).cwiseAbs().maxCoeff());
                const Image twice = range_space_replace(out, y, op);
                worst_idem = std::max(worst_idem, (twice - out).cwiseAbs().maxCoeff());
                const Image fixed = range_space_replace(x, apply(op, x), op);
                worst_fixed = std::max(worst_fixed, (fixed - x).cwiseAbs().maxCoeff());
            }
        }
    }
    const double secs = seconds_since(t0);
    std::ostringstream os;
    os << "consistency " << worst_consistency << ", idempotence " << worst_idem
       << ", fixed-point " << worst_fixed << " in " << secs << "s";
    report(2, "range-space replacement consistency (tol 1e-8, < 60 s)",
           worst_consistency < 1e-8 && worst_idem < 1e-8 && worst_fixed < 1e-8 && secs < 60.0,
           os.str());
}

// ---------------------------------------------------------------------------
// Criterion 3: sampler equals a straight-line reference for stub predictors.

Image reference_encode(const Image& x0, const std::vector<int>& grid, double k,
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

Image reference_decode(const Image& x_start, const std::vector<int>& grid, double k,
                       const Image& y, const LinearDegradation& op, const NoiseSchedule& sched,
                       GaussianStream rng) {
    Image x = x_start;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const int t = grid[j];
        const double at = sched.alpha_bar(t);
        const Image eps = k * x;
        const Image x0 = (x - std::sqrt(1.0 - at) * eps) / std::sqrt(at);
        const Image x0h = op.A_pinv * y + x0 - op.A_pinv * (op.A * x0);
        if (j + 1 == grid.size()) return x0h;
        const double ap = sched.alpha_bar(grid[j + 1]);
        const double sigma = std::sqrt((1.0 - ap) / (1.0 - at)) * std::sqrt(1.0 - at / ap);
        const double coef = std::sqrt(std::max(0.0, 1.0 - ap - sigma * sigma));
        x = std::sqrt(ap) * x0h + coef * eps + sigma * rng.next_image(x.rows(), x.cols());
    }
    return x;
}

void criterion_3() {
    const auto t0 = std::chrono::steady_clock::now();
    GaussianStream data_rng(333);
    double worst = 0.0;

    struct GridCase {
        NoiseSchedule sched;
        StepPlan plan;
    };
    std::vector<GridCase> cases;
    {
        GridCase paper;
        paper.sched = make_cosine_schedule(1000, 0.008);
        paper.plan.R = 200;
        paper.plan.encode_steps = 4;
        paper.plan.decode_steps = 50;
        paper.plan.first_slice_T = 1000;
        paper.plan.clip_x0 = false;  // compare the bare recursion
        cases.push_back(std::move(paper));
        GridCase tiny;
        tiny.sched = make_cosine_schedule(8, 0.008);
        tiny.plan.R = 8;
        tiny.plan.encode_steps = 8;
        tiny.plan.decode_steps = 8;
        tiny.plan.first_slice_T = 8;
        tiny.plan.clip_x0 = false;
        cases.push_back(std::move(tiny));
    }

    const std::vector<LinearDegradation> ops = {
        make_exact_operator(gaussian_psf(1.0), 4, 16),
        make_interpolation_operator(2, 16, InterpMethod::Linear),
    };

    for (const auto& c : cases) {
        for (const auto& op : ops) {
            for (double k : {0.0, 1.0, 0.35}) {
                ScalePredictor model(k);
                const Image x0 = data_rng.next_image(16, 16);
                const Image x_gt = data_rng.next_image(16, 16);
                const Image y = apply(op, x_gt);

                const Image enc = ddim_encode(x0, c.plan, model, c.sched);
                const Image enc_ref = reference_encode(x0, encode_grid(c.plan), k, c.sched);
                worst = std::max(worst, (enc - enc_ref).cwiseAbs().maxCoeff());

                GaussianStream rng_a(777), rng_b(777);
                const Image dec =
                    ddnm_decode(enc, c.plan.R, y, op, c.plan, model, c.sched, rng_a);
                const Image dec_ref = reference_decode(enc_ref, decode_grid(c.plan, c.plan.R), k,
                                                       y, op, c.sched, rng_b);
                worst = std::max(worst, (dec - dec_ref).cwiseAbs().maxCoeff());
            }
        }
    }
    const double secs = seconds_since(t0);
    std::ostringstream os;
    os << "max |sampler - reference| = " << worst << " in " << secs << "s";
    report(3, "sampler oracle equivalence (tol 1e-8, < 60 s)", worst < 1e-8 && secs < 60.0,
           os.str());
}

// ---------------------------------------------------------------------------
// Criteria 4-7: desk-scale end-to-end run.

struct DeskRun {
    Volume gt, low;
    DenoiserCheckpoint ckpt;
    NoiseSchedule sched;
    StepPlan plan;
    ValueNorm norm;
    const LinearDegradation* interp_op = nullptr;
    Volume recon_x, recon_y, ens;     // clipped reconstructions
    Volume baseline;                  // linear interpolation along z
    double train_seconds = 0.0;
    double recon_seconds = 0.0;
};

Volume reconstruct_axis(const DeskRun& run, Axis axis, const LinearDegradation& op, bool chain,
                        std::uint64_t seed) {
    Denoiser model(run.ckpt);
    ReconstructOptions opts;
    opts.seed = seed;
    opts.chain = chain;
    Volume out =
        reconstruct_volume(run.low, axis, op, run.plan, model, run.sched, run.norm, opts).volume;
    clip_to_range(out);
    return out;
}

std::optional<DeskRun> desk_run(std::int64_t train_steps) {
    DeskRun run;
    const auto t0 = std::chrono::steady_clock::now();

    run.gt = make_membrane_phantom(64, 20260401);
    run.low = simulate_anisotropy(run.gt, 2.0, 4);  // 16 x 64 x 64

    auto low_ptr = std::make_shared<Volume>(run.low);
    const auto [lo, hi] = low_ptr->robust_range();
    low_ptr->value_lo = lo;
    low_ptr->value_hi = hi;
    const SliceDataset data = SliceDataset::from_volume(low_ptr, 64, 1 << 20, 7);

    run.sched = make_cosine_schedule(1000, 0.008);
    DenoiserConfig dcfg;
    dcfg.in_size = 64;
    dcfg.base_channels = 16;
    dcfg.channel_multipliers = {1, 2, 2};
    dcfg.attention_stages = {2};
    dcfg.time_embed_dim = 64;
    dcfg.res_per_stage = 2;

    TrainConfig tcfg;
    tcfg.lr = 3e-4;
    tcfg.batch = 4;
    tcfg.steps = train_steps;
    tcfg.ema_decay = 0.999;
    tcfg.seed = 11;
    tcfg.log_every = 500;

    std::cout << "criterion 4: training " << tcfg.steps << " steps (crop 64)...\n";
    run.ckpt = train_denoiser(data, run.sched, dcfg, tcfg, &std::cout);
    run.train_seconds = seconds_since(t0);
    std::cout << "criterion 4: training took " << run.train_seconds << "s\n";

    run.plan.R = 200;
    run.plan.encode_steps = 4;
    run.plan.decode_steps = 50;
    run.plan.first_slice_T = 1000;
    run.norm = ValueNorm{run.ckpt.value_lo, run.ckpt.value_hi};
    run.interp_op = &make_operator({DegradationKind::Interpolation, 4}, 64);

    const auto t1 = std::chrono::steady_clock::now();
    std::thread ty([&] { run.recon_y = reconstruct_axis(run, Axis::Y, *run.interp_op, true, 42); });
    run.recon_x = reconstruct_axis(run, Axis::X, *run.interp_op, true, 42);
    ty.join();
    run.recon_seconds = seconds_since(t1);
    std::cout << "criterion 4: both-axes reconstruction took " << run.recon_seconds << "s\n";

    run.ens = ensemble(run.recon_x, run.recon_y);
    clip_to_range(run.ens);

    // Baseline: linear interpolation of the observation along z.
    run.baseline = Volume(64, 64, 64, run.low.dtype);
    run.baseline.value_lo = run.low.value_lo;
    run.baseline.value_hi = run.low.value_hi;
    for (int x = 0; x < 64; ++x) {
        const Image up = apply_pinv(*run.interp_op, run.low.slice_zy(x));
        run.baseline.set_slice_zy(x, up);
    }
    clip_to_range(run.baseline);
    return run;
}

struct PlaneScore {
    double psnr_zy = 0.0, msssim_zy = 0.0;
};

PlaneScore zy_scores(const Volume& recon, const Volume& gt) {
    const EvalReport r = per_plane_eval(recon, gt);
    return {r.zy.psnr, r.zy.ms_ssim};
}

double chained_axis_roughness(const Volume& vol) {
    // Mean |v(z, y, x+1) - v(z, y, x)|: inter-slice difference along the
    // chained axis as seen in XY views.
    double acc = 0.0;
    std::size_t count = 0;
    for (int z = 0; z < vol.nz; ++z)
        for (int y = 0; y < vol.ny; ++y)
            for (int x = 0; x + 1 < vol.nx; ++x) {
                acc += std::abs(vol.at(z, y, x + 1) - vol.at(z, y, x));
                ++count;
            }
    return acc / static_cast<double>(count);
}

void criteria_4_to_7(std::int64_t train_steps, const std::set<int>& enabled) {
    const auto t0 = std::chrono::steady_clock::now();
    std::optional<DeskRun> maybe_run;
    try {
        maybe_run = desk_run(train_steps);
    } catch (const std::exception& e) {
        const std::string msg = std::string("desk-scale run failed: ") + e.what();
        for (int c : {4, 5, 6, 7})
            if (enabled.count(c)) report(c, "desk-scale end-to-end", false, msg);
        return;
    }
    DeskRun& run = *maybe_run;

    const PlaneScore ours = zy_scores(run.ens, run.gt);
    const PlaneScore base = zy_scores(run.baseline, run.gt);

    if (enabled.count(4)) {
        const double total = seconds_since(t0);
        std::ostringstream os;
        os.setf(std::ios::fixed);
        os.precision(3);
        os << "ensemble ZY psnr " << ours.psnr_zy << " dB vs baseline " << base.psnr_zy
           << " dB (need +0.5); ms-ssim " << ours.msssim_zy << " vs " << base.msssim_zy
           << "; runtime " << total << "s";
        const bool pass = ours.psnr_zy >= base.psnr_zy + 0.5 && ours.msssim_zy > base.msssim_zy &&
                          total <= 4.0 * 3600.0;
        report(4, "desk-scale end-to-end beats the interpolation baseline", pass, os.str());
    }

    if (enabled.count(5)) {
        const Volume nochain_x = reconstruct_axis(run, Axis::X, *run.interp_op, false, 42);
        const double r_gt = chained_axis_roughness(run.gt);
        const double r_chain = chained_axis_roughness(run.recon_x) / r_gt;
        const double r_nochain = chained_axis_roughness(nochain_x) / r_gt;
        std::ostringstream os;
        os << "inter-slice roughness ratio vs gt: chained " << r_chain << ", no-chain "
           << r_nochain << " (closer to 1 wins)";
        report(5, "chaining ablation (ordering only)",
               std::abs(r_chain - 1.0) < std::abs(r_nochain - 1.0), os.str());
    }

    if (enabled.count(6)) {
        const LinearDegradation& imput_op = make_operator({DegradationKind::Imputation, 4}, 64);
        const Volume imput_x = reconstruct_axis(run, Axis::X, imput_op, true, 42);
        const double psnr_interp = zy_scores(run.recon_x, run.gt).psnr_zy;
        const double psnr_imput = zy_scores(imput_x, run.gt).psnr_zy;
        std::ostringstream os;
        os << "ZY psnr: interpolation " << psnr_interp << " dB, imputation " << psnr_imput
           << " dB";
        report(6, "operator ablation (interpolation >= imputation)", psnr_interp >= psnr_imput,
               os.str());
    }

    if (enabled.count(7)) {
        double sq_y = 0.0;
        std::thread ty([&] {
            const Volume again_y = reconstruct_axis(run, Axis::Y, *run.interp_op, true, 42);
            for (std::size_t i = 0; i < again_y.data.size(); ++i) {
                const double d = again_y.data[i] - run.recon_y.data[i];
                sq_y += d * d;
            }
        });
        const Volume again_x = reconstruct_axis(run, Axis::X, *run.interp_op, true, 42);
        ty.join();
        double sq = sq_y;
        for (std::size_t i = 0; i < again_x.data.size(); ++i) {
            const double d = again_x.data[i] - run.recon_x.data[i];
            sq += d * d;
        }
        const double rms = std::sqrt(sq / (2.0 * static_cast<double>(again_x.data.size())));
        std::ostringstream os;
        os << "rerun RMS difference " << rms << " (declared tolerance 1e-6; bitwise expected on cpu)";
        report(7, "determinism of the reconstruction", rms <= 1e-6, os.str());
    }
}

// ---------------------------------------------------------------------------
// Criterion 8: metric sanity tables.

Image metric_pattern(int rows, int cols) {
    Image img(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            img(r, c) = 0.5 + 0.17 * std::sin(2.0 * M_PI * r / 17.0) * std::cos(2.0 * M_PI * c / 23.0) +
                        0.10 * std::sin(2.0 * M_PI * (r + c) / 9.0);
    return img;
}

void criterion_8() {
    bool pass = true;
    std::ostringstream os;

    GaussianStream rng(888);
    const Image a = (rng.next_image(64, 64).array().abs() * 40.0 + 20.0).matrix();

    if (!std::isinf(psnr(a, a, 255.0))) pass = false;

    const Image b = a.array() + 10.0;
    const double expect = 20.0 * std::log10(25.5);
    const double got = psnr(a, b, 255.0);
    if (std::abs(got - expect) > 1e-12) pass = false;
    os << "psnr(err=10, peak=255) = " << got << " (expect " << expect << "); ";

    const Volume phantom = make_membrane_phantom(64, 99);
    const Image p = phantom.slice_xy(32);
    const double self = ms_ssim(p, p, 1.0);
    if (self != 1.0) pass = false;
    os << "ms_ssim(self) = " << self << "; ";

    const Image q = metric_pattern(192, 192);
    const double rms = std::sqrt(q.array().square().mean());
    const Image noisy = q + rms * rng.next_image(q.rows(), q.cols());
    const double snr0 = ms_ssim(q, noisy, 1.0);  // noise power == signal power
    if (!(snr0 < 0.5)) pass = false;
    os << "ms_ssim(snr 0 dB, 5 scales) = " << snr0 << " (< 0.5); ";

    const Image shifted = p.array() + 0.02;
    const double near = ms_ssim(p, shifted, 1.0);
    if (!(near >= 0.99)) pass = false;
    os << "ms_ssim(+0.02) = " << near << " (>= 0.99)";

    report(8, "metric sanity tables", pass, os.str());
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> enabled = {1, 2, 3, 4, 5, 6, 7, 8};
    std::int64_t train_steps = 6000;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
            enabled.clear();
            std::stringstream ss(argv[++i]);
            std::string tok;
            while (std::getline(ss, tok, ',')) enabled.insert(std::stoi(tok));
        } else if (std::strcmp(argv[i], "--train-steps") == 0 && i + 1 < argc) {
            train_steps = std::stoll(argv[++i]);
        }
    }

    if (enabled.count(1)) criterion_1();
    if (enabled.count(2)) criterion_2();
    if (enabled.count(3)) criterion_3();
    if (enabled.count(4) || enabled.count(5) || enabled.count(6) || enabled.count(7))
        criteria_4_to_7(train_steps, enabled);
    if (enabled.count(8)) criterion_8();

    if (g_failures) {
        std::cout << g_failures << " criterion(s) failed\n";
        return 1;
    }
    std::cout << "all acceptance criteria passed\n";
    return 0;
}
