// Copyright (c) 2026 the isorecon authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: train, simulate, reconstruct, evaluate, pipeline.
// Exit codes: 0 success, 2 configuration error, 3 runtime failure.
#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "isorecon/checkpoint.hpp"
#include "isorecon/dataset.hpp"
#include "isorecon/degrade.hpp"
#include "isorecon/eval.hpp"
#include "isorecon/model.hpp"
#include "isorecon/sampler.hpp"
#include "isorecon/schedule.hpp"
#include "isorecon/volume_io.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace isorecon;

namespace {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void check_device_env() {
    const char* dev = std::getenv("ISORECON_DEVICE");
    if (dev && *dev && std::string(dev) != "cpu")
        throw ConfigError("ISORECON_DEVICE=" + std::string(dev) +
                          " is not available (this build supports: cpu)");
}

/// Collects validation problems so a bad config reports every error at once.
struct Validator {
    std::vector<std::string> errors;

    void require(bool ok, const std::string& msg) {
        if (!ok) errors.push_back(msg);
    }
    void require_file(const fs::path& p, const std::string& key) {
        if (p.empty())
            errors.push_back(key + ": path is required");
        else if (!fs::exists(p))
            errors.push_back(key + ": file not found: " + p.string());
    }
    void finish() const {
        if (errors.empty()) return;
        std::string all = "invalid configuration:";
        for (const auto& e : errors) all += "\n  - " + e;
        throw ConfigError(all);
    }
};

void write_text(const fs::path& path, const std::string& text) {
    if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::trunc);
        detail::require_runtime(f.good(), "cannot write " + path.string());
        f << text;
    }
    fs::rename(tmp, path);  // single writer, atomic publish
}

void write_volume_atomic(const fs::path& path, const Volume& vol) {
    const fs::path tmp = path.string() + ".tmp" + path.extension().string();
    write_volume(tmp, vol);
    const fs::path tmp_side = tmp.string() + ".json";  // raw sidecar, if any
    if (fs::exists(tmp_side)) fs::rename(tmp_side, path.string() + ".json");
    fs::rename(tmp, path);
}

void echo_config(const fs::path& dir, const std::string& command, const json& resolved) {
    json j;
    j["command"] = command;
    j["device"] = "cpu";
    j["config"] = resolved;
    write_text(dir / ("resolved_config_" + command + ".json"), j.dump(2) + "\n");
}

fs::path output_dir_for(const fs::path& out_file) {
    return out_file.parent_path().empty() ? fs::path(".") : out_file.parent_path();
}

// --------------------------------------------------------------------------
// train

struct TrainArgs {
    fs::path input, out;
    int T = 1000;
    double s = 0.008;
    int crop = 64;
    std::int64_t count = 200000;
    TrainConfig tcfg;
    DenoiserConfig dcfg;
};

json train_json(const TrainArgs& a) {
    return {{"input", a.input.string()},
            {"out", a.out.string()},
            {"schedule", {{"kind", "cosine"}, {"T", a.T}, {"s", a.s}}},
            {"crop", a.crop},
            {"count", a.count},
            {"train",
             {{"lr", a.tcfg.lr},
              {"batch", a.tcfg.batch},
              {"steps", a.tcfg.steps},
              {"ema_decay", a.tcfg.ema_decay},
              {"seed", a.tcfg.seed},
              {"log_every", a.tcfg.log_every}}},
            {"denoiser",
             {{"in_size", a.dcfg.in_size},
              {"base_channels", a.dcfg.base_channels},
              {"channel_multipliers", a.dcfg.channel_multipliers},
              {"attention_stages", a.dcfg.attention_stages},
              {"time_embed_dim", a.dcfg.time_embed_dim},
              {"res_per_stage", a.dcfg.res_per_stage}}}};
}

int cmd_train(const TrainArgs& a) {
    Validator v;
    v.require_file(a.input, "--input");
    v.require(!a.out.empty(), "--out: checkpoint path is required");
    v.require(a.T >= 2, "--T must be >= 2");
    v.require(a.s > 0, "--s must be positive");
    v.require(a.crop >= 1, "--crop must be positive");
    v.require(a.count >= 1, "--count must be positive");
    v.require(a.tcfg.lr > 0, "--lr must be positive");
    v.require(a.tcfg.batch >= 1, "--batch must be >= 1");
    v.require(a.tcfg.steps >= 1, "--steps must be >= 1");
    v.require(a.tcfg.ema_decay >= 0 && a.tcfg.ema_decay < 1, "--ema-decay must be in [0, 1)");
    v.require(!a.dcfg.channel_multipliers.empty(), "--mults must not be empty");
    v.require(a.crop % a.dcfg.spatial_divisor() == 0,
              "--crop must be divisible by 2^(stages-1) = " +
                  std::to_string(a.dcfg.spatial_divisor()));
    v.finish();

    auto vol = std::make_shared<Volume>(read_volume(a.input));
    {
        Validator v2;
        v2.require(vol->ny >= a.crop && vol->nx >= a.crop,
                   "input volume lateral extents are smaller than --crop");
        v2.finish();
    }
    const auto [lo, hi] = vol->robust_range();
    vol->value_lo = lo;
    vol->value_hi = hi;
    std::cout << "normalization range: [" << lo << ", " << hi << "]\n";

    const SliceDataset data = SliceDataset::from_volume(vol, a.crop, a.count, a.tcfg.seed);
    const NoiseSchedule sched = make_cosine_schedule(a.T, a.s);

    DenoiserConfig dcfg = a.dcfg;
    dcfg.in_size = a.crop;
    dcfg.validate();

    echo_config(output_dir_for(a.out), "train", train_json(a));
    const DenoiserCheckpoint ckpt = train_denoiser(data, sched, dcfg, a.tcfg, &std::cout);
    save_checkpoint(a.out, ckpt);

    Denoiser model(ckpt);
    const double final_loss = eval_denoiser_loss(model, data, 64, a.tcfg.seed + 1);
    std::cout << "final validation loss (64 draws): " << final_loss << "\n";
    std::cout << "checkpoint written: " << a.out.string() << "\n";
    return 0;
}

// --------------------------------------------------------------------------
// simulate

struct SimulateArgs {
    fs::path input, out;
    double sigma = 2.0;
    int factor = 4;
    int phantom = 0;
    std::uint64_t phantom_seed = 0;
};

json simulate_json(const SimulateArgs& a) {
    return {{"input", a.input.string()}, {"out", a.out.string()},   {"sigma", a.sigma},
            {"factor", a.factor},        {"phantom", a.phantom},    {"phantom_seed", a.phantom_seed}};
}

int cmd_simulate(const SimulateArgs& a) {
    Validator v;
    v.require(!a.out.empty(), "--out is required");
    v.require(a.sigma >= 0, "--sigma must be non-negative");
    v.require(a.factor >= 1, "--factor must be >= 1");
    if (a.phantom == 0)
        v.require_file(a.input, "--input");
    else
        v.require(a.phantom >= 8 && a.input.empty(),
                  "--phantom needs size >= 8 and excludes --input");
    v.finish();

    Volume iso = a.phantom > 0 ? make_membrane_phantom(a.phantom, a.phantom_seed)
                               : read_volume(a.input);
    {
        Validator v2;
        v2.require(iso.nz % a.factor == 0, "--factor must divide the input z-extent");
        v2.finish();
    }
    const Volume low = simulate_anisotropy(iso, a.sigma, a.factor);
    echo_config(output_dir_for(a.out), "simulate", simulate_json(a));
    write_volume_atomic(a.out, low);
    if (a.phantom > 0) {
        const fs::path iso_path = output_dir_for(a.out) / ("phantom" + a.out.extension().string());
        write_volume_atomic(iso_path, iso);
        std::cout << "phantom written: " << iso_path.string() << "\n";
    }
    std::cout << "simulated volume written: " << a.out.string() << " (" << low.nz << "x" << low.ny
              << "x" << low.nx << ")\n";
    return 0;
}

// --------------------------------------------------------------------------
// reconstruct

struct ReconstructArgs {
    fs::path input, checkpoint, outdir;
    std::string operator_kind = "interpolation";
    std::string method = "linear";
    double sigma = 0.0;
    int factor = 4;
    int T = 0;  // 0: take from checkpoint
    StepPlan plan;
    std::string axes = "both";
    std::uint64_t seed = 0;
    bool no_chain = false;
    int save_every = 0;
    std::string format = "tiff";

    ReconstructArgs() { plan.first_slice_T = 0; }  // 0: default to T
};

json reconstruct_json(const ReconstructArgs& a) {
    return {{"input", a.input.string()},
            {"checkpoint", a.checkpoint.string()},
            {"outdir", a.outdir.string()},
            {"operator", {{"kind", a.operator_kind}, {"factor", a.factor}, {"sigma", a.sigma},
                          {"method", a.method}}},
            {"plan", {{"T", a.T}, {"R", a.plan.R}, {"encode_steps", a.plan.encode_steps},
                      {"decode_steps", a.plan.decode_steps},
                      {"first_slice_T", a.plan.first_slice_T}}},
            {"axes", a.axes},
            {"seed", a.seed},
            {"chain", !a.no_chain},
            {"save_every", a.save_every},
            {"format", a.format}};
}

struct AxisRun {
    ReconstructResult result;
    fs::path volume_path;
};

int cmd_reconstruct(ReconstructArgs a) {
    Validator v;
    v.require_file(a.input, "--input");
    v.require_file(a.checkpoint, "--checkpoint");
    v.require(!a.outdir.empty(), "--outdir is required");
    v.require(a.axes == "x" || a.axes == "y" || a.axes == "both",
              "--axes must be one of x|y|both");
    v.require(a.factor >= 1, "--factor must be >= 1");
    v.require(a.format == "tiff" || a.format == "raw", "--format must be tiff or raw");
    OperatorSpec opspec;
    try {
        opspec.kind = degradation_kind_from_string(a.operator_kind);
    } catch (const std::invalid_argument& e) {
        v.errors.emplace_back(e.what());
    }
    try {
        opspec.method = interp_method_from_string(a.method);
    } catch (const std::invalid_argument& e) {
        v.errors.emplace_back(e.what());
    }
    if (opspec.kind == DegradationKind::ExactPSF)
        v.require(a.sigma > 0, "--sigma must be positive for the exact-psf operator");
    v.finish();

    DenoiserCheckpoint ckpt;
    Volume low;
    try {
        ckpt = load_checkpoint(a.checkpoint);
        low = read_volume(a.input);
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }

    if (a.T == 0) a.T = ckpt.schedule_T;
    if (a.plan.first_slice_T == 0) a.plan.first_slice_T = a.T;

    Validator v2;
    v2.require(a.T == ckpt.schedule_T,
               "--T=" + std::to_string(a.T) + " does not match the checkpoint schedule (T=" +
                   std::to_string(ckpt.schedule_T) + ")");
    v2.require(a.plan.R >= 1 && a.plan.R <= a.T, "--R must be in [1, T]");
    v2.require(a.plan.encode_steps >= 1 && a.plan.encode_steps <= a.plan.R,
               "--encode-steps must be in [1, R]");
    v2.require(a.plan.decode_steps >= 1 && a.plan.decode_steps <= a.plan.R,
               "--decode-steps must be in [1, R]");
    v2.require(a.plan.first_slice_T >= a.plan.R && a.plan.first_slice_T <= a.T,
               "--first-slice-T must be in [R, T]");
    const int n = a.factor * low.nz;
    const int div = ckpt.config.spatial_divisor();
    v2.require(n % div == 0, "reconstructed z-extent " + std::to_string(n) +
                                 " is not divisible by the model's stage factor " +
                                 std::to_string(div));
    if (a.axes != "y")
        v2.require(low.ny % div == 0, "y-extent is not divisible by the model's stage factor");
    if (a.axes != "x")
        v2.require(low.nx % div == 0, "x-extent is not divisible by the model's stage factor");
    v2.finish();

    opspec.f = a.factor;
    opspec.sigma = a.sigma;
    const LinearDegradation& op = make_operator(opspec, n);
    const NoiseSchedule sched = ckpt.make_schedule();
    const ValueNorm norm{ckpt.value_lo, ckpt.value_hi};

    fs::create_directories(a.outdir);
    echo_config(a.outdir, "reconstruct", reconstruct_json(a));

    const std::string ext = a.format == "tiff" ? ".tiff" : ".raw";
    auto run_axis = [&](Axis axis) {
        const char tag = axis == Axis::X ? 'x' : 'y';
        Denoiser model(ckpt);  // per-axis instance: predict keeps scratch state
        std::ostringstream log;
        ReconstructOptions opts;
        opts.seed = a.seed;
        opts.chain = !a.no_chain;
        opts.checkpoint_every = a.save_every;
        opts.checkpoint_path = a.outdir / (std::string("partial_") + tag + ".raw");
        opts.on_slice = [&log, tag](const SliceProgress& p) {
            log << "axis=" << tag << " slice=" << p.index << " residual=" << p.residual
                << " seconds=" << p.seconds << "\n";
        };
        AxisRun run;
        run.result = reconstruct_volume(low, axis, op, a.plan, model, sched, norm, opts);
        write_text(a.outdir / (std::string("slices_") + tag + ".log"), log.str());
        std::cout << log.str();
        return run;
    };

    std::vector<std::pair<Axis, AxisRun>> runs;
    if (a.axes == "both") {
        // The two chain passes are independent; run them on two workers.
        AxisRun rx, ry;
        std::exception_ptr ex, ey;
        std::thread ty([&] {
            try {
                ry = run_axis(Axis::Y);
            } catch (...) {
                ey = std::current_exception();
            }
        });
        try {
            rx = run_axis(Axis::X);
        } catch (...) {
            ex = std::current_exception();
        }
        ty.join();
        if (ex) std::rethrow_exception(ex);
        if (ey) std::rethrow_exception(ey);
        runs.emplace_back(Axis::X, std::move(rx));
        runs.emplace_back(Axis::Y, std::move(ry));
    } else {
        const Axis axis = a.axes == "x" ? Axis::X : Axis::Y;
        runs.emplace_back(axis, run_axis(axis));
    }

    for (auto& [axis, run] : runs) {
        Volume out = run.result.volume;
        clip_to_range(out);
        run.volume_path = a.outdir / (std::string("recon_") + (axis == Axis::X ? 'x' : 'y') + ext);
        write_volume_atomic(run.volume_path, out);
        std::cout << "wrote " << run.volume_path.string() << "\n";
    }
    if (runs.size() == 2) {
        Volume ens = ensemble(runs[0].second.result.volume, runs[1].second.result.volume);
        clip_to_range(ens);
        const fs::path p = a.outdir / ("recon_ensemble" + ext);
        write_volume_atomic(p, ens);
        std::cout << "wrote " << p.string() << "\n";
    }
    return 0;
}

// --------------------------------------------------------------------------
// evaluate

struct EvaluateArgs {
    fs::path recon, gt, out;
    std::string method, operator_kind;
    std::vector<fs::path> external;
};

json evaluate_json(const EvaluateArgs& a) {
    json ext = json::array();
    for (const auto& p : a.external) ext.push_back(p.string());
    return {{"recon", a.recon.string()}, {"gt", a.gt.string()},
            {"out", a.out.string()},     {"method", a.method},
            {"operator", a.operator_kind}, {"external_metrics", ext}};
}

int cmd_evaluate(const EvaluateArgs& a) {
    Validator v;
    v.require_file(a.recon, "--recon");
    v.require_file(a.gt, "--gt");
    v.require(!a.out.empty(), "--out is required");
    for (const auto& p : a.external) v.require_file(p, "--external-metric");
    v.finish();

    const Volume recon = read_volume(a.recon);
    const Volume gt = read_volume(a.gt);
    {
        Validator v2;
        v2.require(recon.same_shape(gt), "recon and gt volume shapes differ");
        v2.finish();
    }

    EvalReport report = per_plane_eval(recon, gt, a.method, a.operator_kind);
    for (const auto& p : a.external) merge_external_metric(report, p);

    echo_config(output_dir_for(a.out), "evaluate", evaluate_json(a));
    write_text(a.out, report_to_json(report) + "\n");
    std::cout << report_table(report);
    std::cout << "report written: " << a.out.string() << "\n";
    return 0;
}

// --------------------------------------------------------------------------
// pipeline: simulate -> reconstruct -> evaluate

struct PipelineArgs {
    fs::path input, checkpoint, outdir;
    SimulateArgs sim;
    ReconstructArgs rec;
};

int cmd_pipeline(PipelineArgs a) {
    Validator v;
    v.require(!a.outdir.empty(), "--outdir is required");
    v.finish();
    fs::create_directories(a.outdir);

    a.sim.input = a.input;
    a.sim.out = a.outdir / "simulated.tiff";
    const int code_sim = cmd_simulate(a.sim);
    if (code_sim) return code_sim;

    a.rec.input = a.sim.out;
    a.rec.checkpoint = a.checkpoint;
    a.rec.outdir = a.outdir;
    a.rec.factor = a.sim.factor;
    const int code_rec = cmd_reconstruct(a.rec);
    if (code_rec) return code_rec;

    EvaluateArgs ev;
    ev.gt = a.sim.phantom > 0 ? a.outdir / ("phantom" + a.sim.out.extension().string()) : a.input;
    ev.recon = a.rec.axes == "both" ? a.outdir / "recon_ensemble.tiff"
                                    : a.outdir / (std::string("recon_") + a.rec.axes + ".tiff");
    ev.out = a.outdir / "report.json";
    ev.method = a.rec.no_chain ? "no-chain" : "chained";
    ev.operator_kind = a.rec.operator_kind;
    return cmd_evaluate(ev);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Isotropic volume reconstruction with a lateral diffusion prior"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read options from a key=value config file");
    app.get_config_formatter_base()->comment('#');

    TrainArgs train;
    auto* t = app.add_subcommand("train", "Train the lateral-plane noise predictor");
    t->add_option("--input", train.input, "Training volume (.tif/.tiff/.raw)");
    t->add_option("--out", train.out, "Checkpoint output path");
    t->add_option("--T", train.T, "Diffusion steps")->capture_default_str();
    t->add_option("--s", train.s, "Cosine schedule offset")->capture_default_str();
    t->add_option("--crop", train.crop, "Training crop side")->capture_default_str();
    t->add_option("--count", train.count, "Dataset stream length")->capture_default_str();
    t->add_option("--steps", train.tcfg.steps, "Optimizer steps")->capture_default_str();
    t->add_option("--batch", train.tcfg.batch, "Batch size")->capture_default_str();
    t->add_option("--lr", train.tcfg.lr, "Learning rate")->capture_default_str();
    t->add_option("--ema-decay", train.tcfg.ema_decay, "EMA decay")->capture_default_str();
    t->add_option("--seed", train.tcfg.seed, "Seed")->capture_default_str();
    t->add_option("--log-every", train.tcfg.log_every, "Loss log period")->capture_default_str();
    t->add_option("--base-channels", train.dcfg.base_channels, "First-stage width")
        ->capture_default_str();
    t->add_option("--mults", train.dcfg.channel_multipliers, "Per-stage width multipliers")
        ->delimiter(',');
    t->add_option("--attn", train.dcfg.attention_stages, "Stages with self-attention")
        ->delimiter(',');
    t->add_option("--time-embed", train.dcfg.time_embed_dim, "Time embedding width")
        ->capture_default_str();
    t->add_option("--res-blocks", train.dcfg.res_per_stage, "Residual blocks per stage")
        ->capture_default_str();

    SimulateArgs sim;
    auto* s = app.add_subcommand("simulate", "Degrade an isotropic volume along z");
    s->add_option("--input", sim.input, "Isotropic input volume");
    s->add_option("--out", sim.out, "Low-resolution output volume");
    s->add_option("--sigma", sim.sigma, "Gaussian PSF sigma (voxels)")->capture_default_str();
    s->add_option("--factor", sim.factor, "Downsampling factor f")->capture_default_str();
    s->add_option("--phantom", sim.phantom, "Generate a synthetic cube of this size instead");
    s->add_option("--phantom-seed", sim.phantom_seed, "Phantom seed")->capture_default_str();

    ReconstructArgs rec;
    auto* r = app.add_subcommand("reconstruct", "Slice-chained isotropic reconstruction");
    r->add_option("--input", rec.input, "Anisotropic input volume");
    r->add_option("--checkpoint", rec.checkpoint, "Trained denoiser checkpoint");
    r->add_option("--outdir", rec.outdir, "Output directory");
    r->add_option("--operator", rec.operator_kind,
                  "Degradation assumption: interpolation|average|imputation|exact-psf")
        ->capture_default_str();
    r->add_option("--method", rec.method, "Interpolation method: linear|cubic|lanczos")
        ->capture_default_str();
    r->add_option("--sigma", rec.sigma, "PSF sigma (exact-psf only)")->capture_default_str();
    r->add_option("--factor", rec.factor, "Upsampling factor f")->capture_default_str();
    r->add_option("--T", rec.T, "Schedule length (must match the checkpoint)");
    r->add_option("--R", rec.plan.R, "Encode/decode level")->capture_default_str();
    r->add_option("--encode-steps", rec.plan.encode_steps, "Deterministic encode sub-steps")
        ->capture_default_str();
    r->add_option("--decode-steps", rec.plan.decode_steps, "Reverse sub-steps")
        ->capture_default_str();
    r->add_option("--first-slice-T", rec.plan.first_slice_T,
                  "Start level for the unchained first slice (default: T)");
    r->add_option("--axes", rec.axes, "Chain axis: x|y|both")->capture_default_str();
    r->add_option("--seed", rec.seed, "Noise seed")->capture_default_str();
    r->add_flag("--no-chain", rec.no_chain, "Reconstruct every slice from pure noise");
    r->add_option("--save-every", rec.save_every, "Partial-volume checkpoint period (slices)")
        ->capture_default_str();
    r->add_option("--format", rec.format, "Output format: tiff|raw")->capture_default_str();

    EvaluateArgs ev;
    auto* e = app.add_subcommand("evaluate", "Per-plane PSNR / MS-SSIM report");
    e->add_option("--recon", ev.recon, "Reconstructed volume");
    e->add_option("--gt", ev.gt, "Ground-truth volume");
    e->add_option("--out", ev.out, "Report JSON path");
    e->add_option("--method", ev.method, "Method label for the report");
    e->add_option("--operator", ev.operator_kind, "Operator label for the report");
    e->add_option("--external-metric", ev.external,
                  "Score file(s) {\"metric\":name,\"ZY\":v,\"ZX\":v,\"XY\":v} to merge");

    PipelineArgs pipe;
    auto* p = app.add_subcommand("pipeline", "simulate -> reconstruct -> evaluate");
    p->add_option("--input", pipe.input, "Isotropic ground-truth volume");
    p->add_option("--checkpoint", pipe.checkpoint, "Trained denoiser checkpoint");
    p->add_option("--outdir", pipe.outdir, "Output directory");
    p->add_option("--sigma", pipe.sim.sigma, "Gaussian PSF sigma")->capture_default_str();
    p->add_option("--factor", pipe.sim.factor, "Downsampling factor f")->capture_default_str();
    p->add_option("--phantom", pipe.sim.phantom, "Generate a synthetic cube of this size");
    p->add_option("--phantom-seed", pipe.sim.phantom_seed, "Phantom seed")->capture_default_str();
    p->add_option("--operator", pipe.rec.operator_kind, "Degradation assumption")
        ->capture_default_str();
    p->add_option("--method", pipe.rec.method, "Interpolation method")->capture_default_str();
    p->add_option("--recon-sigma", pipe.rec.sigma, "PSF sigma assumed at reconstruction");
    p->add_option("--R", pipe.rec.plan.R, "Encode/decode level")->capture_default_str();
    p->add_option("--encode-steps", pipe.rec.plan.encode_steps, "Encode sub-steps")
        ->capture_default_str();
    p->add_option("--decode-steps", pipe.rec.plan.decode_steps, "Decode sub-steps")
        ->capture_default_str();
    p->add_option("--axes", pipe.rec.axes, "Chain axis: x|y|both")->capture_default_str();
    p->add_option("--seed", pipe.rec.seed, "Noise seed")->capture_default_str();
    p->add_flag("--no-chain", pipe.rec.no_chain, "Disable slice chaining");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& h) {
        return app.exit(h);
    } catch (const CLI::ParseError& pe) {
        app.exit(pe);
        return 2;
    }

    try {
        check_device_env();
        if (t->parsed()) return cmd_train(train);
        if (s->parsed()) return cmd_simulate(sim);
        if (r->parsed()) return cmd_reconstruct(rec);
        if (e->parsed()) return cmd_evaluate(ev);
        if (p->parsed()) return cmd_pipeline(pipe);
        return 2;
    } catch (const ConfigError& ce) {
        std::cerr << "error: " << ce.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& ia) {
        std::cerr << "error: invalid configuration: " << ia.what() << "\n";
        return 2;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 3;
    }
}
