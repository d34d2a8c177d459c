// Copyright (c) 2026 the isorecon authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "isorecon/dataset.hpp"
#include "isorecon/nn/unet.hpp"
#include "isorecon/predictor.hpp"
#include "isorecon/schedule.hpp"

namespace isorecon {

struct DenoiserConfig {
    int in_size = 64;
    int base_channels = 64;
    std::vector<int> channel_multipliers{1, 2, 2, 2};
    std::vector<int> attention_stages{2, 3};  // stages with self-attention
    int time_embed_dim = 128;
    int res_per_stage = 2;

    int stages() const { return static_cast<int>(channel_multipliers.size()); }
    int spatial_divisor() const { return 1 << (stages() - 1); }
    void validate() const;
    nn::UNet<float>::Spec unet_spec() const;
};

struct TrainConfig {
    double lr = 2e-5;
    int batch = 4;
    std::int64_t steps = 10000;
    double ema_decay = 0.9999;
    std::uint64_t seed = 0;
    std::int64_t log_every = 100;

    void validate() const;
};

struct TensorShape {
    std::string name;
    int rows = 0;
    int cols = 0;
};

/// Trained weights (raw and EMA) plus everything needed to reuse them:
/// the schedule parameters, the intensity normalization, and provenance.
struct DenoiserCheckpoint {
    DenoiserConfig config;
    int schedule_T = 0;
    double schedule_s = 0.0;
    std::string schedule_kind = "cosine";
    double value_lo = 0.0;
    double value_hi = 1.0;
    std::uint64_t seed = 0;
    std::int64_t trained_steps = 0;
    std::uint64_t dataset_fingerprint = 0;
    std::vector<TensorShape> manifest;
    std::vector<float> raw;  // concatenated tensors, manifest order
    std::vector<float> ema;

    NoiseSchedule make_schedule() const;
};

/// Optimize E || eps - eps_theta(sqrt(abar_t) x0 + sqrt(1-abar_t) eps, t) ||^2
/// with t uniform on {1..T}; maintains EMA weights; emits "(step, loss,
/// ema_loss)" lines to log. Throws on divergent (non-finite) loss.
DenoiserCheckpoint train_denoiser(const SliceDataset& data, const NoiseSchedule& sched,
                                  const DenoiserConfig& dcfg, const TrainConfig& tcfg,
                                  std::ostream* log = nullptr);

/// Checkpoint-loaded noise predictor (EMA weights by default). Instances are
/// cheap to copy; give each worker thread its own copy.
class Denoiser : public NoisePredictor {
public:
    explicit Denoiser(const DenoiserCheckpoint& ckpt, bool use_ema = true);

    Image predict(const Image& x_t, int t) override;
    std::vector<Image> predict_batch(const std::vector<Image>& x_t, const std::vector<int>& t);
    int spatial_divisor() const override { return net_.spatial_divisor(); }

    const NoiseSchedule& schedule() const { return sched_; }
    double value_lo() const { return lo_; }
    double value_hi() const { return hi_; }

    Image normalize(const Image& raw) const;    // [lo,hi] -> [-1,1]
    Image denormalize(const Image& norm) const;

private:
    nn::UNet<float> net_;
    NoiseSchedule sched_;
    double lo_ = 0.0, hi_ = 1.0;
};

/// Monte-Carlo estimate of the training objective for a frozen checkpointed
/// model over `draws` fresh (x0, t, eps) triples.
double eval_denoiser_loss(Denoiser& model, const SliceDataset& data, int draws,
                          std::uint64_t seed);

/// Flatten an image into the network's (channels=1, h*w) layout and back.
nn::Mat<float> to_net_input(const Image& img);
Image from_net_output(const nn::Mat<float>& m, Eigen::Index rows, Eigen::Index cols);

}  // namespace isorecon
