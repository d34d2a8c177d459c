// Copyright (c) 2026 the isorecon authors
// SPDX-License-Identifier: Apache-2.0
#include "isorecon/model.hpp"

#include <cmath>
#include <ostream>

namespace isorecon {

void DenoiserConfig::validate() const {
    detail::require(!channel_multipliers.empty(), "need at least one stage");
    detail::require(base_channels >= 1 && time_embed_dim >= 2 && res_per_stage >= 1,
                    "denoiser widths must be positive");
    for (int m : channel_multipliers)
        detail::require(m >= 1, "channel multipliers must be positive");
    for (int s : attention_stages)
        detail::require(s >= 0 && s < stages(), "attention stage index out of range");
    detail::require(in_size >= spatial_divisor() && in_size % spatial_divisor() == 0,
                    "in_size " + std::to_string(in_size) + " not divisible by stage factor " +
                        std::to_string(spatial_divisor()));
}

nn::UNet<float>::Spec DenoiserConfig::unet_spec() const {
    nn::UNet<float>::Spec spec;
    spec.in_channels = 1;
    spec.base = base_channels;
    spec.mults = channel_multipliers;
    spec.attn_stages = attention_stages;
    spec.temb_dim = time_embed_dim;
    spec.res_per_stage = res_per_stage;
    return spec;
}

void TrainConfig::validate() const {
    detail::require(lr > 0.0, "learning rate must be positive");
    detail::require(batch >= 1, "batch size must be >= 1");
    detail::require(steps >= 1, "step budget must be >= 1");
    detail::require(ema_decay >= 0.0 && ema_decay < 1.0, "ema_decay must be in [0, 1)");
    detail::require(log_every >= 1, "log_every must be >= 1");
}

NoiseSchedule DenoiserCheckpoint::make_schedule() const {
    detail::require(schedule_kind == "cosine", "unknown schedule kind: " + schedule_kind);
    return make_cosine_schedule(schedule_T, schedule_s);
}

nn::Mat<float> to_net_input(const Image& img) {
    nn::Mat<float> m(1, img.size());
    for (Eigen::Index r = 0; r < img.rows(); ++r)
        for (Eigen::Index c = 0; c < img.cols(); ++c)
            m(0, r * img.cols() + c) = static_cast<float>(img(r, c));
    return m;
}

Image from_net_output(const nn::Mat<float>& m, Eigen::Index rows, Eigen::Index cols) {
    Image img(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) img(r, c) = m(0, r * cols + c);
    return img;
}

namespace {

struct Adam {
    double lr;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    std::int64_t t = 0;
    std::vector<nn::Mat<float>> m, v;

    explicit Adam(double lr_, const nn::ParamList<float>& params) : lr(lr_) {
        m.reserve(params.size());
        v.reserve(params.size());
        for (const auto* p : params) {
            m.emplace_back(nn::Mat<float>::Zero(p->w.rows(), p->w.cols()));
            v.emplace_back(nn::Mat<float>::Zero(p->w.rows(), p->w.cols()));
        }
    }

    void step(const nn::ParamList<float>& params) {
        ++t;
        const auto bc1 = static_cast<float>(1.0 - std::pow(beta1, static_cast<double>(t)));
        const auto bc2 = static_cast<float>(1.0 - std::pow(beta2, static_cast<double>(t)));
        const auto b1 = static_cast<float>(beta1);
        const auto b2 = static_cast<float>(beta2);
        for (std::size_t i = 0; i < params.size(); ++i) {
            auto& p = *params[i];
            m[i] = b1 * m[i] + (1.0f - b1) * p.g;
            v[i].array() = b2 * v[i].array() + (1.0f - b2) * p.g.array().square();
            p.w.array() -= static_cast<float>(lr) * (m[i].array() / bc1) /
                           ((v[i].array() / bc2).sqrt() + static_cast<float>(eps));
        }
    }
};

}  // namespace

DenoiserCheckpoint train_denoiser(const SliceDataset& data, const NoiseSchedule& sched,
                                  const DenoiserConfig& dcfg, const TrainConfig& tcfg,
                                  std::ostream* log) {
    detail::require(!data.empty(), "training dataset is empty");
    dcfg.validate();
    tcfg.validate();
    detail::require(data.crop() % dcfg.spatial_divisor() == 0,
                    "crop not divisible by the model's stage factor");

    nn::UNet<float> net(dcfg.unet_spec(), tcfg.seed);
    auto params = net.params();

    Adam opt(tcfg.lr, params);

    std::vector<nn::Mat<float>> ema;
    ema.reserve(params.size());
    for (const auto* p : params) ema.push_back(p->w);

    GaussianStream noise_rng(mix_seed(tcfg.seed, 0x6e6f6973));
    const int crop = data.crop();
    const Eigen::Index hw = static_cast<Eigen::Index>(crop) * crop;

    double ema_loss = 0.0;
    for (std::int64_t step = 1; step <= tcfg.steps; ++step) {
        net.zero_grads();
        double loss = 0.0;
        for (int k = 0; k < tcfg.batch; ++k) {
            const std::int64_t idx = ((step - 1) * tcfg.batch + k) % data.size();
            const ImageF x0 = data.sample(idx);
            const int t = static_cast<int>(noise_rng.next_int(1, sched.T));
            nn::Mat<float> eps(1, hw);
            for (Eigen::Index i = 0; i < hw; ++i) eps(0, i) = static_cast<float>(noise_rng.next());

            nn::Mat<float> xt(1, hw);
            const auto ca = static_cast<float>(std::sqrt(sched.alpha_bar(t)));
            const auto cb = static_cast<float>(std::sqrt(1.0 - sched.alpha_bar(t)));
            for (Eigen::Index r = 0; r < crop; ++r)
                for (Eigen::Index c = 0; c < crop; ++c)
                    xt(0, r * crop + c) = ca * x0(r, c) + cb * eps(0, r * crop + c);

            nn::Mat<float> pred = net.forward(xt, crop, crop, t);
            nn::Mat<float> diff = pred - eps;
            loss += static_cast<double>(diff.squaredNorm()) / static_cast<double>(hw);
            diff *= static_cast<float>(2.0 / (static_cast<double>(hw) * tcfg.batch));
            net.backward(diff);
        }
        loss /= tcfg.batch;
        if (!std::isfinite(loss))
            throw std::runtime_error("training diverged: non-finite loss at step " +
                                     std::to_string(step));

        opt.step(params);

        // Warmup ramp keeps the EMA usable on short runs.
        const double eff = std::min(tcfg.ema_decay,
                                    (1.0 + static_cast<double>(step)) / (10.0 + static_cast<double>(step)));
        for (std::size_t i = 0; i < params.size(); ++i)
            ema[i] = static_cast<float>(eff) * ema[i] + static_cast<float>(1.0 - eff) * params[i]->w;

        ema_loss = step == 1 ? loss : 0.99 * ema_loss + 0.01 * loss;
        if (log && (step % tcfg.log_every == 0 || step == 1 || step == tcfg.steps))
            (*log) << "step=" << step << " loss=" << loss << " ema_loss=" << ema_loss << "\n";
    }

    DenoiserCheckpoint ckpt;
    ckpt.config = dcfg;
    ckpt.schedule_T = sched.T;
    ckpt.schedule_s = sched.s;
    ckpt.schedule_kind = sched.kind;
    ckpt.value_lo = data.value_lo();
    ckpt.value_hi = data.value_hi();
    ckpt.seed = tcfg.seed;
    ckpt.trained_steps = tcfg.steps;
    ckpt.dataset_fingerprint = data.fingerprint();
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& p = *params[i];
        ckpt.manifest.push_back({p.name, static_cast<int>(p.w.rows()), static_cast<int>(p.w.cols())});
        ckpt.raw.insert(ckpt.raw.end(), p.w.data(), p.w.data() + p.w.size());
        ckpt.ema.insert(ckpt.ema.end(), ema[i].data(), ema[i].data() + ema[i].size());
    }
    return ckpt;
}

Denoiser::Denoiser(const DenoiserCheckpoint& ckpt, bool use_ema)
    : net_(ckpt.config.unet_spec(), ckpt.seed),
      sched_(ckpt.make_schedule()),
      lo_(ckpt.value_lo),
      hi_(ckpt.value_hi) {
    auto params = net_.params();
    detail::require(params.size() == ckpt.manifest.size(), "checkpoint manifest mismatch");
    const std::vector<float>& flat = use_ema ? ckpt.ema : ckpt.raw;
    std::size_t off = 0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = *params[i];
        const auto& m = ckpt.manifest[i];
        detail::require(p.name == m.name && p.w.rows() == m.rows && p.w.cols() == m.cols,
                        "checkpoint tensor '" + m.name + "' does not match the architecture");
        detail::require(off + p.w.size() <= flat.size(), "checkpoint payload too small");
        std::copy(flat.data() + off, flat.data() + off + p.w.size(), p.w.data());
        off += static_cast<std::size_t>(p.w.size());
    }
    detail::require(off == flat.size(), "checkpoint payload size mismatch");
}

Image Denoiser::predict(const Image& x_t, int t) {
    detail::require(x_t.allFinite(), "predict: input contains non-finite values");
    nn::Mat<float> out = net_.forward(to_net_input(x_t), static_cast<int>(x_t.rows()),
                                      static_cast<int>(x_t.cols()), t);
    return from_net_output(out, x_t.rows(), x_t.cols());
}

std::vector<Image> Denoiser::predict_batch(const std::vector<Image>& x_t,
                                           const std::vector<int>& t) {
    detail::require(x_t.size() == t.size(), "predict_batch: batch size mismatch");
    std::vector<Image> out;
    out.reserve(x_t.size());
    for (std::size_t i = 0; i < x_t.size(); ++i) out.push_back(predict(x_t[i], t[i]));
    return out;
}

Image Denoiser::normalize(const Image& raw) const {
    return (2.0 * (raw.array() - lo_) / (hi_ - lo_) - 1.0).matrix();
}

Image Denoiser::denormalize(const Image& norm) const {
    return ((norm.array() + 1.0) * 0.5 * (hi_ - lo_) + lo_).matrix();
}

double eval_denoiser_loss(Denoiser& model, const SliceDataset& data, int draws,
                          std::uint64_t seed) {
    detail::require(!data.empty() && draws >= 1, "eval_denoiser_loss needs data and draws");
    const NoiseSchedule& sched = model.schedule();
    GaussianStream rng(mix_seed(seed, 0x65766c));
    const int crop = data.crop();
    double total = 0.0;
    for (int d = 0; d < draws; ++d) {
        const ImageF x0f = data.sample(rng.next_int(0, data.size() - 1));
        const int t = static_cast<int>(rng.next_int(1, sched.T));
        Image x0 = x0f.cast<double>();
        Image eps = rng.next_image(crop, crop);
        Image xt = forward_perturb(x0, t, eps, sched);
        Image pred = model.predict(xt, t);
        total += (pred - eps).squaredNorm() / static_cast<double>(crop * crop);
    }
    return total / draws;
}

}  // namespace isorecon
