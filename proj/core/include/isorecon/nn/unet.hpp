// Copyright (c) 2026 the isorecon authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <vector>

#include "isorecon/nn/layers.hpp"

namespace isorecon::nn {

/// Time-conditioned U-Net noise predictor. Fully convolutional: any input
/// whose sides are divisible by 2^(stages-1) works, independent of the
/// training crop. Instances carry forward/backward caches and are therefore
/// single-threaded; copy the network per worker for concurrent inference.
template <typename S>
class UNet {
public:
    struct Spec {
        int in_channels = 1;
        int base = 64;
        std::vector<int> mults{1, 1, 2, 2};
        std::vector<int> attn_stages{2, 3};  // stage indices, coarsest = last
        int temb_dim = 128;
        int res_per_stage = 2;
    };

    UNet() = default;

    UNet(const Spec& spec, std::uint64_t seed) : spec_(spec) {
        detail::require(!spec.mults.empty(), "UNet needs at least one stage");
        detail::require(spec.base >= 1 && spec.in_channels >= 1 && spec.temb_dim >= 2,
                        "UNet widths must be positive");
        detail::require(spec.res_per_stage >= 1, "UNet needs at least one block per stage");
        const int stages = static_cast<int>(spec.mults.size());
        chan_.resize(stages);
        for (int s = 0; s < stages; ++s) {
            detail::require(spec.mults[s] >= 1, "channel multipliers must be positive");
            chan_[s] = spec.base * spec.mults[s];
        }

        GaussianStream rng(mix_seed(seed, 0x756e6574));

        tmlp1_.init("time_mlp.fc1", spec.temb_dim, spec.temb_dim, rng, false);
        tmlp2_.init("time_mlp.fc2", spec.temb_dim, spec.temb_dim, rng, false);
        stem_.init("stem", spec.in_channels, chan_[0], 3, rng, false);

        pools_.resize(std::max(0, stages - 1));
        upsamples_.resize(std::max(0, stages - 1));
        down_res_.resize(stages);
        down_attn_.resize(stages);
        up_res_.resize(stages);
        up_attn_.resize(stages);
        skips_.resize(stages);
        dskips_.resize(stages);

        for (int s = 0; s < stages; ++s) {
            const std::string tag = "down" + std::to_string(s);
            down_res_[s].resize(spec.res_per_stage);
            for (int r = 0; r < spec.res_per_stage; ++r) {
                const int cin = r == 0 ? (s == 0 ? chan_[0] : chan_[s - 1]) : chan_[s];
                down_res_[s][r].init(tag + ".res" + std::to_string(r), cin, chan_[s],
                                     spec.temb_dim, rng);
            }
            if (has_attn(s)) {
                down_attn_[s].emplace();
                down_attn_[s]->init(tag + ".attn", chan_[s], rng);
            }
        }

        const int cm = chan_[stages - 1];
        mid_a_.init("mid.res_a", cm, cm, spec.temb_dim, rng);
        if (has_attn(stages - 1)) {
            mid_attn_.emplace();
            mid_attn_->init("mid.attn", cm, rng);
        }
        mid_b_.init("mid.res_b", cm, cm, spec.temb_dim, rng);

        for (int s = stages - 1; s >= 0; --s) {
            const int c_above = s == stages - 1 ? chan_[stages - 1] : chan_[s + 1];
            const std::string tag = "up" + std::to_string(s);
            up_res_[s].resize(spec.res_per_stage);
            for (int r = 0; r < spec.res_per_stage; ++r) {
                const int cin = r == 0 ? c_above + chan_[s] : chan_[s];
                up_res_[s][r].init(tag + ".res" + std::to_string(r), cin, chan_[s],
                                   spec.temb_dim, rng);
            }
            if (has_attn(s)) {
                up_attn_[s].emplace();
                up_attn_[s]->init(tag + ".attn", chan_[s], rng);
            }
        }

        gn_out_.init("out.gn", chan_[0]);
        conv_out_.init("out.conv", chan_[0], spec.in_channels, 3, rng, true);
    }

    const Spec& spec() const { return spec_; }
    int stages() const { return static_cast<int>(chan_.size()); }
    int spatial_divisor() const { return 1 << (stages() - 1); }

    ParamList<S> params() {
        ParamList<S> out;
        tmlp1_.collect(out);
        tmlp2_.collect(out);
        stem_.collect(out);
        for (int s = 0; s < stages(); ++s) {
            for (auto& res : down_res_[s]) res.collect(out);
            if (down_attn_[s]) down_attn_[s]->collect(out);
        }
        mid_a_.collect(out);
        if (mid_attn_) mid_attn_->collect(out);
        mid_b_.collect(out);
        for (int s = 0; s < stages(); ++s) {
            for (auto& res : up_res_[s]) res.collect(out);
            if (up_attn_[s]) up_attn_[s]->collect(out);
        }
        gn_out_.collect(out);
        conv_out_.collect(out);
        return out;
    }

    std::int64_t param_count() {
        std::int64_t n = 0;
        for (const auto* p : params()) n += p->w.size();
        return n;
    }

    void zero_grads() {
        for (auto* p : params()) p->g.setZero();
    }

    /// x: (in_channels, h*w), t: step index. Returns (in_channels, h*w).
    Mat<S> forward(const Mat<S>& x, int h, int w, int t) {
        const int div = spatial_divisor();
        detail::require(h % div == 0 && w % div == 0,
                        "input extents " + std::to_string(h) + "x" + std::to_string(w) +
                            " not divisible by the stage factor " + std::to_string(div));
        detail::require(x.rows() == spec_.in_channels &&
                            x.cols() == static_cast<Eigen::Index>(h) * w,
                        "UNet input shape mismatch");
        detail::require(x.allFinite(), "UNet input contains non-finite values");

        temb_ = tmlp2_.forward(tact_.forward(tmlp1_.forward(
            sinusoidal_embedding<S>(t, spec_.temb_dim))));

        Mat<S> cur = stem_.forward(x, h, w);
        int ch = h, cw = w;
        for (int s = 0; s < stages(); ++s) {
            if (s > 0) {
                cur = pools_[s - 1].forward(cur, ch, cw);
                ch /= 2;
                cw /= 2;
            }
            for (auto& res : down_res_[s]) cur = res.forward(cur, temb_, ch, cw);
            if (down_attn_[s]) cur = down_attn_[s]->forward(cur, ch, cw);
            skips_[s] = cur;
        }

        cur = mid_a_.forward(cur, temb_, ch, cw);
        if (mid_attn_) cur = mid_attn_->forward(cur, ch, cw);
        cur = mid_b_.forward(cur, temb_, ch, cw);

        for (int s = stages() - 1; s >= 0; --s) {
            Mat<S> cat(cur.rows() + skips_[s].rows(), cur.cols());
            cat.topRows(cur.rows()) = cur;
            cat.bottomRows(skips_[s].rows()) = skips_[s];
            cur = cat;
            for (auto& res : up_res_[s]) cur = res.forward(cur, temb_, ch, cw);
            if (up_attn_[s]) cur = up_attn_[s]->forward(cur, ch, cw);
            if (s > 0) {
                cur = upsamples_[s - 1].forward(cur, ch, cw);
                ch *= 2;
                cw *= 2;
            }
        }

        return conv_out_.forward(act_out_.forward(gn_out_.forward(cur)), h, w);
    }

    /// Accumulates parameter gradients for the preceding forward().
    void backward(const Mat<S>& dy) {
        Vec<S> dtemb = Vec<S>::Zero(spec_.temb_dim);

        Mat<S> dx = gn_out_.backward(act_out_.backward(conv_out_.backward(dy)));

        for (int s = 0; s < stages(); ++s) {
            if (s > 0) dx = upsamples_[s - 1].backward(dx);
            if (up_attn_[s]) dx = up_attn_[s]->backward(dx);
            for (auto it = up_res_[s].rbegin(); it != up_res_[s].rend(); ++it)
                dx = it->backward(dx, dtemb);
            const Eigen::Index c_skip = skips_[s].rows();
            dskips_[s] = dx.bottomRows(c_skip);
            dx = dx.topRows(dx.rows() - c_skip).eval();
        }

        dx = mid_b_.backward(dx, dtemb);
        if (mid_attn_) dx = mid_attn_->backward(dx);
        dx = mid_a_.backward(dx, dtemb);

        for (int s = stages() - 1; s >= 0; --s) {
            dx += dskips_[s];
            if (down_attn_[s]) dx = down_attn_[s]->backward(dx);
            for (auto it = down_res_[s].rbegin(); it != down_res_[s].rend(); ++it)
                dx = it->backward(dx, dtemb);
            if (s > 0) dx = pools_[s - 1].backward(dx);
        }
        stem_.backward(dx);

        tmlp1_.backward(tact_.backward(tmlp2_.backward(dtemb)));
    }

private:
    bool has_attn(int stage) const {
        for (int s : spec_.attn_stages)
            if (s == stage) return true;
        return false;
    }

    Spec spec_;
    std::vector<int> chan_;

    Linear<S> tmlp1_, tmlp2_;
    SiLU<S> tact_;
    Conv2d<S> stem_;
    std::vector<AvgPool2<S>> pools_;
    std::vector<UpsampleNearest2<S>> upsamples_;
    std::vector<std::vector<ResBlock<S>>> down_res_;
    std::vector<std::optional<SelfAttention<S>>> down_attn_;
    ResBlock<S> mid_a_, mid_b_;
    std::optional<SelfAttention<S>> mid_attn_;
    std::vector<std::vector<ResBlock<S>>> up_res_;
    std::vector<std::optional<SelfAttention<S>>> up_attn_;
    GroupNorm<S> gn_out_;
    SiLU<S> act_out_;
    Conv2d<S> conv_out_;

    Vec<S> temb_;
    std::vector<Mat<S>> skips_, dskips_;
};

}  // namespace isorecon::nn
