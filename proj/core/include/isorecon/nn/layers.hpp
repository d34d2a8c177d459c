// Copyright (c) 2026 the isorecon authors
// SPDX-License-Identifier: Apache-2.0
//
// Small stateful layer zoo with explicit backward passes. Feature maps are
// column-major (channels x pixels) matrices, pixel index p = row * width + col.
// Layers cache what their backward needs, so instances are not thread-safe;
// clone the owning network per worker instead of locking.
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "isorecon/common.hpp"

namespace isorecon::nn {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

template <typename S>
struct Param {
    std::string name;
    Mat<S> w;
    Mat<S> g;

    void init(std::string n, Eigen::Index rows, Eigen::Index cols) {
        name = std::move(n);
        w.setZero(rows, cols);
        g.setZero(rows, cols);
    }
    void he_init(GaussianStream& rng, double fan_in) {
        const double std = std::sqrt(2.0 / fan_in);
        for (Eigen::Index c = 0; c < w.cols(); ++c)
            for (Eigen::Index r = 0; r < w.rows(); ++r)
                w(r, c) = static_cast<S>(rng.next() * std);
    }
};

template <typename S>
using ParamList = std::vector<Param<S>*>;

// ---------------------------------------------------------------------------

template <typename S>
struct Conv2d {
    int cin = 0, cout = 0, k = 1;
    Param<S> w;  // (cout, cin*k*k)
    Param<S> b;  // (cout, 1)

    Mat<S> cols_;  // cached im2col / input
    int h_ = 0, w_ = 0;

    void init(const std::string& name, int cin_, int cout_, int k_, GaussianStream& rng,
              bool zero_init) {
        cin = cin_;
        cout = cout_;
        k = k_;
        w.init(name + ".w", cout, static_cast<Eigen::Index>(cin) * k * k);
        b.init(name + ".b", cout, 1);
        if (!zero_init) w.he_init(rng, static_cast<double>(cin) * k * k);
    }
    void collect(ParamList<S>& out) {
        out.push_back(&w);
        out.push_back(&b);
    }

    void im2col(const Mat<S>& x, int h, int width, Mat<S>& cols) const {
        const Eigen::Index hw = static_cast<Eigen::Index>(h) * width;
        cols.setZero(static_cast<Eigen::Index>(cin) * 9, hw);
        for (int o = 0; o < 9; ++o) {
            const int dy = o / 3 - 1, dx = o % 3 - 1;
            const int x0 = dx < 0 ? -dx : 0;
            const int x1 = dx > 0 ? width - dx : width;  // exclusive
            if (x1 <= x0) continue;
            for (int y = 0; y < h; ++y) {
                const int sy = y + dy;
                if (sy < 0 || sy >= h) continue;
                cols.block(static_cast<Eigen::Index>(o) * cin,
                           static_cast<Eigen::Index>(y) * width + x0, cin, x1 - x0) =
                    x.block(0, static_cast<Eigen::Index>(sy) * width + x0 + dx, cin, x1 - x0);
            }
        }
    }

    Mat<S> forward(const Mat<S>& x, int h, int width) {
        h_ = h;
        w_ = width;
        Mat<S> y;
        if (k == 1) {
            cols_ = x;
            y.noalias() = w.w * x;
        } else {
            im2col(x, h, width, cols_);
            y.noalias() = w.w * cols_;
        }
        y.colwise() += b.w.col(0);
        return y;
    }

    Mat<S> backward(const Mat<S>& dy) {
        b.g.col(0) += dy.rowwise().sum();
        w.g.noalias() += dy * cols_.transpose();
        if (k == 1) {
            Mat<S> dx;
            dx.noalias() = w.w.transpose() * dy;
            return dx;
        }
        Mat<S> dcols;
        dcols.noalias() = w.w.transpose() * dy;
        Mat<S> dx = Mat<S>::Zero(cin, static_cast<Eigen::Index>(h_) * w_);
        for (int o = 0; o < 9; ++o) {
            const int dy_off = o / 3 - 1, dx_off = o % 3 - 1;
            const int x0 = dx_off < 0 ? -dx_off : 0;
            const int x1 = dx_off > 0 ? w_ - dx_off : w_;
            if (x1 <= x0) continue;
            for (int y = 0; y < h_; ++y) {
                const int sy = y + dy_off;
                if (sy < 0 || sy >= h_) continue;
                dx.block(0, static_cast<Eigen::Index>(sy) * w_ + x0 + dx_off, cin, x1 - x0) +=
                    dcols.block(static_cast<Eigen::Index>(o) * cin,
                                static_cast<Eigen::Index>(y) * w_ + x0, cin, x1 - x0);
            }
        }
        return dx;
    }
};

// ---------------------------------------------------------------------------

template <typename S>
struct GroupNorm {
    int c = 0, groups = 1;
    S eps = static_cast<S>(1e-5);
    Param<S> gamma, beta;

    Mat<S> xhat_;
    Vec<S> invstd_;

    static int pick_groups(int channels) {
        int g = std::min(8, channels);
        while (channels % g) --g;
        return g;
    }

    void init(const std::string& name, int channels) {
        c = channels;
        groups = pick_groups(channels);
        gamma.init(name + ".gamma", channels, 1);
        gamma.w.setOnes();
        beta.init(name + ".beta", channels, 1);
    }
    void collect(ParamList<S>& out) {
        out.push_back(&gamma);
        out.push_back(&beta);
    }

    Mat<S> forward(const Mat<S>& x) {
        const Eigen::Index hw = x.cols();
        const int cg = c / groups;
        xhat_.resize(c, hw);
        invstd_.resize(groups);
        for (int g = 0; g < groups; ++g) {
            auto blk = x.block(static_cast<Eigen::Index>(g) * cg, 0, cg, hw);
            const S mean = blk.mean();
            const S var = (blk.array() - mean).square().mean();
            const S inv = S(1) / std::sqrt(var + eps);
            invstd_(g) = inv;
            xhat_.block(static_cast<Eigen::Index>(g) * cg, 0, cg, hw) =
                (blk.array() - mean) * inv;
        }
        Mat<S> y = xhat_.array().colwise() * gamma.w.col(0).array();
        y.colwise() += beta.w.col(0);
        return y;
    }

    Mat<S> backward(const Mat<S>& dy) {
        const Eigen::Index hw = dy.cols();
        const int cg = c / groups;
        gamma.g.col(0) += (dy.array() * xhat_.array()).rowwise().sum().matrix();
        beta.g.col(0) += dy.rowwise().sum();

        Mat<S> dxhat = dy.array().colwise() * gamma.w.col(0).array();
        Mat<S> dx(c, hw);
        for (int g = 0; g < groups; ++g) {
            auto dxh = dxhat.block(static_cast<Eigen::Index>(g) * cg, 0, cg, hw);
            auto xh = xhat_.block(static_cast<Eigen::Index>(g) * cg, 0, cg, hw);
            const S m1 = dxh.mean();
            const S m2 = (dxh.array() * xh.array()).mean();
            dx.block(static_cast<Eigen::Index>(g) * cg, 0, cg, hw) =
                ((dxh.array() - m1) - xh.array() * m2) * invstd_(g);
        }
        return dx;
    }
};

// ---------------------------------------------------------------------------

template <typename S>
struct SiLU {
    Mat<S> sig_;
    Mat<S> x_;

    Mat<S> forward(const Mat<S>& x) {
        x_ = x;
        sig_ = (S(1) / (S(1) + (-x.array()).exp())).matrix();
        return (x.array() * sig_.array()).matrix();
    }
    Mat<S> backward(const Mat<S>& dy) const {
        return (dy.array() * sig_.array() *
                (S(1) + x_.array() * (S(1) - sig_.array())))
            .matrix();
    }
};

// ---------------------------------------------------------------------------

template <typename S>
struct AvgPool2 {
    int h_ = 0, w_ = 0;

    Mat<S> forward(const Mat<S>& x, int h, int width) {
        detail::require(h % 2 == 0 && width % 2 == 0, "pooling needs even spatial extents");
        h_ = h;
        w_ = width;
        const int oh = h / 2, ow = width / 2;
        Mat<S> y(x.rows(), static_cast<Eigen::Index>(oh) * ow);
        for (int yy = 0; yy < oh; ++yy)
            for (int xx = 0; xx < ow; ++xx) {
                const Eigen::Index p00 = static_cast<Eigen::Index>(2 * yy) * width + 2 * xx;
                y.col(static_cast<Eigen::Index>(yy) * ow + xx) =
                    (x.col(p00) + x.col(p00 + 1) + x.col(p00 + width) + x.col(p00 + width + 1)) *
                    S(0.25);
            }
        return y;
    }
    Mat<S> backward(const Mat<S>& dy) const {
        const int oh = h_ / 2, ow = w_ / 2;
        Mat<S> dx(dy.rows(), static_cast<Eigen::Index>(h_) * w_);
        for (int yy = 0; yy < oh; ++yy)
            for (int xx = 0; xx < ow; ++xx) {
                const Eigen::Index p00 = static_cast<Eigen::Index>(2 * yy) * w_ + 2 * xx;
                const auto g = dy.col(static_cast<Eigen::Index>(yy) * ow + xx) * S(0.25);
                dx.col(p00) = g;
                dx.col(p00 + 1) = g;
                dx.col(p00 + w_) = g;
                dx.col(p00 + w_ + 1) = g;
            }
        return dx;
    }
};

template <typename S>
struct UpsampleNearest2 {
    int h_ = 0, w_ = 0;  // input dims

    Mat<S> forward(const Mat<S>& x, int h, int width) {
        h_ = h;
        w_ = width;
        Mat<S> y(x.rows(), static_cast<Eigen::Index>(h) * width * 4);
        const int ow = width * 2;
        for (int yy = 0; yy < h; ++yy)
            for (int xx = 0; xx < width; ++xx) {
                const auto src = x.col(static_cast<Eigen::Index>(yy) * width + xx);
                const Eigen::Index p = static_cast<Eigen::Index>(2 * yy) * ow + 2 * xx;
                y.col(p) = src;
                y.col(p + 1) = src;
                y.col(p + ow) = src;
                y.col(p + ow + 1) = src;
            }
        return y;
    }
    Mat<S> backward(const Mat<S>& dy) const {
        const int ow = w_ * 2;
        Mat<S> dx(dy.rows(), static_cast<Eigen::Index>(h_) * w_);
        for (int yy = 0; yy < h_; ++yy)
            for (int xx = 0; xx < w_; ++xx) {
                const Eigen::Index p = static_cast<Eigen::Index>(2 * yy) * ow + 2 * xx;
                dx.col(static_cast<Eigen::Index>(yy) * w_ + xx) =
                    dy.col(p) + dy.col(p + 1) + dy.col(p + ow) + dy.col(p + ow + 1);
            }
        return dx;
    }
};

// ---------------------------------------------------------------------------

template <typename S>
struct Linear {
    Param<S> w, b;
    Vec<S> x_;

    void init(const std::string& name, int in, int out, GaussianStream& rng, bool zero_init) {
        w.init(name + ".w", out, in);
        b.init(name + ".b", out, 1);
        if (!zero_init) w.he_init(rng, in);
    }
    void collect(ParamList<S>& out) {
        out.push_back(&w);
        out.push_back(&b);
    }

    Vec<S> forward(const Vec<S>& x) {
        x_ = x;
        return w.w * x + b.w.col(0);
    }
    Vec<S> backward(const Vec<S>& dy) {
        w.g.noalias() += dy * x_.transpose();
        b.g.col(0) += dy;
        return w.w.transpose() * dy;
    }
};

// ---------------------------------------------------------------------------

/// Transformer-style sinusoidal embedding of the integer step index.
template <typename S>
Vec<S> sinusoidal_embedding(int t, int dim) {
    Vec<S> e(dim);
    const int half = dim / 2;
    for (int i = 0; i < half; ++i) {
        const double freq = std::exp(-std::log(10000.0) * i / std::max(1, half - 1));
        e(i) = static_cast<S>(std::sin(t * freq));
        e(half + i) = static_cast<S>(std::cos(t * freq));
    }
    if (dim % 2) e(dim - 1) = S(0);
    return e;
}

// ---------------------------------------------------------------------------

/// Residual block with scale-shift time conditioning:
///   h  = conv1(silu(gn1(x)))
///   h  = gn2(h) * (1 + s(temb)) + b(temb)
///   y  = conv2(silu(h)) + skip(x)
/// conv2 is zero-initialized so a fresh block is the identity.
template <typename S>
struct ResBlock {
    int cin = 0, cout = 0;
    GroupNorm<S> gn1, gn2;
    SiLU<S> act1, act2, act_t;
    Conv2d<S> conv1, conv2;
    Linear<S> time_proj;
    Conv2d<S> skip;  // 1x1, only when cin != cout

    Vec<S> scale_;
    Mat<S> hn_;

    void init(const std::string& name, int cin_, int cout_, int temb_dim, GaussianStream& rng) {
        cin = cin_;
        cout = cout_;
        gn1.init(name + ".gn1", cin);
        conv1.init(name + ".conv1", cin, cout, 3, rng, false);
        time_proj.init(name + ".time", temb_dim, 2 * cout, rng, false);
        gn2.init(name + ".gn2", cout);
        conv2.init(name + ".conv2", cout, cout, 3, rng, true);
        if (cin != cout) skip.init(name + ".skip", cin, cout, 1, rng, false);
    }
    void collect(ParamList<S>& out) {
        gn1.collect(out);
        conv1.collect(out);
        time_proj.collect(out);
        gn2.collect(out);
        conv2.collect(out);
        if (cin != cout) skip.collect(out);
    }

    Mat<S> forward(const Mat<S>& x, const Vec<S>& temb, int h, int w) {
        Mat<S> a = act1.forward(gn1.forward(x));
        Mat<S> hid = conv1.forward(a, h, w);
        Vec<S> ss = time_proj.forward(act_t.forward(temb));
        scale_ = ss.head(cout);
        hn_ = gn2.forward(hid);
        Mat<S> m = hn_.array().colwise() * (S(1) + scale_.array());
        m.colwise() += ss.tail(cout);
        Mat<S> y = conv2.forward(act2.forward(m), h, w);
        if (cin != cout)
            y += skip.forward(x, h, w);
        else
            y += x;
        return y;
    }

    /// Returns dx; adds the block's time-embedding gradient into dtemb.
    Mat<S> backward(const Mat<S>& dy, Vec<S>& dtemb) {
        Mat<S> dm = act2.backward(conv2.backward(dy));
        Vec<S> dss(2 * cout);
        dss.head(cout) = (dm.array() * hn_.array()).rowwise().sum().matrix();
        dss.tail(cout) = dm.rowwise().sum();
        dtemb += act_t.backward(time_proj.backward(dss));
        Mat<S> dhn = dm.array().colwise() * (S(1) + scale_.array());
        Mat<S> da = conv1.backward(gn2.backward(dhn));
        Mat<S> dx = gn1.backward(act1.backward(da));
        if (cin != cout)
            dx += skip.backward(dy);
        else
            dx += dy;
        return dx;
    }
};

// ---------------------------------------------------------------------------

/// Single-head self-attention over all pixels, residual, zero-init out proj.
template <typename S>
struct SelfAttention {
    int c = 0;
    GroupNorm<S> gn;
    Conv2d<S> to_q, to_k, to_v, to_out;

    Mat<S> q_, k_, v_, attn_;

    void init(const std::string& name, int channels, GaussianStream& rng) {
        c = channels;
        gn.init(name + ".gn", channels);
        to_q.init(name + ".q", channels, channels, 1, rng, false);
        to_k.init(name + ".k", channels, channels, 1, rng, false);
        to_v.init(name + ".v", channels, channels, 1, rng, false);
        to_out.init(name + ".out", channels, channels, 1, rng, true);
    }
    void collect(ParamList<S>& out) {
        gn.collect(out);
        to_q.collect(out);
        to_k.collect(out);
        to_v.collect(out);
        to_out.collect(out);
    }

    Mat<S> forward(const Mat<S>& x, int h, int w) {
        Mat<S> hn = gn.forward(x);
        q_ = to_q.forward(hn, h, w);
        k_ = to_k.forward(hn, h, w);
        v_ = to_v.forward(hn, h, w);
        const S scale = S(1) / std::sqrt(static_cast<S>(c));
        Mat<S> logits;
        logits.noalias() = q_.transpose() * k_;
        logits *= scale;
        attn_.resize(logits.rows(), logits.cols());
        for (Eigen::Index i = 0; i < logits.rows(); ++i) {
            const S mx = logits.row(i).maxCoeff();
            Vec<S> e = (logits.row(i).array() - mx).exp().matrix().transpose();
            attn_.row(i) = (e / e.sum()).transpose();
        }
        Mat<S> o;
        o.noalias() = v_ * attn_.transpose();
        return x + to_out.forward(o, h, w);
    }

    Mat<S> backward(const Mat<S>& dy) {
        Mat<S> dov = to_out.backward(dy);
        Mat<S> dv;
        dv.noalias() = dov * attn_;
        Mat<S> dattn;
        dattn.noalias() = dov.transpose() * v_;
        Mat<S> dlogits(dattn.rows(), dattn.cols());
        for (Eigen::Index i = 0; i < dattn.rows(); ++i) {
            const S dot = dattn.row(i).dot(attn_.row(i));
            dlogits.row(i) = attn_.row(i).array() * (dattn.row(i).array() - dot);
        }
        const S scale = S(1) / std::sqrt(static_cast<S>(c));
        Mat<S> dq, dk;
        dq.noalias() = k_ * dlogits.transpose() * scale;
        dk.noalias() = q_ * dlogits * scale;
        Mat<S> dhn = to_q.backward(dq);
        dhn += to_k.backward(dk);
        dhn += to_v.backward(dv);
        return dy + gn.backward(dhn);
    }
};

}  // namespace isorecon::nn
