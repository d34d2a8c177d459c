// Copyright (c) 2026 the isorecon authors
// SPDX-License-Identifier: Apache-2.0
#include "isorecon/eval.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <future>
#include <iostream>
#include <limits>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "isorecon/degrade.hpp"

namespace isorecon {

namespace {

using json = nlohmann::json;

constexpr double kMsSsimWeights[5] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
constexpr int kWindow = 11;
constexpr double kWindowSigma = 1.5;
constexpr double kK1 = 0.01;
constexpr double kK2 = 0.03;

double mse(const Image& a, const Image& b) { return (a - b).squaredNorm() / a.size(); }

Eigen::VectorXd gaussian_window() {
    Eigen::VectorXd w(kWindow);
    const int r = kWindow / 2;
    for (int i = 0; i < kWindow; ++i) {
        const double d = i - r;
        w(i) = std::exp(-0.5 * d * d / (kWindowSigma * kWindowSigma));
    }
    return w / w.sum();
}

/// Separable valid-region filtering: output is (H-10) x (W-10).
Image filter_valid(const Image& img, const Eigen::VectorXd& w) {
    const auto h = img.rows(), wd = img.cols();
    Image tmp(h, wd - kWindow + 1);
    for (Eigen::Index c = 0; c < tmp.cols(); ++c) {
        tmp.col(c) = img.col(c) * w(0);
        for (int k = 1; k < kWindow; ++k) tmp.col(c) += img.col(c + k) * w(k);
    }
    Image out(h - kWindow + 1, tmp.cols());
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
        out.row(r) = tmp.row(r) * w(0);
        for (int k = 1; k < kWindow; ++k) out.row(r) += tmp.row(r + k) * w(k);
    }
    return out;
}

/// 2x2 mean then decimation with edge replication; output is ceil(side/2).
Image downsample2(const Image& img) {
    const auto h = img.rows(), w = img.cols();
    const auto oh = (h + 1) / 2, ow = (w + 1) / 2;
    Image out(oh, ow);
    for (Eigen::Index r = 0; r < oh; ++r) {
        const auto r0 = 2 * r, r1 = std::min<Eigen::Index>(2 * r + 1, h - 1);
        for (Eigen::Index c = 0; c < ow; ++c) {
            const auto c0 = 2 * c, c1 = std::min<Eigen::Index>(2 * c + 1, w - 1);
            out(r, c) = 0.25 * (img(r0, c0) + img(r0, c1) + img(r1, c0) + img(r1, c1));
        }
    }
    return out;
}

struct SsimComponents {
    double luminance = 0.0;
    double contrast_structure = 0.0;
};

SsimComponents ssim_components(const Image& a, const Image& b, double c1, double c2) {
    static const Eigen::VectorXd w = gaussian_window();
    const Image mu1 = filter_valid(a, w);
    const Image mu2 = filter_valid(b, w);
    const Image s11 = filter_valid(a.cwiseProduct(a), w) - mu1.cwiseProduct(mu1);
    const Image s22 = filter_valid(b.cwiseProduct(b), w) - mu2.cwiseProduct(mu2);
    const Image s12 = filter_valid(a.cwiseProduct(b), w) - mu1.cwiseProduct(mu2);

    const Image l_map = (2.0 * mu1.cwiseProduct(mu2).array() + c1) /
                        (mu1.array().square() + mu2.array().square() + c1);
    const Image cs_map = (2.0 * s12.array() + c2) / (s11.array() + s22.array() + c2);
    return {l_map.mean(), cs_map.mean()};
}

int max_scales(Eigen::Index min_side) {
    int scales = 0;
    for (int m = 1; m <= 5; ++m)
        if ((kWindow - 1) * (1 << (m - 1)) + 1 <= min_side) scales = m;
    return scales;
}

PlaneMetrics family_metrics(const std::vector<Image>& recon, const std::vector<Image>& gt,
                            double peak) {
    PlaneMetrics pm;
    double psnr_sum = 0.0;
    double ssim_sum = 0.0;
    for (std::size_t i = 0; i < recon.size(); ++i) {
        if (mse(recon[i], gt[i]) == 0.0)
            pm.psnr_infinite = true;
        else
            psnr_sum += psnr(recon[i], gt[i], peak);
        ssim_sum += ms_ssim(recon[i], gt[i], peak);
    }
    pm.psnr = pm.psnr_infinite ? std::numeric_limits<double>::infinity()
                               : psnr_sum / static_cast<double>(recon.size());
    pm.ms_ssim = ssim_sum / static_cast<double>(recon.size());
    return pm;
}

std::string format_psnr(const PlaneMetrics& pm) {
    if (pm.psnr_infinite) return "inf";
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(2);
    os << pm.psnr;
    return os.str();
}

}  // namespace

double psnr(const Image& a, const Image& b, double peak) {
    detail::require(a.rows() == b.rows() && a.cols() == b.cols(), "psnr: shape mismatch");
    detail::require(peak > 0.0, "psnr: peak must be positive");
    const double m = mse(a, b);
    if (m == 0.0) return std::numeric_limits<double>::infinity();
    return 20.0 * std::log10(peak) - 10.0 * std::log10(m);
}

double psnr(const Volume& a, const Volume& b, double peak) {
    detail::require(a.same_shape(b), "psnr: volume shapes differ");
    detail::require(peak > 0.0, "psnr: peak must be positive");
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        m += d * d;
    }
    m /= static_cast<double>(a.data.size());
    if (m == 0.0) return std::numeric_limits<double>::infinity();
    return 20.0 * std::log10(peak) - 10.0 * std::log10(m);
}

double ms_ssim(const Image& a, const Image& b, double peak, int* scales_used) {
    detail::require(a.rows() == b.rows() && a.cols() == b.cols(), "ms_ssim: shape mismatch");
    const Eigen::Index min_side = std::min(a.rows(), a.cols());
    const int scales = max_scales(min_side);
    detail::require(scales >= 1, "ms_ssim: plane sides must be at least 11");
    if (scales < 5) {
        static std::atomic<bool> warned{false};
        if (!warned.exchange(true))
            std::cerr << "ms_ssim: sides below 161, reducing to " << scales << " scales\n";
    }
    if (scales_used) *scales_used = scales;

    double wsum = 0.0;
    for (int j = 0; j < scales; ++j) wsum += kMsSsimWeights[j];

    const double c1 = (kK1 * peak) * (kK1 * peak);
    const double c2 = (kK2 * peak) * (kK2 * peak);

    Image ca = a, cb = b;
    double score = 1.0;
    for (int j = 0; j < scales; ++j) {
        const SsimComponents comp = ssim_components(ca, cb, c1, c2);
        const double wj = kMsSsimWeights[j] / wsum;
        score *= std::pow(std::max(comp.contrast_structure, 0.0), wj);
        if (j == scales - 1) score *= std::pow(std::max(comp.luminance, 0.0), wj);
        else {
            ca = downsample2(ca);
            cb = downsample2(cb);
        }
    }
    return score;
}

EvalReport per_plane_eval(const Volume& recon, const Volume& gt, const std::string& method,
                          const std::string& operator_kind) {
    detail::require(recon.same_shape(gt), "per_plane_eval: volume shapes differ");
    const auto t0 = std::chrono::steady_clock::now();

    EvalReport report;
    report.method = method;
    report.operator_kind = operator_kind;
    report.peak = dtype_peak(gt.dtype);

    auto gather = [&](char family) {
        std::vector<Image> r, g;
        const int count = family == 'x' ? recon.nx : (family == 'y' ? recon.ny : recon.nz);
        r.reserve(count);
        g.reserve(count);
        for (int i = 0; i < count; ++i) {
            if (family == 'x') {
                r.push_back(recon.slice_zy(i));
                g.push_back(gt.slice_zy(i));
            } else if (family == 'y') {
                r.push_back(recon.slice_zx(i));
                g.push_back(gt.slice_zx(i));
            } else {
                r.push_back(recon.slice_xy(i));
                g.push_back(gt.slice_xy(i));
            }
        }
        return family_metrics(r, g, report.peak);
    };

    auto zy = std::async(std::launch::async, gather, 'x');
    auto zx = std::async(std::launch::async, gather, 'y');
    report.xy = gather('z');
    report.zy = zy.get();
    report.zx = zx.get();

    report.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

std::string report_table(const EvalReport& report) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os << "method=" << (report.method.empty() ? "-" : report.method)
       << " operator=" << (report.operator_kind.empty() ? "-" : report.operator_kind)
       << " peak=" << report.peak << "\n";
    os << "plane   PSNR(dB)   MS-SSIM";
    for (const auto& [name, vals] : report.external) os << "   " << name;
    os << "\n";
    const PlaneMetrics* rows[3] = {&report.zy, &report.zx, &report.xy};
    const char* names[3] = {"ZY", "ZX", "XY"};
    for (int i = 0; i < 3; ++i) {
        os.precision(4);
        os << names[i] << "      " << format_psnr(*rows[i]) << "      " << rows[i]->ms_ssim;
        for (const auto& [name, vals] : report.external) os << "   " << vals[i];
        os << "\n";
    }
    os.precision(2);
    os << "runtime_seconds=" << report.runtime_seconds << "\n";
    return os.str();
}

std::string report_to_json(const EvalReport& report) {
    json j;
    j["method"] = report.method;
    j["operator"] = report.operator_kind;
    j["peak"] = report.peak;
    const PlaneMetrics* rows[3] = {&report.zy, &report.zx, &report.xy};
    const char* names[3] = {"ZY", "ZX", "XY"};
    for (int i = 0; i < 3; ++i) {
        json row;
        row["psnr_db"] = rows[i]->psnr_infinite ? json("inf") : json(rows[i]->psnr);
        row["psnr_infinite"] = rows[i]->psnr_infinite;
        row["ms_ssim"] = rows[i]->ms_ssim;
        for (const auto& [name, vals] : report.external) row[name] = vals[i];
        j["planes"][names[i]] = row;
    }
    j["runtime_seconds"] = report.runtime_seconds;
    return j.dump(2);
}

void merge_external_metric(EvalReport& report, const std::filesystem::path& score_file) {
    std::ifstream f(score_file);
    detail::require_runtime(f.good(), "cannot open external metric file: " + score_file.string());
    const json j = json::parse(f);
    const std::string name = j.at("metric").get<std::string>();
    report.external[name] = {j.at("ZY").get<double>(), j.at("ZX").get<double>(),
                             j.at("XY").get<double>()};
}

Volume simulate_anisotropy(const Volume& vol, double sigma, int f) {
    detail::require(vol.nz % f == 0, "simulate_anisotropy: f must divide the z-extent");
    const LinearDegradation op = make_exact_operator(gaussian_psf(sigma), f, vol.nz);

    Volume out(vol.nz / f, vol.ny, vol.nx, vol.dtype);
    out.value_lo = vol.value_lo;
    out.value_hi = vol.value_hi;
    out.voxel_size = vol.voxel_size;
    for (int x = 0; x < vol.nx; ++x) {
        const Image low = apply(op, vol.slice_zy(x));
        for (int z = 0; z < out.nz; ++z)
            for (int y = 0; y < out.ny; ++y) out.at(z, y, x) = low(z, y);
    }
    return out;
}

namespace {

/// In-place separable circular Gaussian blur along one axis of a cube.
void blur_axis_wrap(std::vector<double>& data, int nz, int ny, int nx, int axis, double sigma) {
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> taps(static_cast<std::size_t>(2 * radius) + 1);
    double sum = 0.0;
    for (int k = -radius; k <= radius; ++k) {
        taps[static_cast<std::size_t>(k + radius)] = std::exp(-0.5 * (k / sigma) * (k / sigma));
        sum += taps[static_cast<std::size_t>(k + radius)];
    }
    for (double& t : taps) t /= sum;

    const int len = axis == 0 ? nz : axis == 1 ? ny : nx;
    std::vector<double> line(static_cast<std::size_t>(len));
    auto idx = [&](int z, int y, int x) {
        return (static_cast<std::size_t>(z) * ny + y) * nx + x;
    };
    for (int a = 0; a < (axis == 0 ? ny : nz); ++a)
        for (int b = 0; b < (axis == 2 ? ny : nx); ++b) {
            for (int i = 0; i < len; ++i)
                line[static_cast<std::size_t>(i)] =
                    axis == 0 ? data[idx(i, a, b)] : axis == 1 ? data[idx(a, i, b)]
                                                               : data[idx(a, b, i)];
            for (int i = 0; i < len; ++i) {
                double acc = 0.0;
                for (int k = -radius; k <= radius; ++k) {
                    const int j = ((i + k) % len + len) % len;
                    acc += taps[static_cast<std::size_t>(k + radius)] * line[static_cast<std::size_t>(j)];
                }
                if (axis == 0)
                    data[idx(i, a, b)] = acc;
                else if (axis == 1)
                    data[idx(a, i, b)] = acc;
                else
                    data[idx(a, b, i)] = acc;
            }
        }
}

void normalize_field(std::vector<double>& f) {
    double mean = 0.0;
    for (double v : f) mean += v;
    mean /= static_cast<double>(f.size());
    double var = 0.0;
    for (double v : f) var += (v - mean) * (v - mean);
    var /= static_cast<double>(f.size());
    const double inv = 1.0 / std::sqrt(std::max(var, 1e-30));
    for (double& v : f) v = (v - mean) * inv;
}

}  // namespace

Volume make_membrane_phantom(int extent, std::uint64_t seed) {
    detail::require(extent >= 8, "phantom extent too small");
    Volume vol(extent, extent, extent, VoxelType::F32);
    vol.value_lo = 0.0;
    vol.value_hi = 1.0;

    const std::size_t count = vol.voxel_count();
    std::vector<double> membrane_field(count), texture_field(count);
    GaussianStream rng(mix_seed(seed, 0x7068616e));
    for (std::size_t i = 0; i < count; ++i) membrane_field[i] = rng.next();
    for (std::size_t i = 0; i < count; ++i) texture_field[i] = rng.next();

    // Isotropic band limit: the same circular blur on every axis.
    for (int axis = 0; axis < 3; ++axis)
        blur_axis_wrap(membrane_field, extent, extent, extent, axis, extent / 13.0);
    for (int axis = 0; axis < 3; ++axis)
        blur_axis_wrap(texture_field, extent, extent, extent, axis, extent / 21.0);
    normalize_field(membrane_field);
    normalize_field(texture_field);

    // Membranes = shells around the zero level set of the smooth field,
    // about two voxels thick so they survive moderate axial degradation.
    constexpr double kShell = 0.38;
    constexpr double kMembraneIntensity = 0.12;
    for (std::size_t i = 0; i < count; ++i) {
        const double background = 0.62 + 0.14 * texture_field[i];
        const double v = std::abs(membrane_field[i]) < kShell ? kMembraneIntensity : background;
        vol.data[i] = std::clamp(v, 0.0, 1.0);
    }
    return vol;
}

}  // namespace isorecon
