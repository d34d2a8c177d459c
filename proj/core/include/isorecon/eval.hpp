// Copyright (c) 2026 the isorecon authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>

#include "isorecon/volume.hpp"

namespace isorecon {

struct PlaneMetrics {
    double psnr = 0.0;
    bool psnr_infinite = false;
    double ms_ssim = 0.0;
};

/// Per-plane-family scores in the three orthogonal viewing directions plus
/// optional externally computed metrics (e.g. a perceptual score produced by
/// another tool and merged from a score file).
struct EvalReport {
    std::string method;
    std::string operator_kind;
    double peak = 1.0;
    PlaneMetrics zy, zx, xy;
    double runtime_seconds = 0.0;
    std::map<std::string, std::array<double, 3>> external;  // name -> (ZY, ZX, XY)
};

/// 20 log10(peak) - 10 log10(MSE); +inf (flagged by the caller) when MSE = 0.
double psnr(const Image& a, const Image& b, double peak);
double psnr(const Volume& a, const Volume& b, double peak);

/// Multi-scale SSIM, 11-tap Gaussian window (sigma 1.5), K1 = 0.01,
/// K2 = 0.03, standard five scale weights. Sides below 161 reduce the scale
/// count (weights renormalized) with a one-time warning; sides below 11 are
/// rejected. Returns a value in [0, 1].
double ms_ssim(const Image& a, const Image& b, double peak, int* scales_used = nullptr);

/// Mean per-slice psnr and ms_ssim over each of the ZY / ZX / XY families.
EvalReport per_plane_eval(const Volume& recon, const Volume& gt, const std::string& method = "",
                          const std::string& operator_kind = "");

std::string report_table(const EvalReport& report);
std::string report_to_json(const EvalReport& report);

/// Merge a per-plane score file {"metric": name, "ZY": v, "ZX": v, "XY": v}
/// produced by an external tool into the report.
void merge_external_metric(EvalReport& report, const std::filesystem::path& score_file);

/// Degrade an isotropic volume along z with the exact Gaussian-PSF operator
/// (shared code path with the degrade module): blur, then keep every f-th
/// lateral plane. Output z-extent is nz / f.
Volume simulate_anisotropy(const Volume& vol, double sigma, int f);

/// Seeded synthetic test volume: a band-limited random field carrying sharp
/// dark membranes (zero level sets of a second smooth field), isotropic by
/// construction, float32 in [0, 1].
Volume make_membrane_phantom(int extent, std::uint64_t seed);

}  // namespace isorecon
