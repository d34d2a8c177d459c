// Copyright (c) 2026 the isorecon authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "isorecon/common.hpp"

namespace isorecon {

enum class VoxelType : std::uint8_t { U8, U16, F32 };

std::string to_string(VoxelType t);
VoxelType voxel_type_from_string(const std::string& name);
std::size_t voxel_size_bytes(VoxelType t);

/// Peak value used for PSNR and SSIM constants: dtype peak for integer
/// volumes, 1.0 for float volumes.
double dtype_peak(VoxelType t);

enum class Axis : std::uint8_t { X, Y, Z };

/// 3D scalar grid with (z, y, x) axis convention, z-major storage.
/// Samples are held as double in memory; dtype records how the volume is
/// (de)serialized. Integer and float32 payloads survive the round trip
/// bit-exactly (they embed losslessly in double).
struct Volume {
    int nz = 0, ny = 0, nx = 0;
    VoxelType dtype = VoxelType::F32;
    double value_lo = 0.0, value_hi = 1.0;
    std::optional<std::array<double, 3>> voxel_size;  // (z, y, x), optional metadata
    std::vector<double> data;                         // idx = (z*ny + y)*nx + x

    Volume() = default;
    Volume(int nz_, int ny_, int nx_, VoxelType dtype_ = VoxelType::F32);

    std::size_t voxel_count() const { return data.size(); }
    double& at(int z, int y, int x) {
        return data[(static_cast<std::size_t>(z) * ny + y) * nx + x];
    }
    double at(int z, int y, int x) const {
        return data[(static_cast<std::size_t>(z) * ny + y) * nx + x];
    }

    bool same_shape(const Volume& o) const { return nz == o.nz && ny == o.ny && nx == o.nx; }

    /// ZY plane at fixed x (rows = z, cols = y).
    Image slice_zy(int x) const;
    /// ZX plane at fixed y (rows = z, cols = x).
    Image slice_zx(int y) const;
    /// XY plane at fixed z (rows = y, cols = x).
    Image slice_xy(int z) const;

    void set_slice_zy(int x, const Image& img);
    void set_slice_zx(int y, const Image& img);

    /// 0.1% / 99.9% intensity percentiles (training normalization default).
    std::pair<double, double> robust_range() const;
};

/// Voxel-wise arithmetic mean of two same-shaped volumes.
Volume ensemble(const Volume& a, const Volume& b);

}  // namespace isorecon
