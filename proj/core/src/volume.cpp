// Copyright (c) 2026 the isorecon authors
// SPDX-License-Identifier: Apache-2.0
#include "isorecon/volume.hpp"

#include <algorithm>
#include <cmath>

namespace isorecon {

std::string to_string(VoxelType t) {
    switch (t) {
        case VoxelType::U8: return "uint8";
        case VoxelType::U16: return "uint16";
        case VoxelType::F32: return "float32";
    }
    return "?";
}

VoxelType voxel_type_from_string(const std::string& name) {
    if (name == "uint8") return VoxelType::U8;
    if (name == "uint16") return VoxelType::U16;
    if (name == "float32") return VoxelType::F32;
    detail::fail_invalid("unknown dtype '" + name + "' (expected uint8|uint16|float32)");
}

std::size_t voxel_size_bytes(VoxelType t) {
    switch (t) {
        case VoxelType::U8: return 1;
        case VoxelType::U16: return 2;
        case VoxelType::F32: return 4;
    }
    return 0;
}

double dtype_peak(VoxelType t) {
    switch (t) {
        case VoxelType::U8: return 255.0;
        case VoxelType::U16: return 65535.0;
        case VoxelType::F32: return 1.0;
    }
    return 1.0;
}

Volume::Volume(int nz_, int ny_, int nx_, VoxelType dtype_)
    : nz(nz_), ny(ny_), nx(nx_), dtype(dtype_) {
    detail::require(nz_ > 0 && ny_ > 0 && nx_ > 0, "volume extents must be positive");
    data.assign(static_cast<std::size_t>(nz_) * ny_ * nx_, 0.0);
    value_hi = dtype_peak(dtype_);
}

Image Volume::slice_zy(int x) const {
    detail::require(x >= 0 && x < nx, "slice_zy: x out of range");
    Image img(nz, ny);
    for (int z = 0; z < nz; ++z)
        for (int y = 0; y < ny; ++y) img(z, y) = at(z, y, x);
    return img;
}

Image Volume::slice_zx(int y) const {
    detail::require(y >= 0 && y < ny, "slice_zx: y out of range");
    Image img(nz, nx);
    for (int z = 0; z < nz; ++z)
        for (int x = 0; x < nx; ++x) img(z, x) = at(z, y, x);
    return img;
}

Image Volume::slice_xy(int z) const {
    detail::require(z >= 0 && z < nz, "slice_xy: z out of range");
    Image img(ny, nx);
    for (int y = 0; y < ny; ++y)
        for (int x = 0; x < nx; ++x) img(y, x) = at(z, y, x);
    return img;
}

void Volume::set_slice_zy(int x, const Image& img) {
    detail::require(x >= 0 && x < nx, "set_slice_zy: x out of range");
    detail::require(img.rows() == nz && img.cols() == ny, "set_slice_zy: shape mismatch");
    for (int z = 0; z < nz; ++z)
        for (int y = 0; y < ny; ++y) at(z, y, x) = img(z, y);
}

void Volume::set_slice_zx(int y, const Image& img) {
    detail::require(y >= 0 && y < ny, "set_slice_zx: y out of range");
    detail::require(img.rows() == nz && img.cols() == nx, "set_slice_zx: shape mismatch");
    for (int z = 0; z < nz; ++z)
        for (int x = 0; x < nx; ++x) at(z, y, x) = img(z, x);
}

std::pair<double, double> Volume::robust_range() const {
    detail::require(!data.empty(), "robust_range on empty volume");
    std::vector<double> sorted(data);
    std::sort(sorted.begin(), sorted.end());
    const auto pick = [&](double q) {
        const auto idx = static_cast<std::size_t>(q * (sorted.size() - 1) + 0.5);
        return sorted[std::min(idx, sorted.size() - 1)];
    };
    double lo = pick(0.001);
    double hi = pick(0.999);
    if (hi <= lo) hi = lo + 1.0;  // degenerate (constant) volume
    return {lo, hi};
}

Volume ensemble(const Volume& a, const Volume& b) {
    detail::require(a.same_shape(b), "ensemble: volume shapes differ");
    Volume out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = 0.5 * (a.data[i] + b.data[i]);
    return out;
}

}  // namespace isorecon
