// Copyright (c) 2026 the isorecon authors
// SPDX-License-Identifier: Apache-2.0
#include "isorecon/volume_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <vector>

#include <nlohmann/json.hpp>

namespace isorecon {

namespace {

using json = nlohmann::json;

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
    auto p = path;
    p += ".json";
    return p;
}

bool is_tiff_ext(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".tif" || ext == ".tiff";
}

}  // namespace

void write_raw(const std::filesystem::path& path, const Volume& vol) {
    detail::require(vol.nz > 0 && vol.ny > 0 && vol.nx > 0, "write_raw: empty volume");

    std::vector<std::uint8_t> payload;
    const std::size_t count = vol.voxel_count();
    switch (vol.dtype) {
        case VoxelType::U8:
            payload.resize(count);
            for (std::size_t i = 0; i < count; ++i)
                payload[i] = static_cast<std::uint8_t>(
                    std::clamp(std::lround(vol.data[i]), 0l, 255l));
            break;
        case VoxelType::U16:
            payload.resize(count * 2);
            for (std::size_t i = 0; i < count; ++i) {
                const auto v = static_cast<std::uint16_t>(
                    std::clamp(std::lround(vol.data[i]), 0l, 65535l));
                payload[2 * i] = static_cast<std::uint8_t>(v & 0xff);
                payload[2 * i + 1] = static_cast<std::uint8_t>(v >> 8);
            }
            break;
        case VoxelType::F32:
            payload.resize(count * 4);
            for (std::size_t i = 0; i < count; ++i) {
                const auto f = static_cast<float>(vol.data[i]);
                std::memcpy(payload.data() + 4 * i, &f, 4);
            }
            break;
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    detail::require_runtime(f.good(), "cannot open for writing: " + path.string());
    f.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size()));
    detail::require_runtime(f.good(), "short write: " + path.string());

    json meta;
    meta["shape"] = {vol.nz, vol.ny, vol.nx};
    meta["dtype"] = to_string(vol.dtype);
    meta["value_range"] = {vol.value_lo, vol.value_hi};
    if (vol.voxel_size)
        meta["voxel_size"] = {(*vol.voxel_size)[0], (*vol.voxel_size)[1], (*vol.voxel_size)[2]};
    std::ofstream mf(sidecar_path(path), std::ios::trunc);
    detail::require_runtime(mf.good(), "cannot write sidecar for: " + path.string());
    mf << meta.dump(2) << "\n";
}

Volume read_raw(const std::filesystem::path& path) {
    std::ifstream mf(sidecar_path(path));
    detail::require_runtime(mf.good(), "missing sidecar: " + sidecar_path(path).string());
    json meta = json::parse(mf);

    const auto shape = meta.at("shape");
    Volume vol(shape.at(0).get<int>(), shape.at(1).get<int>(), shape.at(2).get<int>(),
               voxel_type_from_string(meta.at("dtype").get<std::string>()));
    if (meta.contains("value_range")) {
        vol.value_lo = meta["value_range"][0].get<double>();
        vol.value_hi = meta["value_range"][1].get<double>();
    }
    if (meta.contains("voxel_size"))
        vol.voxel_size = {{meta["voxel_size"][0], meta["voxel_size"][1], meta["voxel_size"][2]}};

    std::ifstream f(path, std::ios::binary);
    detail::require_runtime(f.good(), "cannot open: " + path.string());
    std::vector<std::uint8_t> payload{std::istreambuf_iterator<char>(f),
                                      std::istreambuf_iterator<char>()};
    const std::size_t count = vol.voxel_count();
    detail::require_runtime(payload.size() == count * voxel_size_bytes(vol.dtype),
                            "raw payload size disagrees with sidecar shape: " + path.string());

    switch (vol.dtype) {
        case VoxelType::U8:
            for (std::size_t i = 0; i < count; ++i) vol.data[i] = payload[i];
            break;
        case VoxelType::U16:
            for (std::size_t i = 0; i < count; ++i)
                vol.data[i] = static_cast<float>(payload[2 * i] | (payload[2 * i + 1] << 8));
            break;
        case VoxelType::F32:
            for (std::size_t i = 0; i < count; ++i) {
                float f;
                std::memcpy(&f, payload.data() + 4 * i, 4);
                vol.data[i] = f;
            }
            break;
    }
    return vol;
}

void write_volume(const std::filesystem::path& path, const Volume& vol) {
    if (is_tiff_ext(path))
        write_tiff(path, vol);
    else
        write_raw(path, vol);
}

Volume read_volume(const std::filesystem::path& path) {
    return is_tiff_ext(path) ? read_tiff(path) : read_raw(path);
}

}  // namespace isorecon
