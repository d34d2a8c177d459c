// Copyright (c) 2026 the isorecon authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>

#include "isorecon/volume.hpp"

namespace isorecon {

/// Multi-page grayscale TIFF, page = z, row = y, col = x. Baseline
/// little-endian, uncompressed; 8/16-bit unsigned or 32-bit float samples.
/// Value range and voxel size ride along in the first page's description tag.
void write_tiff(const std::filesystem::path& path, const Volume& vol);
Volume read_tiff(const std::filesystem::path& path);

/// Raw little-endian scalar stream plus a JSON sidecar ("<path>.json") with
/// {shape, dtype, value_range, voxel_size?}. Bit-exact round trip.
void write_raw(const std::filesystem::path& path, const Volume& vol);
Volume read_raw(const std::filesystem::path& path);

/// Dispatch on extension: .tif/.tiff vs .raw.
void write_volume(const std::filesystem::path& path, const Volume& vol);
Volume read_volume(const std::filesystem::path& path);

}  // namespace isorecon
