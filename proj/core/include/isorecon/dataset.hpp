// Copyright (c) 2026 the isorecon authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>

#include "isorecon/volume.hpp"

namespace isorecon {

/// Deterministic stream of augmented lateral (XY) crops, normalized to
/// [-1, 1] via the volume's (value_lo, value_hi). Sample i is a pure function
/// of (seed, i): the stream is identical across runs and random-access.
class SliceDataset {
public:
    SliceDataset() = default;

    static SliceDataset from_volume(std::shared_ptr<const Volume> vol, int crop,
                                    std::int64_t count, std::uint64_t seed);
    static SliceDataset from_volume(const Volume& vol, int crop, std::int64_t count,
                                    std::uint64_t seed);

    std::int64_t size() const { return count_; }
    bool empty() const { return count_ == 0; }
    int crop() const { return crop_; }
    double value_lo() const { return lo_; }
    double value_hi() const { return hi_; }
    std::uint64_t fingerprint() const { return fingerprint_; }

    /// Crop index i (flips and 90-degree rotations only, per-index seeded).
    ImageF sample(std::int64_t i) const;

private:
    std::shared_ptr<const Volume> vol_;
    int crop_ = 0;
    std::int64_t count_ = 0;
    std::uint64_t seed_ = 0;
    double lo_ = 0.0, hi_ = 1.0;
    std::uint64_t fingerprint_ = 0;
};

}  // namespace isorecon
