// Copyright (c) 2026 the isorecon authors
// SPDX-License-Identifier: Apache-2.0
#include "isorecon/dataset.hpp"

#include <algorithm>

namespace isorecon {

SliceDataset SliceDataset::from_volume(std::shared_ptr<const Volume> vol, int crop,
                                       std::int64_t count, std::uint64_t seed) {
    detail::require(vol != nullptr, "dataset needs a volume");
    detail::require(crop >= 1, "crop must be positive");
    detail::require(count >= 0, "count must be non-negative");
    detail::require(vol->ny >= crop && vol->nx >= crop,
                    "volume lateral extents (" + std::to_string(vol->ny) + "x" +
                        std::to_string(vol->nx) + ") smaller than crop " + std::to_string(crop));
    detail::require(vol->value_hi > vol->value_lo, "volume value range is degenerate");

    SliceDataset ds;
    ds.vol_ = std::move(vol);
    ds.crop_ = crop;
    ds.count_ = count;
    ds.seed_ = seed;
    ds.lo_ = ds.vol_->value_lo;
    ds.hi_ = ds.vol_->value_hi;

    std::uint64_t h = fnv1a64(ds.vol_->data.data(), ds.vol_->data.size() * sizeof(double));
    const std::int64_t params[3] = {crop, count, static_cast<std::int64_t>(seed)};
    ds.fingerprint_ = fnv1a64(params, sizeof params, h);
    return ds;
}

SliceDataset SliceDataset::from_volume(const Volume& vol, int crop, std::int64_t count,
                                       std::uint64_t seed) {
    return from_volume(std::make_shared<Volume>(vol), crop, count, seed);
}

ImageF SliceDataset::sample(std::int64_t i) const {
    detail::require(vol_ != nullptr && i >= 0 && i < count_, "dataset sample index out of range");
    GaussianStream rng(mix_seed(seed_, static_cast<std::uint64_t>(i) + 1));

    const Volume& v = *vol_;
    const int z = static_cast<int>(rng.next_int(0, v.nz - 1));
    const int y0 = static_cast<int>(rng.next_int(0, v.ny - crop_));
    const int x0 = static_cast<int>(rng.next_int(0, v.nx - crop_));
    const int aug = static_cast<int>(rng.next_int(0, 7));  // dihedral group of the square

    const double inv_half = 2.0 / (hi_ - lo_);

    ImageF out(crop_, crop_);
    for (int r = 0; r < crop_; ++r) {
        for (int c = 0; c < crop_; ++c) {
            int rr = r, cc = c;
            if (aug & 4) std::swap(rr, cc);        // transpose
            if (aug & 1) rr = crop_ - 1 - rr;      // vertical flip
            if (aug & 2) cc = crop_ - 1 - cc;      // horizontal flip
            const double raw = v.at(z, y0 + rr, x0 + cc);
            const double norm = std::clamp((raw - lo_) * inv_half - 1.0, -1.0, 1.0);
            out(r, c) = static_cast<float>(norm);
        }
    }
    return out;
}

}  // namespace isorecon
