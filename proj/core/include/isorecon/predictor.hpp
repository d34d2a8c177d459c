// Copyright (c) 2026 the isorecon authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "isorecon/common.hpp"

namespace isorecon {

/// Noise-prediction interface consumed by the sampler. Implementations may
/// keep internal scratch state (predict is non-const); use one instance per
/// worker thread.
class NoisePredictor {
public:
    virtual ~NoisePredictor() = default;

    /// Estimate the noise content of x_t at step t. Same-shape output.
    virtual Image predict(const Image& x_t, int t) = 0;

    /// Spatial extents fed to predict() must be divisible by this.
    virtual int spatial_divisor() const { return 1; }
};

}  // namespace isorecon
