// Copyright (c) 2026 the isorecon authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace isorecon {

// 2D slice math runs in double end to end; only the network itself is float.
using Image = Eigen::MatrixXd;
using ImageF = Eigen::MatrixXf;

namespace detail {

[[noreturn]] inline void fail_invalid(const std::string& msg) {
    throw std::invalid_argument(msg);
}

inline void require(bool cond, const std::string& msg) {
    if (!cond) fail_invalid(msg);
}

inline void require_runtime(bool cond, const std::string& msg) {
    if (!cond) throw std::runtime_error(msg);
}

}  // namespace detail

/// Deterministic Gaussian stream (Box-Muller over mt19937_64 uniforms).
/// std::normal_distribution's draw sequence is implementation-defined, which
/// would make seeded runs differ across standard libraries.
class GaussianStream {
public:
    explicit GaussianStream(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

    double next() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        // u1 in (0,1], u2 in [0,1)
        const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
        const double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    Image next_image(Eigen::Index rows, Eigen::Index cols) {
        Image out(rows, cols);
        for (Eigen::Index c = 0; c < cols; ++c)
            for (Eigen::Index r = 0; r < rows; ++r) out(r, c) = next();
        return out;
    }

    /// Uniform integer in [lo, hi] (inclusive), bias-free via rejection.
    std::int64_t next_int(std::int64_t lo, std::int64_t hi) {
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
        std::uint64_t v;
        do {
            v = next_u64();
        } while (v >= limit);
        return lo + static_cast<std::int64_t>(v % span);
    }

    std::uint64_t next_u64() {
        // xorshift* keeps the stream self-contained and byte-stable.
        std::uint64_t x = state_;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        state_ = x;
        return x * 0x2545f4914f6cdd1dull;
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

/// Stable 64-bit FNV-1a, used for dataset fingerprints and derived seeds.
inline std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t h = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t buf[2] = {a, b};
    return fnv1a64(buf, sizeof buf);
}

}  // namespace isorecon
