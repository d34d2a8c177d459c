// Copyright (c) 2026 the isorecon authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>

#include "isorecon/common.hpp"

namespace isorecon {

/// Normalized, symmetric 1D Gaussian tap vector.
struct PSFKernel {
    double sigma = 0.0;
    int radius = 0;                 // half-width in taps; >= ceil(3*sigma)
    Eigen::VectorXd weights;        // size 2*radius+1, sums to 1
};

/// Gaussian PSF with radius ceil(3*sigma); sigma == 0 degenerates to a delta.
PSFKernel gaussian_psf(double sigma);
PSFKernel delta_psf();

enum class DegradationKind { ExactPSF, Interpolation, Average, Imputation };
enum class InterpMethod { Linear, Cubic, Lanczos };

std::string to_string(DegradationKind kind);
std::string to_string(InterpMethod method);
DegradationKind degradation_kind_from_string(const std::string& name);
InterpMethod interp_method_from_string(const std::string& name);

/// A pair (A, A_pinv) acting along the degraded (first) axis of a 2D image.
/// A maps n high-res rows to m = n/f observed rows; A_pinv maps back.
/// For ExactPSF, Average and Imputation, A_pinv is the Moore-Penrose inverse;
/// for Interpolation it is the paper's heuristic interpolation matrix.
struct LinearDegradation {
    DegradationKind kind = DegradationKind::Imputation;
    int f = 1;
    int n = 0;
    int m = 0;
    Eigen::MatrixXd A;        // m x n
    Eigen::MatrixXd A_pinv;   // n x m
    std::optional<PSFKernel> psf;            // ExactPSF only
    std::optional<InterpMethod> method;      // Interpolation only
};

/// A = S_f * P with circular (wrap-around) PSF convolution; A_pinv by SVD
/// with singular values below 1e-10 * sigma_max truncated to zero. The four
/// Penrose conditions are verified at construction.
LinearDegradation make_exact_operator(const PSFKernel& psf, int f, int n);

/// Blind-PSF heuristic: A samples every f-th row (top-aligned), A_pinv is the
/// method's interpolation matrix with clamp-to-edge handling past the last
/// low-res sample. A_pinv is not the pseudo-inverse of A by construction.
LinearDegradation make_interpolation_operator(int f, int n, InterpMethod method);

/// A averages each consecutive block of f rows; A_pinv = f * A^T (exact
/// pseudo-inverse, block replication).
LinearDegradation make_average_operator(int f, int n);

/// A = S_f, A_pinv = S_f^T (zero fill). Range-space replacement degenerates
/// to inpainting of the kept rows.
LinearDegradation make_imputation_operator(int f, int n);

/// Declarative spec for building an operator from a run config.
struct OperatorSpec {
    DegradationKind kind = DegradationKind::Interpolation;
    int f = 1;
    double sigma = 0.0;                        // ExactPSF only
    InterpMethod method = InterpMethod::Linear;  // Interpolation only
};

/// Build (or fetch from the process-wide cache) the operator for spec at
/// high-res length n. Operators are immutable, so cached instances are safe
/// to share across threads.
const LinearDegradation& make_operator(const OperatorSpec& spec, int n);

/// Apply A column-wise: img has n rows, result has m rows (same columns).
Image apply(const LinearDegradation& op, const Image& img);

/// Apply A_pinv column-wise: img has m rows, result has n rows.
Image apply_pinv(const LinearDegradation& op, const Image& img);

/// Eq. of the range-space refinement: A_pinv*y + x0t - A_pinv*(A*x0t),
/// computed operator-wise. x0t has n rows, y has m rows.
Image range_space_replace(const Image& x0t, const Image& y, const LinearDegradation& op);

/// Frobenius residuals of the four Moore-Penrose conditions for (A, A_pinv).
/// Order: |A P A - A|, |P A P - P|, |(A P)^T - A P|, |(P A)^T - P A|.
Eigen::Vector4d penrose_residuals(const Eigen::MatrixXd& A, const Eigen::MatrixXd& P);

}  // namespace isorecon
