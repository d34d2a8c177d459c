// Copyright (c) 2026 the isorecon authors
// SPDX-License-Identifier: Apache-2.0
#include "isorecon/degrade.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>

namespace isorecon {

namespace {

constexpr double kSvdTruncation = 1e-10;
constexpr double kPenroseTol = 1e-8;

void check_divides(int f, int n) {
    detail::require(f >= 1, "downsampling factor must be positive");
    detail::require(n >= 1, "axis length must be positive");
    detail::require(n % f == 0, "factor f=" + std::to_string(f) + " does not divide n=" +
                                    std::to_string(n));
}

// Interpolation kernels on the low-res sample grid (unit spacing).
double kernel_linear(double x) {
    x = std::abs(x);
    return x < 1.0 ? 1.0 - x : 0.0;
}

double kernel_catmull_rom(double x) {
    x = std::abs(x);
    if (x < 1.0) return 1.5 * x * x * x - 2.5 * x * x + 1.0;
    if (x < 2.0) return -0.5 * x * x * x + 2.5 * x * x - 4.0 * x + 2.0;
    return 0.0;
}

double sinc(double x) {
    if (x == 0.0) return 1.0;
    const double px = 3.14159265358979323846 * x;
    return std::sin(px) / px;
}

double kernel_lanczos3(double x) {
    x = std::abs(x);
    return x < 3.0 ? sinc(x) * sinc(x / 3.0) : 0.0;
}

int kernel_support(InterpMethod method) {
    switch (method) {
        case InterpMethod::Linear: return 1;
        case InterpMethod::Cubic: return 2;
        case InterpMethod::Lanczos: return 3;
    }
    return 1;
}

double kernel_eval(InterpMethod method, double x) {
    switch (method) {
        case InterpMethod::Linear: return kernel_linear(x);
        case InterpMethod::Cubic: return kernel_catmull_rom(x);
        case InterpMethod::Lanczos: return kernel_lanczos3(x);
    }
    return 0.0;
}

Eigen::MatrixXd svd_pinv(const Eigen::MatrixXd& A) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sv = svd.singularValues();
    detail::require_runtime(sv.size() > 0 && sv.allFinite(), "SVD failure on degradation matrix");
    const double cutoff = kSvdTruncation * sv(0);
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(sv.size());
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > cutoff) inv(i) = 1.0 / sv(i);
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Eigen::MatrixXd selector_matrix(int f, int n) {
    const int m = n / f;
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(m, n);
    for (int i = 0; i < m; ++i) S(i, i * f) = 1.0;
    return S;
}

}  // namespace

PSFKernel gaussian_psf(double sigma) {
    detail::require(sigma >= 0.0, "PSF sigma must be non-negative");
    PSFKernel psf;
    psf.sigma = sigma;
    if (sigma == 0.0) {
        psf.radius = 0;
        psf.weights = Eigen::VectorXd::Ones(1);
        return psf;
    }
    psf.radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    psf.weights.resize(2 * psf.radius + 1);
    for (int k = -psf.radius; k <= psf.radius; ++k)
        psf.weights(k + psf.radius) = std::exp(-0.5 * (k / sigma) * (k / sigma));
    psf.weights /= psf.weights.sum();
    return psf;
}

PSFKernel delta_psf() { return gaussian_psf(0.0); }

std::string to_string(DegradationKind kind) {
    switch (kind) {
        case DegradationKind::ExactPSF: return "exact-psf";
        case DegradationKind::Interpolation: return "interpolation";
        case DegradationKind::Average: return "average";
        case DegradationKind::Imputation: return "imputation";
    }
    return "?";
}

std::string to_string(InterpMethod method) {
    switch (method) {
        case InterpMethod::Linear: return "linear";
        case InterpMethod::Cubic: return "cubic";
        case InterpMethod::Lanczos: return "lanczos";
    }
    return "?";
}

DegradationKind degradation_kind_from_string(const std::string& name) {
    if (name == "exact-psf") return DegradationKind::ExactPSF;
    if (name == "interpolation") return DegradationKind::Interpolation;
    if (name == "average") return DegradationKind::Average;
    if (name == "imputation") return DegradationKind::Imputation;
    detail::fail_invalid("unknown operator kind '" + name +
                         "' (expected exact-psf|interpolation|average|imputation)");
}

InterpMethod interp_method_from_string(const std::string& name) {
    if (name == "linear") return InterpMethod::Linear;
    if (name == "cubic") return InterpMethod::Cubic;
    if (name == "lanczos") return InterpMethod::Lanczos;
    detail::fail_invalid("unknown interpolation method '" + name +
                         "' (expected linear|cubic|lanczos)");
}

Eigen::Vector4d penrose_residuals(const Eigen::MatrixXd& A, const Eigen::MatrixXd& P) {
    const Eigen::MatrixXd AP = A * P;
    const Eigen::MatrixXd PA = P * A;
    Eigen::Vector4d r;
    r(0) = (AP * A - A).norm();
    r(1) = (PA * P - P).norm();
    r(2) = (AP.transpose() - AP).norm();
    r(3) = (PA.transpose() - PA).norm();
    return r;
}

LinearDegradation make_exact_operator(const PSFKernel& psf, int f, int n) {
    check_divides(f, n);
    detail::require(psf.weights.size() == 2 * psf.radius + 1 &&
                        std::abs(psf.weights.sum() - 1.0) < 1e-9,
                    "invalid PSF kernel");

    // Circular convolution matrix P, then keep every f-th row.
    const int m = n / f;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, n);
    for (int i = 0; i < m; ++i) {
        const int row = i * f;
        for (int k = -psf.radius; k <= psf.radius; ++k) {
            const int col = ((row + k) % n + n) % n;
            A(i, col) += psf.weights(k + psf.radius);
        }
    }

    LinearDegradation op;
    op.kind = DegradationKind::ExactPSF;
    op.f = f;
    op.n = n;
    op.m = m;
    op.A = std::move(A);
    op.A_pinv = svd_pinv(op.A);
    op.psf = psf;

    const Eigen::Vector4d res = penrose_residuals(op.A, op.A_pinv);
    detail::require_runtime(res.maxCoeff() < kPenroseTol,
                            "exact-psf operator failed Penrose verification (residual " +
                                std::to_string(res.maxCoeff()) + ")");
    return op;
}

LinearDegradation make_interpolation_operator(int f, int n, InterpMethod method) {
    check_divides(f, n);
    const int m = n / f;

    LinearDegradation op;
    op.kind = DegradationKind::Interpolation;
    op.f = f;
    op.n = n;
    op.m = m;
    op.method = method;

    // Downsampling samples the top-aligned grid rows i*f; the interpolation
    // direction carries the method. This keeps A*A_pinv = I (interpolation
    // passes through its samples), so replaced low-pass content depends on y
    // alone.
    op.A = selector_matrix(f, n);

    const int support = kernel_support(method);
    op.A_pinv = Eigen::MatrixXd::Zero(n, m);
    for (int j = 0; j < n; ++j) {
        const double u = std::min(static_cast<double>(j) / f, static_cast<double>(m - 1));
        const int base = static_cast<int>(std::floor(u));
        double sum = 0.0;
        for (int k = base - support + 1; k <= base + support; ++k) {
            const double w = kernel_eval(method, u - k);
            if (w == 0.0) continue;
            const int idx = std::clamp(k, 0, m - 1);  // clamp-to-edge
            op.A_pinv(j, idx) += w;
            sum += w;
        }
        detail::require_runtime(sum > 0.0, "interpolation row has empty support");
        op.A_pinv.row(j) /= sum;  // rows sum to 1: constants are preserved
    }
    return op;
}

LinearDegradation make_average_operator(int f, int n) {
    check_divides(f, n);
    const int m = n / f;

    LinearDegradation op;
    op.kind = DegradationKind::Average;
    op.f = f;
    op.n = n;
    op.m = m;
    op.A = Eigen::MatrixXd::Zero(m, n);
    op.A_pinv = Eigen::MatrixXd::Zero(n, m);
    for (int i = 0; i < m; ++i) {
        for (int d = 0; d < f; ++d) {
            op.A(i, i * f + d) = 1.0 / f;
            // A A^T = I/f, so the pseudo-inverse is f * A^T: plain replication.
            op.A_pinv(i * f + d, i) = 1.0;
        }
    }
    return op;
}

LinearDegradation make_imputation_operator(int f, int n) {
    check_divides(f, n);
    LinearDegradation op;
    op.kind = DegradationKind::Imputation;
    op.f = f;
    op.n = n;
    op.m = n / f;
    op.A = selector_matrix(f, n);
    op.A_pinv = op.A.transpose();
    return op;
}

const LinearDegradation& make_operator(const OperatorSpec& spec, int n) {
    using Key = std::tuple<DegradationKind, int, int, double, InterpMethod>;
    static std::mutex mutex;
    static std::map<Key, std::unique_ptr<LinearDegradation>> cache;

    const Key key{spec.kind, spec.f, n,
                  spec.kind == DegradationKind::ExactPSF ? spec.sigma : 0.0,
                  spec.kind == DegradationKind::Interpolation ? spec.method : InterpMethod::Linear};

    std::scoped_lock lock(mutex);
    auto it = cache.find(key);
    if (it != cache.end()) return *it->second;

    LinearDegradation built;
    switch (spec.kind) {
        case DegradationKind::ExactPSF:
            built = make_exact_operator(gaussian_psf(spec.sigma), spec.f, n);
            break;
        case DegradationKind::Interpolation:
            built = make_interpolation_operator(spec.f, n, spec.method);
            break;
        case DegradationKind::Average:
            built = make_average_operator(spec.f, n);
            break;
        case DegradationKind::Imputation:
            built = make_imputation_operator(spec.f, n);
            break;
    }
    auto owned = std::make_unique<LinearDegradation>(std::move(built));
    const LinearDegradation& ref = *owned;
    cache.emplace(key, std::move(owned));
    return ref;
}

Image apply(const LinearDegradation& op, const Image& img) {
    detail::require(img.rows() == op.n, "apply: image has " + std::to_string(img.rows()) +
                                            " rows, operator expects n=" + std::to_string(op.n));
    return op.A * img;
}

Image apply_pinv(const LinearDegradation& op, const Image& img) {
    detail::require(img.rows() == op.m,
                    "apply_pinv: image has " + std::to_string(img.rows()) +
                        " rows, operator expects m=" + std::to_string(op.m));
    return op.A_pinv * img;
}

Image range_space_replace(const Image& x0t, const Image& y, const LinearDegradation& op) {
    detail::require(op.A.size() > 0 && op.A_pinv.size() > 0,
                    "range_space_replace: operator is missing a direction");
    detail::require(x0t.rows() == op.n, "range_space_replace: x0t must have n rows");
    detail::require(y.rows() == op.m, "range_space_replace: y must have m rows");
    detail::require(x0t.cols() == y.cols(), "range_space_replace: column count mismatch");
    return op.A_pinv * y + x0t - op.A_pinv * (op.A * x0t);
}

}  // namespace isorecon
