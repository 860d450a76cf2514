// SPDX-License-Identifier: MIT
#pragma once

#include "bht/error.hpp"
#include "bht/tensor.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace bht::linalg {

/// Relative cutoff below which singular values count as zero.
inline constexpr double kRankCutoff = 1e-12;

struct SvdResult {
    Matrix u;  ///< m x k, orthonormal columns
    Vector s;  ///< k values, nonincreasing
    Matrix v;  ///< n x k, orthonormal columns
};

inline bool all_finite(const Matrix& a) { return a.allFinite(); }

/// Thin SVD, k = min(m, n). One-sided Jacobi, so the result is a deterministic
/// function of the input and U, V are exactly orthogonal even on null directions.
inline SvdResult svd(const Matrix& a) {
    if (!all_finite(a)) throw NumericalError("svd: input contains non-finite entries");
    if (a.size() == 0) return {Matrix(a.rows(), 0), Vector(0), Matrix(a.cols(), 0)};
    Eigen::JacobiSVD<Matrix> solver(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (solver.info() != Eigen::Success) throw NumericalError("svd: Jacobi iteration did not converge");
    SvdResult out{solver.matrixU(), solver.singularValues(), solver.matrixV()};
    if (!out.u.allFinite() || !out.s.allFinite() || !out.v.allFinite())
        throw NumericalError("svd: produced non-finite factors");
    return out;
}

inline Matrix pinv(const Matrix& a) {
    if (a.size() == 0) return Matrix::Zero(a.cols(), a.rows());
    const SvdResult d = svd(a);
    const double smax = d.s.size() ? d.s(0) : 0.0;
    const double cut = kRankCutoff * smax;
    Vector inv_s(d.s.size());
    for (Eigen::Index i = 0; i < d.s.size(); ++i) inv_s(i) = (smax > 0.0 && d.s(i) > cut) ? 1.0 / d.s(i) : 0.0;
    return d.v * inv_s.asDiagonal() * d.u.transpose();
}

/// argmax_Q trace(Q^T M) over Q with orthonormal columns, i.e. U V^T of svd(M).
inline Matrix procrustes(const Matrix& m) {
    if (m.rows() < m.cols())
        throw ShapeError("procrustes: need rows >= cols, got " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()));
    const SvdResult d = svd(m);
    return d.u * d.v.transpose();
}

/// Minimum-norm least-squares solution of a x = b.
inline Matrix lstsq(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows())
        throw ShapeError("lstsq: row mismatch " + std::to_string(a.rows()) + " vs " + std::to_string(b.rows()));
    return pinv(a) * b;
}

/// Solves the symmetric Toeplitz system R alpha = r, R_ij = gamma_|i-j|, r_i = gamma_i,
/// by Levinson-Durbin recursion. gamma holds gamma_0..gamma_p.
inline std::vector<double> solve_toeplitz(std::span<const double> gamma) {
    if (gamma.size() < 2) throw ConfigError("solve_toeplitz: need gamma_0..gamma_p with p >= 1");
    for (double g : gamma)
        if (!std::isfinite(g)) throw NumericalError("solve_toeplitz: non-finite autocovariance");
    if (!(gamma[0] > 0.0)) throw SingularSystem("solve_toeplitz: gamma_0 must be positive");
    const std::size_t p = gamma.size() - 1;
    const double floor = 1e-12 * gamma[0];
    std::vector<double> a(p, 0.0), prev(p, 0.0);
    double err = gamma[0];
    for (std::size_t k = 0; k < p; ++k) {
        // err is det(R_{k+1}) / det(R_k); the final one may vanish for a perfectly predictable process.
        if (!(err > floor)) throw SingularSystem("solve_toeplitz: Toeplitz system is singular");
        double acc = gamma[k + 1];
        for (std::size_t j = 0; j < k; ++j) acc -= a[j] * gamma[k - j];
        const double refl = acc / err;
        prev = a;
        a[k] = refl;
        for (std::size_t j = 0; j < k; ++j) a[j] = prev[j] - refl * prev[k - 1 - j];
        err *= (1.0 - refl * refl);
    }
    return a;
}

/// Orthonormal basis of the column space of a (thin Householder Q).
inline Matrix orthonormalize(const Matrix& a) {
    Eigen::HouseholderQR<Matrix> qr(a);
    Matrix q = qr.householderQ() * Matrix::Identity(a.rows(), a.cols());
    return q;
}

}  // namespace bht::linalg
