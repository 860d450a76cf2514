// SPDX-License-Identifier: MIT
#pragma once

#include "bht/error.hpp"
#include "bht/tensor.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace bht::mdt {

/// Implicit 0/1 duplication matrix S of shape tau*(len-tau+1) x len.
/// Row i + tau*j holds a single 1 in column i + j, so folding S x to
/// tau x (len-tau+1) gives the Hankel matrix of x.
struct DuplicationMatrix {
    std::size_t tau;
    std::size_t len;

    DuplicationMatrix(std::size_t tau_, std::size_t len_) : tau(tau_), len(len_) {
        if (tau < 1 || tau > len)
            throw ConfigError("delay window " + std::to_string(tau) + " outside [1, " + std::to_string(len) + "]");
    }

    std::size_t windows() const { return len - tau + 1; }
    std::size_t rows() const { return tau * windows(); }
    std::size_t column_of(std::size_t row) const { return row % tau + row / tau; }

    /// Number of windows covering position t: the diagonal of S^T S.
    std::size_t coverage(std::size_t t) const {
        const std::size_t lo = t + 1 > tau ? t + 1 - tau : 0;
        const std::size_t hi = std::min(t, windows() - 1);
        return hi - lo + 1;
    }

    Matrix dense() const {
        Matrix s = Matrix::Zero(static_cast<Eigen::Index>(rows()), static_cast<Eigen::Index>(len));
        for (std::size_t r = 0; r < rows(); ++r) s(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(column_of(r))) = 1.0;
        return s;
    }
};

/// Delay-embeds one mode: extent I at `mode` becomes (tau, I - tau + 1).
inline DenseTensor hankelize_mode(const DenseTensor& x, std::size_t mode, std::size_t tau) {
    auto [left, len, right] = detail::split_at(x.shape(), mode);
    const DuplicationMatrix dup(tau, len);
    const std::size_t win = dup.windows();
    Shape out_shape;
    out_shape.reserve(x.order() + 1);
    out_shape.insert(out_shape.end(), x.shape().begin(), x.shape().begin() + static_cast<std::ptrdiff_t>(mode));
    out_shape.push_back(tau);
    out_shape.push_back(win);
    out_shape.insert(out_shape.end(), x.shape().begin() + static_cast<std::ptrdiff_t>(mode) + 1, x.shape().end());

    std::vector<double> out(left * tau * win * right);
    const double* src = x.data();
    for (std::size_t r = 0; r < right; ++r)
        for (std::size_t j = 0; j < win; ++j)
            for (std::size_t i = 0; i < tau; ++i) {
                const double* from = src + left * ((i + j) + len * r);
                double* to = out.data() + left * (i + tau * (j + win * r));
                std::copy(from, from + left, to);
            }
    return DenseTensor(std::move(out_shape), std::move(out));
}

/// Inverse of hankelize_mode: modes (mode, mode+1) = (tau, W) collapse to W + tau - 1,
/// averaging every entry that maps to the same source index (pinv of S).
inline DenseTensor dehankelize_mode(const DenseTensor& h, std::size_t mode) {
    if (mode + 1 >= h.order()) throw ShapeError("dehankelize_mode: need two modes starting at " + std::to_string(mode));
    const std::size_t tau = h.extent(mode);
    const std::size_t win = h.extent(mode + 1);
    const std::size_t len = win + tau - 1;
    std::size_t left = 1, right = 1;
    for (std::size_t k = 0; k < mode; ++k) left *= h.extent(k);
    for (std::size_t k = mode + 2; k < h.order(); ++k) right *= h.extent(k);
    const DuplicationMatrix dup(tau, len);

    Shape out_shape;
    out_shape.insert(out_shape.end(), h.shape().begin(), h.shape().begin() + static_cast<std::ptrdiff_t>(mode));
    out_shape.push_back(len);
    out_shape.insert(out_shape.end(), h.shape().begin() + static_cast<std::ptrdiff_t>(mode) + 2, h.shape().end());

    std::vector<double> out(left * len * right, 0.0);
    const double* src = h.data();
    for (std::size_t r = 0; r < right; ++r)
        for (std::size_t j = 0; j < win; ++j)
            for (std::size_t i = 0; i < tau; ++i) {
                const double* from = src + left * (i + tau * (j + win * r));
                double* to = out.data() + left * ((i + j) + len * r);
                for (std::size_t l = 0; l < left; ++l) to[l] += from[l];
            }
    for (std::size_t r = 0; r < right; ++r)
        for (std::size_t t = 0; t < len; ++t) {
            const double inv = 1.0 / static_cast<double>(dup.coverage(t));
            double* to = out.data() + left * (t + len * r);
            for (std::size_t l = 0; l < left; ++l) to[l] *= inv;
        }
    return DenseTensor(std::move(out_shape), std::move(out));
}

/// Delay embedding along the last (time) mode only:
/// I_1 x ... x I_N x T  ->  I_1 x ... x I_N x tau x (T - tau + 1).
inline DenseTensor mdt_temporal(const DenseTensor& x, std::size_t tau) {
    return hankelize_mode(x, x.order() - 1, tau);
}

inline DenseTensor inverse_mdt_temporal(const DenseTensor& h, std::size_t tau) {
    if (h.order() < 2 || h.extent(h.order() - 2) != tau)
        throw ShapeError("inverse_mdt_temporal: tensor " + shape_string(h.shape()) +
                         " does not carry a delay mode of length " + std::to_string(tau));
    return dehankelize_mode(h, h.order() - 2);
}

/// Delay embedding along every mode; the order doubles and mode n becomes
/// the pair (tau_n, I_n - tau_n + 1).
inline DenseTensor mdt_general(const DenseTensor& x, std::span<const std::size_t> taus) {
    if (taus.size() != x.order())
        throw ConfigError("mdt_general: need one window per mode (" + std::to_string(x.order()) + "), got " +
                          std::to_string(taus.size()));
    for (std::size_t n = 0; n < taus.size(); ++n)
        if (taus[n] < 1 || taus[n] > x.extent(n))
            throw ConfigError("mdt_general: window " + std::to_string(taus[n]) + " out of range for mode " +
                              std::to_string(n));
    DenseTensor out = x;
    // Work from the last mode down so earlier mode positions stay put.
    for (std::size_t n = taus.size(); n-- > 0;) out = hankelize_mode(out, n, taus[n]);
    return out;
}

inline DenseTensor inverse_mdt_general(const DenseTensor& h) {
    if (h.order() % 2 != 0) throw ShapeError("inverse_mdt_general: order must be even");
    DenseTensor out = h;
    for (std::size_t n = 0; n < h.order() / 2; ++n) out = dehankelize_mode(out, n);
    return out;
}

}  // namespace bht::mdt
