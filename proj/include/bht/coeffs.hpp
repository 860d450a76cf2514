// SPDX-License-Identifier: MIT
#pragma once

#include "bht/error.hpp"
#include "bht/linalg.hpp"
#include "bht/tensor.hpp"

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace bht::coeffs {

/// AR coefficients alpha_1..alpha_p and MA coefficients beta_1..beta_q of
///   G_t = sum_i alpha_i G_{t-i} - sum_i beta_i E_{t-i} + E_t.
struct ArimaCoefficients {
    std::vector<double> alpha;
    std::vector<double> beta;
    bool ar_fallback = false;  ///< Yule-Walker system was singular; alpha = (1, 0, ..., 0)
    bool ma_fallback = false;  ///< residuals degenerate; beta = 1e-3 each
};

inline constexpr double kMaFallback = 1e-3;

inline DenseTensor sequence_mean(std::span<const DenseTensor> g) {
    if (g.empty()) throw ConfigError("mean of an empty sequence");
    std::vector<double> acc(g.front().size(), 0.0);
    for (const auto& x : g) {
        if (x.shape() != g.front().shape()) throw ShapeError("sequence slices differ in shape");
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += x[i];
    }
    const double inv = 1.0 / static_cast<double>(g.size());
    for (double& v : acc) v *= inv;
    return DenseTensor(g.front().shape(), std::move(acc));
}

namespace detail {

inline double lagged_inner(std::span<const DenseTensor> g, const DenseTensor& mean, std::size_t lag) {
    double acc = 0.0;
    const std::size_t n = mean.size();
    for (std::size_t t = 0; t + lag < g.size(); ++t)
        for (std::size_t i = 0; i < n; ++i) acc += (g[t][i] - mean[i]) * (g[t + lag][i] - mean[i]);
    return acc / static_cast<double>(g.size() - lag);
}

}  // namespace detail

/// gamma_lag = 1/(L - lag) sum_t <g_t - mean, g_{t+lag} - mean>.
inline double autocovariance(std::span<const DenseTensor> g, std::size_t lag) {
    if (lag >= g.size())
        throw ConfigError("autocovariance lag " + std::to_string(lag) + " needs more than " + std::to_string(lag) +
                          " slices");
    return detail::lagged_inner(g, sequence_mean(g), lag);
}

inline std::vector<double> autocovariances(std::span<const DenseTensor> g, std::size_t max_lag) {
    if (max_lag >= g.size()) throw ConfigError("autocovariances: sequence too short for lag " + std::to_string(max_lag));
    const DenseTensor mean = sequence_mean(g);
    std::vector<double> out(max_lag + 1);
    for (std::size_t k = 0; k <= max_lag; ++k) out[k] = detail::lagged_inner(g, mean, k);
    return out;
}

struct ArEstimate {
    std::vector<double> alpha;
    bool fallback = false;
};

/// Yule-Walker on inner-product autocovariances of the slices.
inline ArEstimate estimate_ar(std::span<const DenseTensor> g, std::size_t p) {
    if (p == 0) return {};
    if (g.size() <= p)
        throw ConfigError("AR order " + std::to_string(p) + " needs more than " + std::to_string(p) + " slices");
    const std::vector<double> gamma = autocovariances(g, p);
    try {
        return {linalg::solve_toeplitz(gamma), false};
    } catch (const SingularSystem&) {
        std::vector<double> walk(p, 0.0);
        walk[0] = 1.0;
        return {std::move(walk), true};
    }
}

/// r_t = g_t - sum_i alpha_i g_{t-i}, for t = p..L-1.
inline TensorSeries ar_residuals(std::span<const DenseTensor> g, std::span<const double> alpha) {
    const std::size_t p = alpha.size();
    TensorSeries r;
    if (g.size() <= p) return r;
    r.reserve(g.size() - p);
    for (std::size_t t = p; t < g.size(); ++t) {
        std::vector<double> v(g[t].values().begin(), g[t].values().end());
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t k = 0; k < v.size(); ++k) v[k] -= alpha[i] * g[t - 1 - i][k];
        r.emplace_back(g[t].shape(), std::move(v));
    }
    return r;
}

struct MaEstimate {
    std::vector<double> beta;
    bool fallback = false;
};

/// Regresses each residual r_t on r_{t-1}..r_{t-q} over all entries jointly.
/// The normal equations only involve inner products <r_{t-i}, r_{t-j}>.
inline MaEstimate estimate_ma(std::span<const DenseTensor> g, std::span<const double> alpha, std::size_t q) {
    if (q == 0) return {};
    const std::size_t p = alpha.size();
    if (g.size() <= p + q)
        throw ConfigError("ARMA(" + std::to_string(p) + "," + std::to_string(q) + ") needs more than " +
                          std::to_string(p + q) + " slices");
    const TensorSeries r = ar_residuals(g, alpha);
    double energy = 0.0, scale = 0.0;
    for (const auto& x : r) energy += inner(x, x);
    for (const auto& x : g) scale += inner(x, x);
    if (!std::isfinite(energy)) throw NumericalError("estimate_ma: non-finite residuals");
    if (energy <= 1e-24 * std::max(1.0, scale)) return {std::vector<double>(q, kMaFallback), true};

    Matrix gram = Matrix::Zero(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(q));
    Matrix rhs = Matrix::Zero(static_cast<Eigen::Index>(q), 1);
    for (std::size_t t = q; t < r.size(); ++t)
        for (std::size_t i = 0; i < q; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            rhs(ii, 0) += inner(r[t - 1 - i], r[t]);
            for (std::size_t j = 0; j < q; ++j) gram(ii, static_cast<Eigen::Index>(j)) += inner(r[t - 1 - i], r[t - 1 - j]);
        }
    if (gram.trace() <= 1e-24 * std::max(1.0, scale)) return {std::vector<double>(q, kMaFallback), true};
    const Matrix b = linalg::lstsq(gram, rhs);
    std::vector<double> beta(q);
    for (std::size_t i = 0; i < q; ++i) beta[i] = b(static_cast<Eigen::Index>(i), 0);
    return {std::move(beta), false};
}

inline ArimaCoefficients estimate(std::span<const DenseTensor> g, std::size_t p, std::size_t q) {
    ArimaCoefficients c;
    auto ar = estimate_ar(g, p);
    c.alpha = std::move(ar.alpha);
    c.ar_fallback = ar.fallback;
    auto ma = estimate_ma(g, c.alpha, q);
    c.beta = std::move(ma.beta);
    c.ma_fallback = ma.fallback;
    return c;
}

/// True when all roots of 1 - sum alpha_i z^i lie outside the unit circle
/// (step-down recursion: every reflection coefficient strictly inside (-1, 1)).
inline bool ar_is_stationary(std::span<const double> alpha) {
    std::vector<double> a(alpha.begin(), alpha.end());
    for (std::size_t k = a.size(); k-- > 0;) {
        const double refl = a[k];
        if (!(std::abs(refl) < 1.0)) return false;
        const double den = 1.0 - refl * refl;
        std::vector<double> lower(k);
        for (std::size_t j = 0; j < k; ++j) lower[j] = (a[j] + refl * a[k - 1 - j]) / den;
        a = std::move(lower);
    }
    return true;
}

}  // namespace bht::coeffs
