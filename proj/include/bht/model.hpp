// SPDX-License-Identifier: MIT
#pragma once

#include "bht/coeffs.hpp"
#include "bht/diff.hpp"
#include "bht/error.hpp"
#include "bht/linalg.hpp"
#include "bht/mdt.hpp"
#include "bht/tensor.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace bht {

enum class OrthoMode { full, relaxed };

inline const char* to_string(OrthoMode m) { return m == OrthoMode::full ? "full" : "relaxed"; }

inline OrthoMode parse_ortho_mode(const std::string& s) {
    if (s == "full") return OrthoMode::full;
    if (s == "relaxed") return OrthoMode::relaxed;
    throw ConfigError("orthogonality mode must be 'full' or 'relaxed', got '" + s + "'");
}

struct ModelConfig {
    std::size_t p = 2;
    std::size_t d = 1;
    std::size_t q = 1;
    std::size_t tau = 3;
    std::vector<std::size_t> ranks;  ///< one per embedded mode; empty selects the defaults
    std::size_t max_iter = 10;
    double tol = 1e-5;
    OrthoMode ortho = OrthoMode::full;
    std::uint64_t seed = 0;

    std::size_t s() const { return p + d + q; }

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Shape of one embedded slice: the series extents followed by the delay window.
inline Shape embedded_slice_shape(const Shape& series_shape, std::size_t tau) {
    Shape j = series_shape;
    j.push_back(tau);
    return j;
}

/// Default Tucker ranks: ceil(0.8 J_m) on series modes, tau on the delay mode.
inline std::vector<std::size_t> default_ranks(const Shape& embedded) {
    std::vector<std::size_t> r(embedded.size());
    for (std::size_t m = 0; m + 1 < embedded.size(); ++m)
        r[m] = std::min(embedded[m], static_cast<std::size_t>(std::ceil(0.8 * static_cast<double>(embedded[m]))));
    r.back() = embedded.back();
    return r;
}

namespace detail {

// Inputs of order 1 are a single series; give them a leading singleton mode.
inline DenseTensor as_panel(const DenseTensor& x) {
    if (x.order() >= 2) return x;
    return reshape(x, Shape{1, x.extent(0)});
}

}  // namespace detail

/// Checks cfg against an input of shape I_1 x ... x I_N x T and fills in default ranks.
inline ModelConfig resolve_config(ModelConfig cfg, const Shape& input_shape) {
    Shape shape = input_shape;
    if (shape.size() == 1) shape.insert(shape.begin(), 1);
    if (shape.size() < 2) throw ConfigError("input must have a time mode");
    const std::size_t T = shape.back();
    if (cfg.tau < 1 || cfg.tau > T)
        throw ConfigError("tau = " + std::to_string(cfg.tau) + " must lie in [1, T = " + std::to_string(T) + "]");
    if (cfg.max_iter < 1) throw ConfigError("max_iter must be at least 1");
    if (!(cfg.tol > 0.0) || !std::isfinite(cfg.tol)) throw ConfigError("tol must be a positive finite number");
    const std::size_t t_hat = T - cfg.tau + 1;
    if (t_hat < cfg.d + 1 || t_hat - cfg.d <= cfg.s())
        throw ConfigError("series too short: embedded length " + std::to_string(t_hat) + " minus d = " +
                          std::to_string(cfg.d) + " must exceed p + d + q = " + std::to_string(cfg.s()));
    const Shape embedded = embedded_slice_shape(Shape(shape.begin(), shape.end() - 1), cfg.tau);
    if (cfg.ranks.empty()) cfg.ranks = default_ranks(embedded);
    if (cfg.ranks.size() != embedded.size())
        throw ConfigError("need " + std::to_string(embedded.size()) + " Tucker ranks (embedded slice " +
                          shape_string(embedded) + "), got " + std::to_string(cfg.ranks.size()));
    for (std::size_t m = 0; m < embedded.size(); ++m)
        if (cfg.ranks[m] < 1 || cfg.ranks[m] > embedded[m])
            throw ConfigError("rank " + std::to_string(cfg.ranks[m]) + " for mode " + std::to_string(m) +
                              " must lie in [1, " + std::to_string(embedded[m]) + "]");
    return cfg;
}

struct FitDiagnostics {
    bool ar_fallback = false;
    bool ma_fallback = false;
    bool ridge_used = false;
    bool error_update_skipped = false;
};

struct FittedModel {
    ModelConfig config;         ///< ranks resolved
    Shape series_shape;         ///< I_1..I_N
    Shape embedded_shape;       ///< J_1..J_M (J_M = tau)
    std::size_t length = 0;     ///< T
    std::vector<Matrix> factors;
    TensorSeries cores;         ///< projected order-d differenced cores, length T_hat - d
    TensorSeries errors;        ///< E_1..E_q, one per MA lag
    coeffs::ArimaCoefficients coeffs;
    diff::DifferencedSeries diff_state;  ///< of the embedded slices
    TensorSeries embedded;      ///< embedded slices X_1..X_{T_hat}
    std::vector<double> trace;  ///< relative factor change per iteration
    bool converged = false;
    std::size_t iterations = 0;
    FitDiagnostics diagnostics;

    std::size_t t_hat() const { return embedded.size(); }
};

struct ForecastResult {
    TensorSeries forecasts;           ///< original-space slices, one per step
    TensorSeries embedded_forecasts;  ///< embedded slices X_{T_hat+h}
    TensorSeries core_forecasts;      ///< predicted differenced cores
    bool converged = false;
    std::size_t iterations_used = 0;
};

// ---------------------------------------------------------------------------
// Closed-form updates

/// Core update: G_t = 1/2 (projection + sum_i alpha_i G_{t-i} - sum_i beta_i E_i),
/// evaluated on mode-`mode` unfoldings and folded back. lagged[i] is G_{t-1-i}.
inline DenseTensor update_core(const DenseTensor& projection, std::span<const DenseTensor> lagged,
                               std::span<const DenseTensor> errors, std::span<const double> alpha,
                               std::span<const double> beta, std::size_t mode = 0) {
    if (lagged.size() < alpha.size() || errors.size() < beta.size())
        throw ShapeError("update_core: need " + std::to_string(alpha.size()) + " lagged cores and " +
                         std::to_string(beta.size()) + " error tensors");
    Matrix acc = unfold(projection, mode);
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        detail::require_same_shape(projection, lagged[i], "update_core");
        acc += alpha[i] * unfold(lagged[i], mode);
    }
    for (std::size_t i = 0; i < beta.size(); ++i) {
        detail::require_same_shape(projection, errors[i], "update_core");
        acc -= beta[i] * unfold(errors[i], mode);
    }
    acc *= 0.5;
    return fold(acc, mode, projection.shape());
}

namespace detail {

// X^(m) times the Kronecker chain of the other modes' matrices, formed implicitly:
// unfold_m(X x_k C_k for k != m).
inline Matrix contract_others(const DenseTensor& x, std::span<const Matrix> others, std::size_t mode) {
    DenseTensor y = x;
    for (std::size_t k = 0; k < others.size(); ++k)
        if (k != mode) y = mode_product(y, others[k], k);
    return unfold(y, mode);
}

inline std::vector<Matrix> transposed(std::span<const Matrix> mats) {
    std::vector<Matrix> out;
    out.reserve(mats.size());
    for (const auto& m : mats) out.emplace_back(m.transpose());
    return out;
}

}  // namespace detail

/// Orthonormal factor update: procrustes(sum_t X_t^(m) U^(-m)^T G_t^(m)^T).
inline Matrix update_factor_full(std::span<const DenseTensor> xs, std::span<const DenseTensor> cores,
                                 std::span<const Matrix> factors, std::size_t mode) {
    if (xs.size() != cores.size() || xs.empty()) throw ShapeError("update_factor_full: need aligned, non-empty sequences");
    if (mode >= factors.size()) throw ShapeError("update_factor_full: mode out of range");
    const std::vector<Matrix> proj = detail::transposed(factors);
    Matrix acc = Matrix::Zero(factors[mode].rows(), factors[mode].cols());
    for (std::size_t t = 0; t < xs.size(); ++t)
        acc.noalias() += detail::contract_others(xs[t], proj, mode) * unfold(cores[t], mode).transpose();
    return linalg::procrustes(acc);
}

struct RelaxedUpdate {
    Matrix factor;
    bool ridge_used = false;
};

/// Unconstrained last-mode factor:
/// U^(M) = (sum_t A_t A_t^T)^-1 sum_t A_t G_t^(M)^T with A_t = X_t^(M) pinv(U^(-M)).
/// pinv of the Kronecker chain is the chain of per-factor pseudo-inverses.
inline RelaxedUpdate update_factor_relaxed(std::span<const DenseTensor> xs, std::span<const DenseTensor> cores,
                                           std::span<const Matrix> factors) {
    if (factors.size() < 2) throw ConfigError("relaxed orthogonality needs at least two embedded modes");
    if (xs.size() != cores.size() || xs.empty()) throw ShapeError("update_factor_relaxed: need aligned, non-empty sequences");
    const std::size_t last = factors.size() - 1;
    std::vector<Matrix> pinvs;
    pinvs.reserve(factors.size());
    for (const auto& u : factors) pinvs.push_back(linalg::pinv(u));

    const Eigen::Index rows = factors[last].rows();
    Matrix gram = Matrix::Zero(rows, rows);
    Matrix rhs = Matrix::Zero(rows, factors[last].cols());
    for (std::size_t t = 0; t < xs.size(); ++t) {
        const Matrix a = detail::contract_others(xs[t], pinvs, last);
        gram.noalias() += a * a.transpose();
        rhs.noalias() += a * unfold(cores[t], last).transpose();
    }
    const linalg::SvdResult sv = linalg::svd(gram);
    const double smax = sv.s.size() ? sv.s(0) : 0.0;
    const double smin = sv.s.size() ? sv.s(sv.s.size() - 1) : 0.0;
    if (smax > 0.0 && smin > linalg::kRankCutoff * smax) return {gram.partialPivLu().solve(rhs), false};

    const double lambda = 1e-8 * gram.trace() / static_cast<double>(rows);
    if (!(lambda > 0.0)) return {factors[last], true};  // all-zero data: nothing to fit
    gram.diagonal().array() += lambda;
    return {gram.partialPivLu().solve(rhs), true};
}

struct ErrorUpdate {
    DenseTensor error;
    bool skipped = false;
};

/// MA error update for lag `lag` (zero-based), with cores the full differenced core
/// sequence (index 0 is t = d + 1):
/// E_i = sum_{t=s+1}^{T_hat} (G_t - sum_j alpha_j G_{t-j} + sum_{j != i} beta_j E_j) / ((s + 1 - T_hat) beta_i).
inline ErrorUpdate update_error(std::span<const DenseTensor> cores, std::span<const double> alpha,
                                std::span<const double> beta, std::span<const DenseTensor> errors, std::size_t lag,
                                std::size_t d) {
    const std::size_t p = alpha.size(), q = beta.size();
    if (lag >= q || errors.size() != q) throw ShapeError("update_error: lag index out of range");
    const std::size_t first = p + q;
    if (cores.size() <= first) throw ConfigError("update_error: core sequence too short");
    const double t_hat = static_cast<double>(cores.size() + d);
    const double s = static_cast<double>(p + d + q);
    const double den = (s + 1.0 - t_hat) * beta[lag];
    if (std::abs(beta[lag]) <= 1e-8 || den == 0.0) return {errors[lag], true};

    const Shape& shape = cores.front().shape();
    std::vector<double> num(shape_size(shape), 0.0);
    for (std::size_t t = first; t < cores.size(); ++t) {
        for (std::size_t k = 0; k < num.size(); ++k) num[k] += cores[t][k];
        for (std::size_t j = 0; j < p; ++j)
            for (std::size_t k = 0; k < num.size(); ++k) num[k] -= alpha[j] * cores[t - 1 - j][k];
        for (std::size_t j = 0; j < q; ++j) {
            if (j == lag) continue;
            for (std::size_t k = 0; k < num.size(); ++k) num[k] += beta[j] * errors[j][k];
        }
    }
    for (double& v : num) v /= den;
    return {DenseTensor(shape, std::move(num)), false};
}

/// Relative factor change sum_m ||U_new - U_old||^2 / sum_m ||U_new||^2.
inline double factor_change(std::span<const Matrix> now, std::span<const Matrix> before) {
    double num = 0.0, den = 0.0;
    for (std::size_t m = 0; m < now.size(); ++m) {
        num += (now[m] - before[m]).squaredNorm();
        den += now[m].squaredNorm();
    }
    return den > 0.0 ? num / den : 0.0;
}

inline TensorSeries project_all(std::span<const DenseTensor> xs, std::span<const Matrix> factors) {
    TensorSeries out;
    out.reserve(xs.size());
    for (const auto& x : xs) out.push_back(tucker_project(x, factors));
    return out;
}

// ---------------------------------------------------------------------------
// Fit and forecast

namespace detail {

inline Matrix random_orthonormal(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix g(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index j = 0; j < g.cols(); ++j)
        for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = normal(rng);
    return linalg::orthonormalize(g);
}

inline DenseTensor random_tensor(const Shape& shape, double scale, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> v(shape_size(shape));
    for (double& x : v) x = scale * normal(rng);
    return DenseTensor(shape, std::move(v));
}

inline void check_finite(const DenseTensor& x) {
    for (double v : x.values())
        if (!std::isfinite(v)) throw ConfigError("input contains non-finite values");
}

}  // namespace detail

/// Rebuilds the history-dependent state (embedding, differences, cores) of `model`
/// for a new series, keeping factors, coefficients and error tensors.
inline FittedModel with_history(const FittedModel& model, const DenseTensor& x_in) {
    const DenseTensor x = detail::as_panel(x_in);
    if (slice_shape(x) != model.series_shape)
        throw ShapeError("history has slice shape " + shape_string(slice_shape(x)) + ", model expects " +
                         shape_string(model.series_shape));
    resolve_config(model.config, x.shape());
    FittedModel out = model;
    out.length = time_length(x);
    out.embedded = split_last(mdt::mdt_temporal(x, model.config.tau));
    out.diff_state = diff::difference(out.embedded, model.config.d);
    out.cores = project_all(out.diff_state.slices, out.factors);
    return out;
}

/// Called after every outer iteration with the 1-based iteration count and the model so far
/// (factors, error tensors and trace are current; cores and coefficients are not final yet).
using IterationObserver = std::function<void(std::size_t, const FittedModel&)>;

/// Runs the alternating estimation on x (I_1 x ... x I_N x T).
inline FittedModel fit(const DenseTensor& x_in, const ModelConfig& cfg_in, const IterationObserver& observe = {}) {
    const DenseTensor x = detail::as_panel(x_in);
    detail::check_finite(x);
    const ModelConfig cfg = resolve_config(cfg_in, x.shape());

    FittedModel model;
    model.config = cfg;
    model.series_shape = slice_shape(x);
    model.embedded_shape = embedded_slice_shape(model.series_shape, cfg.tau);
    model.length = time_length(x);
    model.embedded = split_last(mdt::mdt_temporal(x, cfg.tau));
    model.diff_state = diff::difference(model.embedded, cfg.d);
    const TensorSeries& xs = model.diff_state.slices;
    const std::size_t M = model.embedded_shape.size();
    const std::size_t first = cfg.p + cfg.q;  // local index of t = s + 1
    const std::span<const DenseTensor> fitted_xs(xs.begin() + static_cast<std::ptrdiff_t>(first), xs.end());

    std::mt19937_64 rng(cfg.seed);
    for (std::size_t m = 0; m < M; ++m)
        model.factors.push_back(detail::random_orthonormal(model.embedded_shape[m], cfg.ranks[m], rng));
    const Shape core_shape(cfg.ranks.begin(), cfg.ranks.end());
    for (std::size_t i = 0; i < cfg.q; ++i) model.errors.push_back(detail::random_tensor(core_shape, 1e-2, rng));

    for (std::size_t k = 0; k < cfg.max_iter; ++k) {
        const std::vector<Matrix> before = model.factors;
        TensorSeries cores = project_all(xs, model.factors);
        const coeffs::ArimaCoefficients c = coeffs::estimate(cores, cfg.p, cfg.q);
        model.diagnostics.ar_fallback |= c.ar_fallback;
        model.diagnostics.ma_fallback |= c.ma_fallback;

        for (std::size_t m = 0; m < M; ++m) {
            const TensorSeries projections = project_all(xs, model.factors);
            TensorSeries updated(projections.begin(), projections.end());
            for (std::size_t t = first; t < xs.size(); ++t) {
                TensorSeries lagged;
                for (std::size_t i = 0; i < cfg.p; ++i) lagged.push_back(cores[t - 1 - i]);
                updated[t] = update_core(projections[t], lagged, model.errors, c.alpha, c.beta, m);
            }
            cores = std::move(updated);
            const std::span<const DenseTensor> fitted_cores(cores.begin() + static_cast<std::ptrdiff_t>(first),
                                                            cores.end());

            if (m == M - 1 && cfg.ortho == OrthoMode::relaxed) {
                RelaxedUpdate r = update_factor_relaxed(fitted_xs, fitted_cores, model.factors);
                model.diagnostics.ridge_used |= r.ridge_used;
                model.factors[m] = std::move(r.factor);
            } else {
                model.factors[m] = update_factor_full(fitted_xs, fitted_cores, model.factors, m);
            }

            for (std::size_t i = 0; i < cfg.q; ++i) {
                ErrorUpdate e = update_error(cores, c.alpha, c.beta, model.errors, i, cfg.d);
                model.diagnostics.error_update_skipped |= e.skipped;
                model.errors[i] = std::move(e.error);
            }
        }

        for (const auto& u : model.factors)
            if (!u.allFinite())
                throw NumericalError("factor update produced non-finite values at iteration " + std::to_string(k + 1));
        const double change = factor_change(model.factors, before);
        model.trace.push_back(change);
        model.iterations = k + 1;
        if (observe) observe(model.iterations, model);
        if (change < cfg.tol) {
            model.converged = true;
            break;
        }
    }

    model.cores = project_all(xs, model.factors);
    model.coeffs = coeffs::estimate(model.cores, cfg.p, cfg.q);
    return model;
}

/// Factors for mapping cores back to the embedded space. Cores are always analysis
/// projections X x_m U_m^T; an unconstrained last factor is inverted through pinv(U_M)^T,
/// which equals U_M whenever it is orthonormal.
inline std::vector<Matrix> synthesis_factors(std::span<const Matrix> factors, OrthoMode mode) {
    std::vector<Matrix> out(factors.begin(), factors.end());
    if (mode == OrthoMode::relaxed && !out.empty()) out.back() = linalg::pinv(out.back()).transpose();
    return out;
}

inline DenseTensor reconstruct(const DenseTensor& core, const FittedModel& model) {
    return tucker_compose(core, synthesis_factors(model.factors, model.config.ortho));
}

/// Next differenced core: sum_i alpha_i G_{L+1-i} - sum_i beta_i E_i.
inline DenseTensor predict_core(std::span<const DenseTensor> cores, const coeffs::ArimaCoefficients& c,
                                std::span<const DenseTensor> errors) {
    if (cores.size() < c.alpha.size()) throw ConfigError("predict_core: history shorter than AR order");
    const Shape& shape = cores.back().shape();
    std::vector<double> out(shape_size(shape), 0.0);
    for (std::size_t i = 0; i < c.alpha.size(); ++i) {
        const DenseTensor& g = cores[cores.size() - 1 - i];
        for (std::size_t k = 0; k < out.size(); ++k) out[k] += c.alpha[i] * g[k];
    }
    for (std::size_t i = 0; i < c.beta.size(); ++i)
        for (std::size_t k = 0; k < out.size(); ++k) out[k] -= c.beta[i] * errors[i][k];
    return DenseTensor(shape, std::move(out));
}

/// Recursive forecasting: each predicted core is composed back to the embedded space,
/// integrated, de-embedded, and its projection appended for the next step.
inline ForecastResult forecast(const FittedModel& model, std::size_t horizon) {
    if (horizon < 1) throw ConfigError("forecast horizon must be at least 1");
    ForecastResult out;
    out.converged = model.converged;
    out.iterations_used = model.iterations;
    TensorSeries cores = model.cores;
    diff::DifferencedSeries state = model.diff_state;
    const std::size_t tau = model.config.tau;
    const std::vector<Matrix> synth = synthesis_factors(model.factors, model.config.ortho);

    for (std::size_t h = 0; h < horizon; ++h) {
        const DenseTensor g_next = predict_core(cores, model.coeffs, model.errors);
        const DenseTensor dx = tucker_compose(g_next, synth);
        const DenseTensor x_next = diff::invert_last(state, dx);
        state = diff::extend(state, dx);

        // Only the newest window covers the final time index, so de-embedding it alone
        // yields the same last value as de-embedding the whole extended sequence.
        const DenseTensor window = mdt::inverse_mdt_temporal(stack_last(std::span(&x_next, 1)), tau);
        out.forecasts.push_back(split_last(window).back());
        out.embedded_forecasts.push_back(x_next);
        out.core_forecasts.push_back(g_next);
        cores.push_back(tucker_project(dx, model.factors));
    }
    return out;
}

}  // namespace bht
