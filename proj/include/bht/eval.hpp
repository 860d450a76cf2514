// SPDX-License-Identifier: MIT
#pragma once

#include "bht/error.hpp"
#include "bht/io.hpp"
#include "bht/model.hpp"
#include "bht/tensor.hpp"

#include <chrono>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace bht::eval {

/// ||forecast - actual||_F / ||actual||_F.
inline double nrmse(const DenseTensor& forecast, const DenseTensor& actual) {
    if (forecast.shape() != actual.shape())
        throw ShapeError("nrmse: forecast " + shape_string(forecast.shape()) + " vs actual " +
                         shape_string(actual.shape()));
    const double den = frobenius_norm(actual);
    if (!(den > 0.0)) throw NumericalError("NRMSE undefined: actual values have zero norm");
    return frobenius_norm(forecast - actual) / den;
}

/// Repeats the final slice of x for every step.
inline TensorSeries naive_last_value(const DenseTensor& x, std::size_t horizon) {
    const DenseTensor last = split_last(x).back();
    return TensorSeries(horizon, last);
}

// ---------------------------------------------------------------------------
// Synthetic panels (series x time)

enum class SynthKind { sinusoid_mixture, ar2_panel, random_walk };

inline SynthKind parse_synth_kind(const std::string& s) {
    if (s == "sinusoid-mixture") return SynthKind::sinusoid_mixture;
    if (s == "ar2-panel") return SynthKind::ar2_panel;
    if (s == "random-walk") return SynthKind::random_walk;
    throw ConfigError("unknown dataset kind '" + s + "' (sinusoid-mixture, ar2-panel, random-walk)");
}

inline const char* to_string(SynthKind k) {
    switch (k) {
        case SynthKind::sinusoid_mixture: return "sinusoid-mixture";
        case SynthKind::ar2_panel: return "ar2-panel";
        case SynthKind::random_walk: return "random-walk";
    }
    return "?";
}

inline constexpr double kAr2Alpha1 = 0.5;
inline constexpr double kAr2Alpha2 = -0.3;

/// sinusoid-mixture: each series is a nonnegative mix of 3 shared sinusoids (periods in
///   [6, 20], random phases) plus Gaussian noise with sigma = noise * max |signal|.
/// ar2-panel: x_t = 0.5 x_{t-1} - 0.3 x_{t-2} + e_t per series, e_t ~ N(0, noise^2).
/// random-walk: cumulative sums of N(0, noise^2) steps.
inline DenseTensor synth_dataset(SynthKind kind, std::size_t n_series, std::size_t length, double noise,
                                 std::uint64_t seed) {
    if (n_series < 1 || length < 1) throw ConfigError("synth_dataset: series count and length must be positive");
    if (!(noise >= 0.0) || !std::isfinite(noise)) throw ConfigError("synth_dataset: noise must be nonnegative");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> data(n_series * length, 0.0);
    auto at = [&](std::size_t i, std::size_t t) -> double& { return data[i + n_series * t]; };

    switch (kind) {
        case SynthKind::sinusoid_mixture: {
            constexpr std::size_t kComponents = 3;
            double period[kComponents], phase[kComponents];
            for (std::size_t k = 0; k < kComponents; ++k) {
                period[k] = 6.0 + 14.0 * unit(rng);
                phase[k] = 2.0 * std::numbers::pi * unit(rng);
            }
            double peak = 0.0;
            for (std::size_t i = 0; i < n_series; ++i) {
                double w[kComponents];
                for (double& wk : w) wk = unit(rng);
                for (std::size_t t = 0; t < length; ++t) {
                    double v = 0.0;
                    for (std::size_t k = 0; k < kComponents; ++k)
                        v += w[k] * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / period[k] + phase[k]);
                    at(i, t) = v;
                    peak = std::max(peak, std::abs(v));
                }
            }
            const double sigma = noise * peak;
            if (sigma > 0.0)
                for (double& v : data) v += sigma * normal(rng);
            break;
        }
        case SynthKind::ar2_panel: {
            constexpr std::size_t kBurnIn = 100;
            for (std::size_t i = 0; i < n_series; ++i) {
                double x1 = 0.0, x2 = 0.0;
                for (std::size_t t = 0; t < kBurnIn + length; ++t) {
                    const double x = kAr2Alpha1 * x1 + kAr2Alpha2 * x2 + noise * normal(rng);
                    x2 = x1;
                    x1 = x;
                    if (t >= kBurnIn) at(i, t - kBurnIn) = x;
                }
            }
            break;
        }
        case SynthKind::random_walk: {
            for (std::size_t i = 0; i < n_series; ++i) {
                double x = 0.0;
                for (std::size_t t = 0; t < length; ++t) {
                    x += noise * normal(rng);
                    at(i, t) = x;
                }
            }
            break;
        }
    }
    return DenseTensor(Shape{n_series, length}, std::move(data));
}

// ---------------------------------------------------------------------------
// Backtesting

struct BacktestOptions {
    double train_fraction = 0.9;
    std::size_t horizon = 1;
    bool refit = true;  ///< one-step protocol only; multi-step never refits
};

struct EvalReport {
    double nrmse = 0.0;
    std::vector<double> per_step_nrmse;
    double baseline_nrmse = 0.0;  ///< naive last value under the same protocol
    std::vector<double> baseline_per_step_nrmse;
    double runtime_seconds = 0.0;
    ModelConfig config_echo;
    double converged_fraction = 0.0;
    double train_fraction = 0.0;
    std::size_t horizon = 1;
    std::size_t origins = 0;
    bool refit = true;
};

/// Anything that maps a history (time last) and a horizon to a ForecastResult.
template <class F>
concept Forecaster = requires(F f, const DenseTensor& history, std::size_t h) {
    { f(history, h) } -> std::convertible_to<ForecastResult>;
};

namespace detail {

struct ErrorAccumulator {
    std::vector<double> err, ref;
    explicit ErrorAccumulator(std::size_t h) : err(h, 0.0), ref(h, 0.0) {}

    void add(std::size_t step, const DenseTensor& forecast, const DenseTensor& actual) {
        const double e = frobenius_norm(forecast - actual);
        const double a = frobenius_norm(actual);
        err[step] += e * e;
        ref[step] += a * a;
    }

    static double ratio(double e, double r) {
        if (!(r > 0.0)) throw NumericalError("NRMSE undefined: actual values have zero norm");
        return std::sqrt(e / r);
    }

    std::vector<double> per_step() const {
        std::vector<double> out(err.size());
        for (std::size_t h = 0; h < err.size(); ++h) out[h] = ratio(err[h], ref[h]);
        return out;
    }

    double overall() const {
        double e = 0.0, r = 0.0;
        for (std::size_t h = 0; h < err.size(); ++h) {
            e += err[h];
            r += ref[h];
        }
        return ratio(e, r);
    }
};

}  // namespace detail

/// Rolling-origin evaluation. Origins run from floor(train_fraction * T) to T - horizon;
/// at each origin the forecaster sees every true slice before it and predicts `horizon`
/// steps. NRMSE pools squared errors over origins (per step) and over everything (overall).
template <Forecaster F>
EvalReport rolling_backtest(const DenseTensor& x_in, F&& forecaster, const BacktestOptions& opt) {
    const DenseTensor x = x_in.order() >= 2 ? x_in : reshape(x_in, Shape{1, x_in.extent(0)});
    if (!(opt.train_fraction > 0.0 && opt.train_fraction < 1.0))
        throw ConfigError("train_fraction must lie in (0, 1)");
    if (opt.horizon < 1) throw ConfigError("horizon must be at least 1");
    const std::size_t T = time_length(x);
    const auto train = static_cast<std::size_t>(std::floor(opt.train_fraction * static_cast<double>(T)));
    if (train < 1 || train + opt.horizon > T)
        throw ConfigError("insufficient data: " + std::to_string(T) + " steps cannot hold a training block of " +
                          std::to_string(train) + " and a horizon of " + std::to_string(opt.horizon));

    const auto start = std::chrono::steady_clock::now();
    const TensorSeries slices = split_last(x);
    detail::ErrorAccumulator model_acc(opt.horizon), naive_acc(opt.horizon);
    std::size_t origins = 0, converged = 0;
    for (std::size_t origin = train; origin + opt.horizon <= T; ++origin) {
        const DenseTensor history = leading(x, origin);
        const ForecastResult r = forecaster(history, opt.horizon);
        if (r.forecasts.size() < opt.horizon) throw ConfigError("forecaster returned too few steps");
        const TensorSeries naive = naive_last_value(history, opt.horizon);
        for (std::size_t h = 0; h < opt.horizon; ++h) {
            model_acc.add(h, r.forecasts[h], slices[origin + h]);
            naive_acc.add(h, naive[h], slices[origin + h]);
        }
        ++origins;
        converged += r.converged ? 1 : 0;
    }

    EvalReport rep;
    rep.per_step_nrmse = model_acc.per_step();
    rep.nrmse = model_acc.overall();
    rep.baseline_per_step_nrmse = naive_acc.per_step();
    rep.baseline_nrmse = naive_acc.overall();
    rep.origins = origins;
    rep.converged_fraction = static_cast<double>(converged) / static_cast<double>(origins);
    rep.train_fraction = opt.train_fraction;
    rep.horizon = opt.horizon;
    rep.refit = opt.refit;
    rep.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rep;
}

/// BHT-ARIMA forecaster for backtests. With refit off (always for multi-step), the model is
/// fit once on the first history it sees and re-conditioned on later histories.
class BhtForecaster {
public:
    BhtForecaster(ModelConfig cfg, bool refit) : cfg_(std::move(cfg)), refit_(refit) {}

    ForecastResult operator()(const DenseTensor& history, std::size_t horizon) {
        if (refit_ || !model_) {
            model_ = fit(history, cfg_);
            return forecast(*model_, horizon);
        }
        ForecastResult r = forecast(with_history(*model_, history), horizon);
        return r;
    }

private:
    ModelConfig cfg_;
    bool refit_;
    std::optional<FittedModel> model_;
};

inline EvalReport rolling_backtest(const DenseTensor& x, const ModelConfig& cfg, const BacktestOptions& opt) {
    const bool refit = opt.horizon == 1 && opt.refit;
    const DenseTensor panel = x.order() >= 2 ? x : reshape(x, Shape{1, x.extent(0)});
    const auto train = static_cast<std::size_t>(
        std::floor(opt.train_fraction * static_cast<double>(time_length(panel))));
    Shape train_shape = panel.shape();
    train_shape.back() = std::max<std::size_t>(train, 1);
    const ModelConfig resolved = resolve_config(cfg, train_shape);

    BacktestOptions eff = opt;
    eff.refit = refit;
    EvalReport rep = rolling_backtest(panel, BhtForecaster(resolved, refit), eff);
    rep.config_echo = resolved;
    return rep;
}

// ---------------------------------------------------------------------------
// Key-value serialization

namespace detail {

template <class T, class Fmt>
std::string join(const std::vector<T>& v, Fmt fmt) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += fmt(v[i]);
    }
    return out;
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    if (s.empty()) return out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(tok);
    return out;
}

}  // namespace detail

inline void append_config(std::string& out, const ModelConfig& c) {
    out += "p=" + std::to_string(c.p) + "\n";
    out += "d=" + std::to_string(c.d) + "\n";
    out += "q=" + std::to_string(c.q) + "\n";
    out += "tau=" + std::to_string(c.tau) + "\n";
    out += "ranks=" + detail::join(c.ranks, [](std::size_t r) { return std::to_string(r); }) + "\n";
    out += "max_iter=" + std::to_string(c.max_iter) + "\n";
    out += "tol=" + io::format_exact(c.tol) + "\n";
    out += std::string("ortho=") + to_string(c.ortho) + "\n";
    out += "seed=" + std::to_string(c.seed) + "\n";
}

/// One `key=value` per line. Runtime is left out unless asked for, so identical
/// runs give byte-identical reports.
inline std::string serialize(const EvalReport& r, bool include_runtime = false) {
    auto num = [](double v) { return io::format_number(v); };
    std::string out = "report=bht-arima-backtest\n";
    append_config(out, r.config_echo);
    out += "train_fraction=" + io::format_exact(r.train_fraction) + "\n";
    out += "horizon=" + std::to_string(r.horizon) + "\n";
    out += std::string("refit=") + (r.refit ? "true" : "false") + "\n";
    out += "origins=" + std::to_string(r.origins) + "\n";
    out += "nrmse=" + num(r.nrmse) + "\n";
    out += "per_step_nrmse=" + detail::join(r.per_step_nrmse, num) + "\n";
    out += "baseline_nrmse=" + num(r.baseline_nrmse) + "\n";
    out += "baseline_per_step_nrmse=" + detail::join(r.baseline_per_step_nrmse, num) + "\n";
    out += "converged_fraction=" + num(r.converged_fraction) + "\n";
    if (include_runtime) out += "runtime_seconds=" + num(r.runtime_seconds) + "\n";
    return out;
}

inline std::map<std::string, std::string> parse_key_values(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view t = io::trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string_view::npos) throw ParseError("line " + std::to_string(line_no) + ": expected key=value");
        kv[std::string(t.substr(0, eq))] = std::string(t.substr(eq + 1));
    }
    return kv;
}

namespace detail {

inline const std::string& need(const std::map<std::string, std::string>& kv, const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw ParseError("report is missing '" + key + "'");
    return it->second;
}

inline double to_double(const std::string& s) {
    auto v = io::parse_number(s);
    if (!v) throw ParseError("not a number: '" + s + "'");
    return *v;
}

inline std::size_t to_size(const std::string& s) {
    const double v = to_double(s);
    if (v < 0 || v != std::floor(v)) throw ParseError("not a count: '" + s + "'");
    return static_cast<std::size_t>(v);
}

}  // namespace detail

inline ModelConfig parse_config(const std::map<std::string, std::string>& kv) {
    using detail::need;
    ModelConfig c;
    c.p = detail::to_size(need(kv, "p"));
    c.d = detail::to_size(need(kv, "d"));
    c.q = detail::to_size(need(kv, "q"));
    c.tau = detail::to_size(need(kv, "tau"));
    c.ranks.clear();
    for (const auto& tok : detail::split_list(need(kv, "ranks"))) c.ranks.push_back(detail::to_size(tok));
    c.max_iter = detail::to_size(need(kv, "max_iter"));
    c.tol = detail::to_double(need(kv, "tol"));
    c.ortho = parse_ortho_mode(need(kv, "ortho"));
    c.seed = std::stoull(need(kv, "seed"));
    return c;
}

inline EvalReport parse_report(const std::string& text) {
    const auto kv = parse_key_values(text);
    using detail::need;
    EvalReport r;
    r.config_echo = parse_config(kv);
    r.train_fraction = detail::to_double(need(kv, "train_fraction"));
    r.horizon = detail::to_size(need(kv, "horizon"));
    r.refit = need(kv, "refit") == "true";
    r.origins = detail::to_size(need(kv, "origins"));
    r.nrmse = detail::to_double(need(kv, "nrmse"));
    for (const auto& tok : detail::split_list(need(kv, "per_step_nrmse"))) r.per_step_nrmse.push_back(detail::to_double(tok));
    r.baseline_nrmse = detail::to_double(need(kv, "baseline_nrmse"));
    for (const auto& tok : detail::split_list(need(kv, "baseline_per_step_nrmse")))
        r.baseline_per_step_nrmse.push_back(detail::to_double(tok));
    r.converged_fraction = detail::to_double(need(kv, "converged_fraction"));
    if (auto it = kv.find("runtime_seconds"); it != kv.end()) r.runtime_seconds = detail::to_double(it->second);
    return r;
}

}  // namespace bht::eval
