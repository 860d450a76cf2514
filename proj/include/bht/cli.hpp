// SPDX-License-Identifier: MIT
#pragma once

#include "bht/coeffs.hpp"
#include "bht/error.hpp"
#include "bht/eval.hpp"
#include "bht/io.hpp"
#include "bht/model.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace bht::cli {

enum ExitCode : int { kSuccess = 0, kUsageError = 1, kNumericalFailure = 2 };

enum class Command { fit_forecast, backtest, synth };

struct RunSpec {
    Command command = Command::fit_forecast;
    std::filesystem::path input;
    io::DataFormat format = io::DataFormat::automatic;
    ModelConfig model;
    std::size_t horizon = 1;
    double train_fraction = 0.9;
    bool refit = true;
    bool timing = false;
    std::filesystem::path output;
    // synth
    std::string kind = "sinusoid-mixture";
    std::size_t series = 20;
    std::size_t length = 40;
    double noise = 0.05;
};

/// Model summary: resolved configuration, coefficients and the convergence trace.
inline std::string model_summary(const FittedModel& m) {
    auto num = [](double v) { return io::format_number(v); };
    std::string out = "model=bht-arima\n";
    eval::append_config(out, m.config);
    out += "series_shape=" + shape_string(m.series_shape) + "\n";
    out += "embedded_shape=" + shape_string(m.embedded_shape) + "\n";
    out += "length=" + std::to_string(m.length) + "\n";
    out += "alpha=" + eval::detail::join(m.coeffs.alpha, num) + "\n";
    out += "beta=" + eval::detail::join(m.coeffs.beta, num) + "\n";
    out += std::string("ar_stationary=") + (coeffs::ar_is_stationary(m.coeffs.alpha) ? "true" : "false") + "\n";
    out += std::string("converged=") + (m.converged ? "true" : "false") + "\n";
    out += "iterations=" + std::to_string(m.iterations) + "\n";
    out += "trace=" + eval::detail::join(m.trace, num) + "\n";
    out += std::string("ar_fallback=") + (m.diagnostics.ar_fallback ? "true" : "false") + "\n";
    out += std::string("ma_fallback=") + (m.diagnostics.ma_fallback ? "true" : "false") + "\n";
    out += std::string("ridge_used=") + (m.diagnostics.ridge_used ? "true" : "false") + "\n";
    out += std::string("error_update_skipped=") + (m.diagnostics.error_update_skipped ? "true" : "false") + "\n";
    return out;
}

/// Forecast slices stacked along a trailing step mode. Matrix inputs give one CSV row per
/// series and one column per step; higher orders use the flat tensor format.
inline std::string forecast_text(const ForecastResult& r, bool as_csv) {
    const DenseTensor stacked = stack_last(r.forecasts);
    return as_csv ? io::csv_text(stacked, io::kReportDigits) : io::flat_tensor_text(stacked, io::kReportDigits);
}

namespace detail {

inline std::filesystem::path with_suffix(const std::filesystem::path& prefix, const std::string& suffix) {
    std::filesystem::path p = prefix;
    p += suffix;
    return p;
}

inline void execute(const RunSpec& spec, std::ostream& out) {
    switch (spec.command) {
        case Command::synth: {
            const DenseTensor x = eval::synth_dataset(eval::parse_synth_kind(spec.kind), spec.series, spec.length,
                                                      spec.noise, spec.model.seed);
            const bool csv = spec.output.extension() == ".csv" || spec.format == io::DataFormat::csv;
            io::write_file_atomic(spec.output, csv ? io::csv_text(x) : io::flat_tensor_text(x));
            out << "wrote " << spec.output.string() << " (" << shape_string(x.shape()) << ")\n";
            return;
        }
        case Command::fit_forecast: {
            const DenseTensor x = io::read_dataset(spec.input, spec.format);
            const ModelConfig cfg = resolve_config(spec.model, x.shape());
            if (spec.horizon < 1) throw ConfigError("horizon must be at least 1");
            const FittedModel m = fit(x, cfg);
            const ForecastResult r = forecast(m, spec.horizon);
            const bool csv = m.series_shape.size() == 1;
            const auto fpath = with_suffix(spec.output, csv ? ".forecast.csv" : ".forecast.tensor");
            const auto mpath = with_suffix(spec.output, ".model.txt");
            const std::string ftext = forecast_text(r, csv);
            const std::string mtext = model_summary(m);
            io::write_file_atomic(fpath, ftext);
            io::write_file_atomic(mpath, mtext);
            out << "wrote " << fpath.string() << " and " << mpath.string() << "\n";
            return;
        }
        case Command::backtest: {
            const DenseTensor x = io::read_dataset(spec.input, spec.format);
            eval::BacktestOptions opt;
            opt.train_fraction = spec.train_fraction;
            opt.horizon = spec.horizon;
            opt.refit = spec.refit;
            const eval::EvalReport rep = eval::rolling_backtest(x, spec.model, opt);
            io::write_file_atomic(spec.output, eval::serialize(rep, spec.timing));
            out << "wrote " << spec.output.string() << " (nrmse " << io::format_number(rep.nrmse) << ")\n";
            return;
        }
    }
}

inline void add_model_flags(CLI::App& app, RunSpec& spec, std::string& ortho, std::string& ranks) {
    app.add_option("--p", spec.model.p, "AR order")->capture_default_str();
    app.add_option("--d", spec.model.d, "differencing order")->capture_default_str();
    app.add_option("--q", spec.model.q, "MA order")->capture_default_str();
    app.add_option("--tau", spec.model.tau, "delay-embedding window")->capture_default_str();
    app.add_option("--ranks", ranks, "Tucker ranks, comma separated (default: ceil(0.8 J) per series mode, tau last)");
    app.add_option("--iters", spec.model.max_iter, "maximum outer iterations")->capture_default_str();
    app.add_option("--tol", spec.model.tol, "convergence threshold on relative factor change")->capture_default_str();
    app.add_option("--ortho", ortho, "orthogonality: full or relaxed")->capture_default_str();
    app.add_option("--seed", spec.model.seed, "random seed")->capture_default_str();
}

inline std::vector<std::size_t> parse_ranks(const std::string& s) {
    std::vector<std::size_t> out;
    for (const auto& tok : eval::detail::split_list(s)) {
        auto v = io::parse_number(tok);
        if (!v || *v < 1 || *v != static_cast<double>(static_cast<std::size_t>(*v)))
            throw ConfigError("bad rank '" + tok + "'");
        out.push_back(static_cast<std::size_t>(*v));
    }
    return out;
}

}  // namespace detail

/// Parses argv and runs one command. Returns the process exit status; diagnostics go to
/// `err` as a single line.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    RunSpec spec;
    std::string ortho = "full", ranks, format = "auto";

    CLI::App app{"bht: tensor ARIMA forecasting on delay-embedded Tucker cores"};
    app.require_subcommand(1);

    auto* ff = app.add_subcommand("fit-forecast", "fit on a dataset and forecast the next steps");
    ff->add_option("--input", spec.input, "dataset (CSV: series x time, or flat tensor)")->required();
    ff->add_option("--format", format, "auto, csv or flat")->capture_default_str();
    ff->add_option("--horizon", spec.horizon, "steps to forecast")->capture_default_str();
    ff->add_option("--output", spec.output, "output prefix")->required();
    detail::add_model_flags(*ff, spec, ortho, ranks);

    auto* bt = app.add_subcommand("backtest", "rolling-origin evaluation against the naive last-value baseline");
    bt->add_option("--input", spec.input, "dataset (CSV: series x time, or flat tensor)")->required();
    bt->add_option("--format", format, "auto, csv or flat")->capture_default_str();
    bt->add_option("--horizon", spec.horizon, "steps per origin (> 1: recursive multi-step)")->capture_default_str();
    bt->add_option("--train-fraction", spec.train_fraction, "leading fraction used for training")->capture_default_str();
    bt->add_flag("--no-refit", "one-step protocol: fit once instead of at every origin");
    bt->add_flag("--timing", spec.timing, "include runtime_seconds in the report");
    bt->add_option("--output", spec.output, "report path")->required();
    detail::add_model_flags(*bt, spec, ortho, ranks);

    auto* sy = app.add_subcommand("synth", "generate a synthetic series x time dataset");
    sy->add_option("--kind", spec.kind, "sinusoid-mixture, ar2-panel or random-walk")->capture_default_str();
    sy->add_option("--series", spec.series, "number of series")->capture_default_str();
    sy->add_option("--length", spec.length, "time steps")->capture_default_str();
    sy->add_option("--noise", spec.noise, "noise level")->capture_default_str();
    sy->add_option("--seed", spec.model.seed, "random seed")->capture_default_str();
    sy->add_option("--format", format, "auto, csv or flat")->capture_default_str();
    sy->add_option("--output", spec.output, "dataset path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kSuccess;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kSuccess;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        return kUsageError;
    }

    try {
        if (ff->parsed()) spec.command = Command::fit_forecast;
        else if (bt->parsed()) spec.command = Command::backtest;
        else spec.command = Command::synth;
        spec.refit = !(bt->count("--no-refit") > 0);
        spec.model.ortho = parse_ortho_mode(ortho);
        spec.format = io::parse_data_format(format);
        if (!ranks.empty()) spec.model.ranks = detail::parse_ranks(ranks);
        detail::execute(spec, out);
        return kSuccess;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return kNumericalFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kUsageError;
    }
}

}  // namespace bht::cli
