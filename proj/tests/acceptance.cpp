// SPDX-License-Identifier: MIT
// Acceptance checks. Prints one PASS/FAIL line per criterion; exits 1 if any fails.
#include "bht/bht.hpp"
#include "bht/cli.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace bht;

namespace {

// Pinned tolerances and limits.
constexpr double kRoundTripTol = 1e-12;
constexpr double kRoundTripSeconds = 5.0;
constexpr double kOrthoTol = 1e-8;
constexpr double kTraceFinal = 1e-3;
constexpr double kLosslessTol = 1e-6;
constexpr double kScalarOracleTol = 1e-6;
constexpr double kScalarOracleSeconds = 1.0;
constexpr double kSkillRatio = 0.8;
constexpr double kSkillSeconds = 30.0;
constexpr double kUpdateOracleTol = 1e-10;
constexpr double kYuleWalkerTol = 0.1;
constexpr double kHorizonSlack = 0.05;

// The synthetic benchmark shared by several criteria.
constexpr std::size_t kSeries = 20;
constexpr std::size_t kLength = 40;
constexpr double kNoise = 0.05;
constexpr std::uint64_t kDataSeed = 2024;

struct Outcome {
    bool pass;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v) { return io::format_number(v, 4); }

DenseTensor rand_tensor(const Shape& s, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    std::vector<double> v(shape_size(s));
    for (double& x : v) x = normal(rng);
    return DenseTensor(s, std::move(v));
}

Matrix rand_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    Matrix m(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
        for (Eigen::Index i = 0; i < r; ++i) m(i, j) = normal(rng);
    return m;
}

Matrix rand_orthonormal(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
    Eigen::HouseholderQR<Matrix> qr(rand_matrix(r, c, rng));
    return qr.householderQ() * Matrix::Identity(r, c);
}

std::vector<std::size_t> unravel(std::size_t flat, const Shape& s) {
    std::vector<std::size_t> idx(s.size());
    for (std::size_t k = 0; k < s.size(); ++k) {
        idx[k] = flat % s[k];
        flat /= s[k];
    }
    return idx;
}

double max_abs(const DenseTensor& a, const DenseTensor& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

double ortho_defect(const Matrix& u) { return (u.transpose() * u - Matrix::Identity(u.cols(), u.cols())).norm(); }

DenseTensor benchmark() {
    return eval::synth_dataset(eval::SynthKind::sinusoid_mixture, kSeries, kLength, kNoise, kDataSeed);
}

ModelConfig benchmark_config() {
    ModelConfig c;
    c.p = 2;
    c.d = 1;
    c.q = 1;
    c.tau = 3;
    c.ranks = {kSeries, 3};
    c.max_iter = 10;
    return c;
}

// ---------------------------------------------------------------------------

Outcome mdt_round_trip() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<std::size_t> order(2, 3), ext(1, 5), len(2, 12);
    double worst = 0.0;
    bool hankel = true;
    for (int c = 0; c < 200; ++c) {
        Shape s(order(rng) - 1);
        for (auto& e : s) e = ext(rng);
        s.push_back(len(rng));
        std::uniform_int_distribution<std::size_t> taud(1, s.back());
        const std::size_t tau = taud(rng);
        const DenseTensor x = rand_tensor(s, rng);
        const DenseTensor h = mdt::mdt_temporal(x, tau);
        worst = std::max(worst, max_abs(mdt::inverse_mdt_temporal(h, tau), x));
        const std::size_t a = h.order() - 2;
        for (std::size_t f = 0; f < h.size(); ++f) {
            auto idx = unravel(f, h.shape());
            if (idx[a] == 0 || idx[a + 1] + 1 >= h.extent(a + 1)) continue;
            auto other = idx;
            other[a] -= 1;
            other[a + 1] += 1;
            if (h[f] != h(std::span<const std::size_t>(other))) hankel = false;
        }
    }
    const double secs = seconds_since(t0);
    return {worst <= kRoundTripTol && hankel && secs < kRoundTripSeconds,
            "max error " + fmt(worst) + ", hankel " + (hankel ? "exact" : "violated") + ", " + fmt(secs) + " s"};
}

Outcome orthogonality() {
    double worst = 0.0;
    std::size_t iters = 0;
    fit(benchmark(), benchmark_config(), [&](std::size_t, const FittedModel& m) {
        ++iters;
        for (const auto& u : m.factors) worst = std::max(worst, ortho_defect(u));
    });
    return {iters > 0 && worst < kOrthoTol, "max defect " + fmt(worst) + " over " + std::to_string(iters) + " iterations"};
}

Outcome convergence() {
    const FittedModel m = fit(benchmark(), benchmark_config());
    const double first = m.trace.front(), last = m.trace.back();
    return {last < kTraceFinal && last < first, "trace first " + fmt(first) + ", final " + fmt(last) + " after " +
                                                    std::to_string(m.iterations) + " iterations"};
}

Outcome losslessness() {
    double worst = 0.0;
    auto check = [&](const DenseTensor& x, ModelConfig c) {
        c.ranks = embedded_slice_shape(slice_shape(x), c.tau);
        const FittedModel m = fit(x, c);
        for (std::size_t t = 0; t < m.cores.size(); ++t) {
            const DenseTensor& xt = m.diff_state.slices[t];
            const double n = frobenius_norm(xt);
            if (n == 0.0) continue;
            worst = std::max(worst, frobenius_norm(reconstruct(m.cores[t], m) - xt) / n);
        }
    };
    check(benchmark(), benchmark_config());
    std::mt19937_64 rng(4);
    ModelConfig c = benchmark_config();
    c.ortho = OrthoMode::relaxed;
    check(rand_tensor({3, 4, 25}, rng), c);
    return {worst < kLosslessTol, "max relative reconstruction error " + fmt(worst)};
}

Outcome scalar_oracle() {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> normal;
    std::vector<double> s{0.0};
    for (int t = 1; t < 100; ++t) s.push_back(0.6 * s.back() + normal(rng));

    const auto t0 = Clock::now();
    ModelConfig c;
    c.p = 1;
    c.d = 0;
    c.q = 0;
    c.tau = 1;
    c.ranks = {1, 1};
    const double got = forecast(fit(DenseTensor(Shape{s.size()}, s), c), 1).forecasts.front()[0];
    const double secs = seconds_since(t0);

    // Scalar Yule-Walker AR(1): alpha = gamma_1 / gamma_0 on the centred series.
    const double n = static_cast<double>(s.size());
    double mean = 0.0, g0 = 0.0, g1 = 0.0;
    for (double v : s) mean += v / n;
    for (std::size_t t = 0; t < s.size(); ++t) g0 += (s[t] - mean) * (s[t] - mean) / n;
    for (std::size_t t = 0; t + 1 < s.size(); ++t) g1 += (s[t] - mean) * (s[t + 1] - mean) / (n - 1.0);
    const double expected = g1 / g0 * s.back();
    const double rel = std::abs(got - expected) / std::abs(expected);
    return {rel < kScalarOracleTol && secs < kScalarOracleSeconds,
            "forecast " + fmt(got) + " vs " + fmt(expected) + " (rel " + fmt(rel) + "), " + fmt(secs) + " s"};
}

Outcome forecast_skill() {
    const auto t0 = Clock::now();
    const DenseTensor x = benchmark();
    bool pass = true;
    std::string detail;
    for (OrthoMode mode : {OrthoMode::full, OrthoMode::relaxed}) {
        ModelConfig c = benchmark_config();
        c.ranks.clear();
        c.ortho = mode;
        const eval::EvalReport r = eval::rolling_backtest(x, c, eval::BacktestOptions{});
        pass = pass && r.nrmse < kSkillRatio * r.baseline_nrmse;
        detail += std::string(to_string(mode)) + " " + fmt(r.nrmse) + " vs naive " + fmt(r.baseline_nrmse) + "; ";
    }
    const double secs = seconds_since(t0);
    return {pass && secs < kSkillSeconds, detail + fmt(secs) + " s"};
}

Outcome update_oracles() {
    std::mt19937_64 rng(7);
    const Shape s{3, 3, 3};
    std::vector<DenseTensor> g;
    for (int t = 0; t < 7; ++t) g.push_back(rand_tensor(s, rng));
    const std::vector<DenseTensor> e{rand_tensor(s, rng), rand_tensor(s, rng)};
    const std::vector<double> alpha{0.6, -0.2}, beta{0.35, -0.25};
    const std::size_t p = 2, q = 2, d = 1, L = g.size();

    // Core update, entry by entry.
    double core_err = 0.0;
    const DenseTensor proj = rand_tensor(s, rng);
    const std::vector<DenseTensor> lagged{g[6], g[5]};
    for (std::size_t mode = 0; mode < 3; ++mode) {
        const DenseTensor got = update_core(proj, lagged, e, alpha, beta, mode);
        for (std::size_t f = 0; f < 27; ++f) {
            double v = proj[f];
            for (std::size_t i = 0; i < p; ++i) v += alpha[i] * lagged[i][f];
            for (std::size_t i = 0; i < q; ++i) v -= beta[i] * e[i][f];
            core_err = std::max(core_err, std::abs(got[f] - 0.5 * v));
        }
    }

    // Error update with the (s + 1 - T_hat) beta_i denominator.
    double err_err = 0.0;
    const double t_hat = static_cast<double>(L + d), so = static_cast<double>(p + d + q);
    for (std::size_t lag = 0; lag < q; ++lag) {
        const ErrorUpdate u = update_error(g, alpha, beta, e, lag, d);
        for (std::size_t f = 0; f < 27; ++f) {
            double num = 0.0;
            for (std::size_t t = p + q; t < L; ++t) {
                num += g[t][f];
                for (std::size_t i = 0; i < p; ++i) num -= alpha[i] * g[t - 1 - i][f];
                for (std::size_t j = 0; j < q; ++j)
                    if (j != lag) num += beta[j] * e[j][f];
            }
            err_err = std::max(err_err, std::abs(u.error[f] - num / ((so + 1.0 - t_hat) * beta[lag])));
        }
    }

    // Relaxed last-mode factor against the normal equations assembled from scalar loops:
    // A_t(j, c) = sum_{a, b} X_t(a, b, j) P0(r0, a) P1(r1, b), c = r0 + R0 r1.
    const std::vector<Matrix> u{rand_orthonormal(3, 2, rng), rand_orthonormal(3, 3, rng), rand_matrix(3, 3, rng)};
    const Shape cs{2, 3, 3};
    std::vector<DenseTensor> xs, cores;
    for (int t = 0; t < 5; ++t) {
        xs.push_back(rand_tensor(s, rng));
        cores.push_back(rand_tensor(cs, rng));
    }
    const Matrix p0 = linalg::pinv(u[0]), p1 = linalg::pinv(u[1]);
    Matrix gram = Matrix::Zero(3, 3), rhs = Matrix::Zero(3, 3);
    for (std::size_t t = 0; t < xs.size(); ++t) {
        Matrix a = Matrix::Zero(3, 6);
        for (std::size_t j = 0; j < 3; ++j)
            for (std::size_t r0 = 0; r0 < 2; ++r0)
                for (std::size_t r1 = 0; r1 < 3; ++r1) {
                    double v = 0.0;
                    for (std::size_t i0 = 0; i0 < 3; ++i0)
                        for (std::size_t i1 = 0; i1 < 3; ++i1)
                            v += xs[t](i0, i1, j) * p0(static_cast<Eigen::Index>(r0), static_cast<Eigen::Index>(i0)) *
                                 p1(static_cast<Eigen::Index>(r1), static_cast<Eigen::Index>(i1));
                    a(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(r0 + 2 * r1)) = v;
                }
        for (Eigen::Index i = 0; i < 3; ++i)
            for (Eigen::Index k = 0; k < 3; ++k) {
                for (Eigen::Index c = 0; c < 6; ++c) gram(i, k) += a(i, c) * a(k, c);
                for (Eigen::Index c = 0; c < 6; ++c)
                    rhs(i, k) += a(i, c) * cores[t](static_cast<std::size_t>(c % 2), static_cast<std::size_t>(c / 2),
                                                    static_cast<std::size_t>(k));
            }
    }
    const Matrix expected = gram.fullPivLu().solve(rhs);
    const RelaxedUpdate r = update_factor_relaxed(xs, cores, u);
    const double fac_err = (r.factor - expected).cwiseAbs().maxCoeff();

    const double worst = std::max({core_err, err_err, fac_err});
    return {worst < kUpdateOracleTol && !r.ridge_used,
            "core " + fmt(core_err) + ", error " + fmt(err_err) + ", relaxed factor " + fmt(fac_err)};
}

Outcome yule_walker_recovery() {
    const DenseTensor x = eval::synth_dataset(eval::SynthKind::ar2_panel, 50, 200, 1.0, 8);
    const auto est = coeffs::estimate_ar(split_last(x), 2);
    const double e1 = std::abs(est.alpha[0] - eval::kAr2Alpha1), e2 = std::abs(est.alpha[1] - eval::kAr2Alpha2);
    return {e1 <= kYuleWalkerTol && e2 <= kYuleWalkerTol && !est.fallback,
            "alpha = (" + fmt(est.alpha[0]) + ", " + fmt(est.alpha[1]) + ")"};
}

Outcome determinism() {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "bht_acceptance_determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);
    auto run = [&](std::vector<std::string> args) {
        args.insert(args.begin(), "bht");
        std::vector<const char*> argv;
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream out, err;
        return cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    };
    const std::string data = (dir / "d.csv").string();
    int rc = run({"synth", "--series", "10", "--length", "40", "--seed", "9", "--output", data});
    std::vector<std::string> reports;
    for (const char* name : {"a.txt", "b.txt"}) {
        rc |= run({"backtest", "--input", data, "--seed", "3", "--output", (dir / name).string()});
        reports.push_back(rc == 0 ? io::read_file(dir / name) : "");
    }
    fs::remove_all(dir);
    const bool same = rc == 0 && !reports[0].empty() && reports[0] == reports[1];
    return {same, rc != 0 ? "command failed" : (same ? std::to_string(reports[0].size()) + " identical bytes" : "reports differ")};
}

Outcome long_horizon() {
    // Longer series so the test region holds ten-step windows from many origins.
    const DenseTensor x = eval::synth_dataset(eval::SynthKind::sinusoid_mixture, kSeries, 100, kNoise, kDataSeed);
    ModelConfig c = benchmark_config();
    c.ranks.clear();
    eval::BacktestOptions opt;
    opt.horizon = 10;
    opt.train_fraction = 0.7;
    const eval::EvalReport r = eval::rolling_backtest(x, c, opt);
    bool ok = true;
    for (std::size_t h = 1; h < r.per_step_nrmse.size(); ++h)
        ok = ok && r.per_step_nrmse[h] >= (1.0 - kHorizonSlack) * r.per_step_nrmse[h - 1];
    return {ok, "per-step NRMSE " + eval::detail::join(r.per_step_nrmse, fmt)};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"mdt round trip", mdt_round_trip},
        {"orthogonality every iteration", orthogonality},
        {"convergence trace", convergence},
        {"full-rank losslessness", losslessness},
        {"scalar AR(1) oracle", scalar_oracle},
        {"one-step forecast skill", forecast_skill},
        {"update formula oracles", update_oracles},
        {"Yule-Walker recovery", yule_walker_recovery},
        {"byte-identical reports", determinism},
        {"long-horizon monotonicity", long_horizon},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += o.pass ? 0 : 1;
        std::printf("%s [%zu] %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
    }
    std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failures), criteria.size());
    return failures == 0 ? 0 : 1;
}
