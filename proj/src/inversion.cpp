#include "egarch/inversion.hpp"

#include "egarch/error.hpp"
#include "egarch/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace egarch {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// log max{beta, e^a − beta} where a is the log of the shock amplitude
/// ½(gamma·X + delta·|X|)·exp(−alpha/(2(1−beta))). Works in log space so huge X cannot overflow.
double log_lambda_from_log_amp(double beta, double log_amp) {
    if (log_amp > 40.0) {
        return log_amp + std::log1p(-beta * std::exp(-log_amp));
    }
    const double amp = std::exp(log_amp);  // 0 when log_amp = −∞
    const double lambda = std::max(beta, amp - beta);
    return lambda > 0.0 ? std::log(lambda) : kNegInf;
}

double shock_log_offset(const ModelParams& p) { return -std::numbers::ln2 - p.alpha / (2.0 * (1.0 - p.beta)); }

double safe_log(double v) { return v > 0.0 ? std::log(v) : kNegInf; }

}  // namespace

double lipschitz_coeff(const ModelParams& params, double x) {
    require_stationary(params);
    require_admissible(params);
    const double shock = params.gamma * x + params.delta * std::abs(x);
    const double amp = 0.5 * shock * std::exp(-params.alpha / (2.0 * (1.0 - params.beta)));
    return std::max(params.beta, amp - params.beta);
}

double log_lipschitz_coeff(const ModelParams& params, double x) {
    require_stationary(params);
    require_admissible(params);
    const double shock = params.gamma * x + params.delta * std::abs(x);
    return log_lambda_from_log_amp(params.beta, safe_log(shock) + shock_log_offset(params));
}

FilterPath filter(const ModelParams& params, std::span<const double> returns, InitialState start) {
    require_stationary(params);
    require_admissible(params);
    if (returns.empty()) {
        throw Error(ErrorKind::InvalidArgument, "cannot filter an empty series");
    }
    const std::size_t n = returns.size();
    const double floor = params.unconditional_mean();

    FilterPath path;
    path.params = params;
    path.g.resize(n);
    path.residuals.resize(n);
    path.g0 = start.resolve(params);

    double g = path.g0;
    for (std::size_t t = 0; t < n; ++t) {
        require_within_guard(g, t);
        const double x = returns[t];
        const double decay = std::exp(-0.5 * g);
        path.g[t] = g;
        path.residuals[t] = x * decay;
        double next = params.alpha + params.beta * g + (params.gamma * x + params.delta * std::abs(x)) * decay;
        if (next < floor) {
            next = floor;
            ++path.clamp_count;
        }
        g = next;
    }
    require_within_guard(g, n);
    path.next = g;
    return path;
}

FilterPath filter(const ModelParams& params, const SeriesSample& series, std::optional<double> g0) {
    return filter(params, series.returns, g0 ? InitialState::fixed(*g0) : InitialState::unconditional());
}

std::string_view to_string(Verdict verdict) noexcept {
    switch (verdict) {
        case Verdict::Invertible: return "Invertible";
        case Verdict::NotInvertible: return "NotInvertible";
        case Verdict::Inconclusive: return "Inconclusive";
    }
    return "Inconclusive";
}

std::string_view to_string(LyapunovMethod method) noexcept {
    return method == LyapunovMethod::TheoreticalMC ? "TheoreticalMC" : "Empirical";
}

LyapunovReport check_inv_theoretical(const ModelParams& params_dgp, const ModelParams& params_test,
                                     const InnovationSpec& innov, std::size_t mc_paths, std::uint64_t seed,
                                     const TheoreticalCheckOptions& opts) {
    require_stationary(params_dgp);
    require_stationary(params_test);
    require_admissible(params_test);
    innov.validate();
    if (mc_paths < 100) {
        throw Error(ErrorKind::InvalidArgument, "check_inv_theoretical needs at least 100 Monte Carlo paths");
    }

    LyapunovReport report;
    report.method = LyapunovMethod::TheoreticalMC;
    report.n_terms = mc_paths;
    report.z = opts.z;

    // Without shocks Λ = |beta| for every draw.
    if (params_test.gamma == 0.0 && params_test.delta == 0.0) {
        report.estimate = safe_log(std::abs(params_test.beta));
        report.std_error = 0.0;
        report.verdict = report.estimate < 0.0 ? Verdict::Invertible : Verdict::NotInvertible;
        return report;
    }

    const std::size_t truncation = ma_truncation_for(params_dgp.beta, opts.truncation_tol);
    const double mean_log_var = params_dgp.unconditional_mean();
    const double offset = shock_log_offset(params_test);

    std::vector<double> terms(mc_paths);
    parallel_for(mc_paths, opts.threads, [&](std::size_t path) {
        Rng rng = make_stream(seed, path);
        InnovationSampler draw(innov);
        // Oldest lag first, Horner form of Σ beta^{k−1}(gamma Z_{−k} + delta |Z_{−k}|).
        double acc = 0.0;
        for (std::size_t k = 0; k < truncation; ++k) {
            const double z = draw(rng);
            acc = params_dgp.beta * acc + params_dgp.gamma * z + params_dgp.delta * std::abs(z);
        }
        const double log_var = mean_log_var + acc;
        const double z0 = draw(rng);
        const double unit_shock = params_test.gamma * z0 + params_test.delta * std::abs(z0);
        // X_0 = exp(log_var/2)·z0, so the shock scales by exp(log_var/2).
        const double log_amp = safe_log(unit_shock) + 0.5 * log_var + offset;
        terms[path] = log_lambda_from_log_amp(params_test.beta, log_amp);
    });

    std::size_t neg_inf = 0;
    CompensatedSum sum;
    for (double v : terms) {
        if (v == kNegInf) {
            ++neg_inf;
        } else {
            sum.add(v);
        }
    }
    if (neg_inf > 0) {
        report.estimate = kNegInf;
        report.std_error = 0.0;
        report.verdict = Verdict::Invertible;
        return report;
    }
    const double m = static_cast<double>(mc_paths);
    const double mean = sum.value() / m;
    CompensatedSum sq;
    for (double v : terms) {
        sq.add((v - mean) * (v - mean));
    }
    report.estimate = mean;
    report.std_error = std::sqrt(sq.value() / (m - 1.0) / m);
    if (mean + opts.z * report.std_error < 0.0) {
        report.verdict = Verdict::Invertible;
    } else if (mean - opts.z * report.std_error > 0.0) {
        report.verdict = Verdict::NotInvertible;
    } else {
        report.verdict = Verdict::Inconclusive;
    }
    return report;
}

LyapunovReport check_inv_empirical(const ModelParams& params, std::span<const double> returns, double epsilon) {
    require_stationary(params);
    require_admissible(params);
    if (!(epsilon > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "the empirical invertibility check needs epsilon > 0");
    }
    if (returns.empty()) {
        throw Error(ErrorKind::InvalidArgument, "the empirical invertibility check needs a non-empty series");
    }

    LyapunovReport report;
    report.method = LyapunovMethod::Empirical;
    report.epsilon = epsilon;
    report.n_terms = returns.size();

    const double offset = shock_log_offset(params);
    std::vector<double> terms(returns.size());
    bool has_neg_inf = false;
    CompensatedSum sum;
    for (std::size_t t = 0; t < returns.size(); ++t) {
        const double x = returns[t];
        const double shock = params.gamma * x + params.delta * std::abs(x);
        terms[t] = log_lambda_from_log_amp(params.beta, safe_log(shock) + offset);
        if (terms[t] == kNegInf) {
            has_neg_inf = true;
        } else {
            sum.add(terms[t]);
        }
    }
    const double n = static_cast<double>(returns.size());
    if (has_neg_inf) {
        report.sum = kNegInf;
        report.estimate = kNegInf;
        report.std_error = 0.0;
    } else {
        report.sum = sum.value();
        report.estimate = report.sum / n;
        if (returns.size() > 1) {
            CompensatedSum sq;
            for (double v : terms) {
                sq.add((v - report.estimate) * (v - report.estimate));
            }
            report.std_error = std::sqrt(sq.value() / (n - 1.0) / n);
        }
    }
    report.verdict = report.sum <= -epsilon ? Verdict::Invertible : Verdict::NotInvertible;
    return report;
}

double StabilityTable::max_diff(std::size_t from, std::size_t to) const {
    to = std::min(to, diff_max.size());
    double out = 0.0;
    for (std::size_t t = from; t < to; ++t) {
        out = std::max(out, diff_max[t]);
    }
    return out;
}

StabilityTable stability_diagnostic(const ModelParams& params, const SeriesSample& series,
                                    std::span<const double> initial_values) {
    if (initial_values.size() < 2) {
        throw Error(ErrorKind::InvalidArgument, "the stability diagnostic needs at least two initial values");
    }
    StabilityTable table;
    table.initial_values.assign(initial_values.begin(), initial_values.end());

    std::vector<FilterPath> paths;
    paths.reserve(initial_values.size());
    for (double g0 : initial_values) {
        paths.push_back(filter(params, series.returns, InitialState::fixed(g0)));
    }

    const std::size_t n = series.size();
    table.diff_max.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
        double lo = paths.front().g[t];
        double hi = lo;
        for (const auto& p : paths) {
            lo = std::min(lo, p.g[t]);
            hi = std::max(hi, p.g[t]);
        }
        table.diff_max[t] = hi - lo;
    }

    if (series.latent_log_var) {
        const auto& latent = *series.latent_log_var;
        for (const auto& p : paths) {
            std::vector<double> running(n);
            double acc = 0.0;
            for (std::size_t t = 0; t < n; ++t) {
                acc += latent[t] - p.g[t];
                running[t] = acc;
            }
            table.criterion.push_back(std::move(running));
        }
    }
    return table;
}

}  // namespace egarch
