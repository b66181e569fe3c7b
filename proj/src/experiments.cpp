#include "egarch/experiments.hpp"

#include "egarch/error.hpp"
#include "egarch/inversion.hpp"
#include "egarch/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace egarch {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<double> linspace(double lo, double hi, std::size_t count) {
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        out[i] = count == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
        // Keep an exact zero where the axis crosses it.
        if (std::abs(out[i]) <= 1e-12 * std::max(std::abs(lo), std::abs(hi))) {
            out[i] = 0.0;
        }
    }
    return out;
}

double median(std::vector<double> v) {
    if (v.empty()) {
        return kNaN;
    }
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    if (v.size() % 2 == 1) {
        return *mid;
    }
    const double upper = *mid;
    const double lower = *std::max_element(v.begin(), mid);
    return 0.5 * (lower + upper);
}

struct ReplicationOutcome {
    bool ok = false;
    bool threw = false;
    bool cov_valid = false;
    bool constraint_active = false;
    Vec4 theta = Vec4::Constant(kNaN);
    Vec4 se = Vec4::Constant(kNaN);
    double forecast_abs_err = kNaN;
    double m4 = kNaN;
    double mm = kNaN;
};

void validate_study(const StudyOptions& opts) {
    require_stationary(opts.theta0);
    require_admissible(opts.theta0);
    opts.innovations.validate();
    if (opts.theta0.gamma == 0.0 && opts.theta0.delta == 0.0) {
        throw Error(ErrorKind::Unidentifiable,
                    "gamma0 = delta0 = 0 carries no shock information: the parameters are not identifiable (ID)");
    }
    if (!opts.innovations.identifiable()) {
        throw Error(ErrorKind::Unidentifiable,
                    "innovations concentrated on two points: the parameters are not identifiable (ID)");
    }
    if (opts.replications == 0) {
        throw Error(ErrorKind::InvalidArgument, "a study needs at least one replication");
    }
    if (opts.n_grid.empty()) {
        throw Error(ErrorKind::InvalidArgument, "a study needs at least one sample size");
    }
    for (std::size_t i = 0; i < opts.n_grid.size(); ++i) {
        if (opts.n_grid[i] < 10 || (i > 0 && opts.n_grid[i] <= opts.n_grid[i - 1])) {
            throw Error(ErrorKind::InvalidArgument, "n_grid must be increasing with every n >= 10");
        }
    }
    const LyapunovReport inv =
        check_inv_theoretical(opts.theta0, opts.theta0, opts.innovations, opts.precheck_mc_paths, opts.seed);
    if (inv.verdict != Verdict::Invertible) {
        std::ostringstream msg;
        msg << "theta0 fails the invertibility check (INV): estimate " << inv.estimate << " +/- " << inv.std_error;
        throw Error(ErrorKind::InvalidArgument, msg.str());
    }
}

MCStudyReport run_study(const StudyOptions& opts, const std::string& kind) {
    const std::size_t grid = opts.n_grid.size();
    const std::size_t n_max = opts.n_grid.back();
    const std::size_t reps = opts.replications;

    std::vector<std::uint64_t> replication_seeds(reps);
    for (std::size_t r = 0; r < reps; ++r) {
        replication_seeds[r] = make_stream(opts.seed, r)();
    }
    // outcome[r * grid + k]
    std::vector<ReplicationOutcome> outcome(reps * grid);
    const Vec4 truth = to_vec(opts.theta0);

    parallel_for(reps, opts.threads, [&](std::size_t r) {
        // One extra observation so that σ²_{n+1} is known for the forecast check.
        const SeriesSample path =
            simulate(opts.theta0, opts.innovations, n_max + 1, opts.burn_in, replication_seeds[r]);
        for (std::size_t k = 0; k < grid; ++k) {
            const std::size_t n = opts.n_grid[k];
            ReplicationOutcome& out = outcome[r * grid + k];
            SeriesSample data = path.head(n);
            data.innovations.reset();
            FitOptions fo;
            fo.mode = opts.mode;
            fo.epsilon = opts.epsilon;
            fo.innovations = opts.innovations;
            try {
                const ModelParams start = opts.start_at_truth ? opts.theta0 : default_start(data.returns);
                const FitResult fr = fit(data, start, fo);
                out.ok = fr.converged;
                out.cov_valid = fr.converged && fr.cov_valid;
                out.constraint_active = fr.constraint_active;
                out.theta = to_vec(fr.theta_hat);
                out.se = fr.std_errors;
                out.m4 = fr.m4_hat;
                out.mm = fr.mm_stat;
                const double truth_next = std::exp((*path.latent_log_var)[n]);
                out.forecast_abs_err = std::abs(forecast(fr, data.returns) - truth_next);
            } catch (const Error&) {
                out.threw = true;
            }
        }
    });

    MCStudyReport report;
    report.kind = kind;
    report.theta0 = opts.theta0;
    report.mode = opts.mode;
    report.epsilon = opts.epsilon;
    report.replications = reps;
    report.n_grid = opts.n_grid;
    report.seed = opts.seed;
    report.replication_seeds = replication_seeds;

    for (std::size_t k = 0; k < grid; ++k) {
        StudyCell cell;
        cell.n = opts.n_grid[k];
        cell.attempted = reps;
        std::array<CompensatedSum, kCoords> err_sum;
        std::array<CompensatedSum, kCoords> sq_sum;
        std::array<std::size_t, kCoords> covered{};
        std::array<std::vector<double>, kCoords> standardized;
        std::size_t within = 0;
        CompensatedSum fc_sum;
        CompensatedSum m4_sum;
        CompensatedSum mm_sum;
        std::vector<double> fc_errors;

        for (std::size_t r = 0; r < reps; ++r) {
            const ReplicationOutcome& o = outcome[r * grid + k];
            if (o.threw) {
                ++cell.errors;
                continue;
            }
            if (!o.ok) {
                continue;
            }
            ++cell.converged;
            cell.constraint_active += o.constraint_active ? 1 : 0;
            for (std::size_t c = 0; c < kCoords; ++c) {
                const double e = o.theta[static_cast<Eigen::Index>(c)] - truth[static_cast<Eigen::Index>(c)];
                err_sum[c].add(e);
                sq_sum[c].add(e * e);
            }
            fc_sum.add(o.forecast_abs_err);
            fc_errors.push_back(o.forecast_abs_err);
            m4_sum.add(o.m4);
            mm_sum.add(o.mm);
            if (o.cov_valid) {
                ++cell.with_se;
                bool all_within = true;
                for (std::size_t c = 0; c < kCoords; ++c) {
                    const auto i = static_cast<Eigen::Index>(c);
                    const double zscore = (o.theta[i] - truth[i]) / o.se[i];
                    covered[c] += std::abs(zscore) <= 1.959963984540054 ? 1 : 0;
                    all_within = all_within && std::abs(zscore) <= 3.0;
                    standardized[c].push_back(zscore);
                }
                within += all_within ? 1 : 0;
            }
        }

        const double conv = static_cast<double>(cell.converged);
        const double with_se = static_cast<double>(cell.with_se);
        for (std::size_t c = 0; c < kCoords; ++c) {
            cell.bias[c] = cell.converged ? err_sum[c].value() / conv : kNaN;
            cell.rmse[c] = cell.converged ? std::sqrt(sq_sum[c].value() / conv) : kNaN;
            cell.coverage95[c] = cell.with_se ? static_cast<double>(covered[c]) / with_se : kNaN;
            if (standardized[c].size() > 1) {
                CompensatedSum s;
                for (double v : standardized[c]) {
                    s.add(v);
                }
                const double mean = s.value() / with_se;
                CompensatedSum v2;
                for (double v : standardized[c]) {
                    v2.add((v - mean) * (v - mean));
                }
                cell.standardized_var[c] = v2.value() / (with_se - 1.0);
            } else {
                cell.standardized_var[c] = kNaN;
            }
        }
        cell.within_3se_all = cell.with_se ? static_cast<double>(within) / with_se : kNaN;
        cell.forecast_mae = cell.converged ? fc_sum.value() / conv : kNaN;
        cell.forecast_median_abs_err = median(fc_errors);
        cell.mean_m4 = cell.converged ? m4_sum.value() / conv : kNaN;
        cell.mean_mm_stat = cell.converged ? mm_sum.value() / conv : kNaN;
        report.cells.push_back(cell);
    }

    for (std::size_t c = 0; c < kCoords; ++c) {
        report.rmse_decreasing[c] = grid > 1 && report.cells.back().rmse[c] < report.cells.front().rmse[c];
        bool monotone = grid > 1;
        for (std::size_t k = 1; k < grid; ++k) {
            monotone = monotone && report.cells[k].rmse[c] < report.cells[k - 1].rmse[c];
        }
        report.rmse_monotone[c] = monotone;
    }
    bool fc_down = grid > 1;
    for (std::size_t k = 1; k < grid; ++k) {
        fc_down = fc_down && report.cells[k].forecast_median_abs_err < report.cells[k - 1].forecast_median_abs_err;
    }
    report.forecast_decreasing = fc_down;

    report.standardized.reserve(reps);
    for (std::size_t r = 0; r < reps; ++r) {
        const ReplicationOutcome& o = outcome[r * grid + (grid - 1)];
        CoordArray row;
        for (std::size_t c = 0; c < kCoords; ++c) {
            const auto i = static_cast<Eigen::Index>(c);
            row[c] = o.cov_valid ? (o.theta[i] - truth[i]) / o.se[i] : kNaN;
        }
        report.standardized.push_back(row);
    }
    return report;
}

}  // namespace

double forecast(const FitResult& fit, std::span<const double> returns) {
    const FilterPath path = filter(fit.theta_hat, returns, fit.start);
    return std::exp(path.next);
}

double beta_max_for_cell(double gamma, double delta, double beta_tolerance, std::size_t mc_paths,
                         std::uint64_t seed) {
    const double upper = 1.0 - beta_tolerance;
    if (gamma == 0.0 && delta == 0.0) {
        // The criterion is log beta < 0 on the whole interval.
        return upper;
    }
    TheoreticalCheckOptions check;
    check.threads = 1;
    auto passes = [&](double beta) {
        const ModelParams theta{0.0, beta, gamma, delta};
        return check_inv_theoretical(theta, theta, InnovationSpec::normal(), mc_paths, seed, check).verdict ==
               Verdict::Invertible;
    };
    if (!passes(0.0)) {
        return 0.0;
    }
    double lo = 0.0;
    double hi = upper;
    while (hi - lo > beta_tolerance) {
        const double mid = 0.5 * (lo + hi);
        if (passes(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return lo;
}

DomainGrid domain_map(const DomainMapOptions& opts) {
    if (opts.grid_size < 2) {
        throw Error(ErrorKind::InvalidArgument, "the domain map needs grid_size >= 2");
    }
    if (!(opts.beta_tolerance > 0.0 && opts.beta_tolerance < 0.5)) {
        throw Error(ErrorKind::InvalidArgument, "beta_tolerance must lie in (0, 0.5)");
    }
    if (!(opts.gamma_min <= opts.gamma_max && opts.delta_min <= opts.delta_max)) {
        throw Error(ErrorKind::InvalidArgument, "axis ranges must be ordered");
    }
    if (opts.mc_paths < 100) {
        throw Error(ErrorKind::InvalidArgument, "the domain map needs at least 100 Monte Carlo paths per probe");
    }

    DomainGrid grid;
    grid.gamma_axis = linspace(opts.gamma_min, opts.gamma_max, opts.grid_size);
    grid.delta_axis = linspace(opts.delta_min, opts.delta_max, opts.grid_size);
    grid.mc_paths = opts.mc_paths;
    grid.seed = opts.seed;
    grid.beta_tolerance = opts.beta_tolerance;
    grid.beta_max.assign(opts.grid_size, std::vector<std::optional<double>>(opts.grid_size));

    const std::size_t cells = opts.grid_size * opts.grid_size;
    parallel_for(cells, opts.threads, [&](std::size_t idx) {
        const std::size_t i = idx / opts.grid_size;
        const std::size_t j = idx % opts.grid_size;
        const double gamma = grid.gamma_axis[i];
        const double delta = grid.delta_axis[j];
        if (delta < std::abs(gamma) || delta < 0.0) {
            return;
        }
        grid.beta_max[i][j] = beta_max_for_cell(gamma, delta, opts.beta_tolerance, opts.mc_paths, opts.seed);
    });
    return grid;
}

ChaosSearchReport find_non_forgetting_point(const ChaosSearchOptions& opts) {
    if (opts.n < 4) {
        throw Error(ErrorKind::InvalidArgument, "the chaos search needs n >= 4");
    }
    ChaosSearchReport report;
    for (double delta : opts.delta_grid) {
        for (double beta : opts.beta_grid) {
            ++report.tried;
            // alpha centres log σ² at zero so the filter starts in the bulk of the stationary law.
            const ModelParams theta{-delta * std::sqrt(2.0 / std::numbers::pi), beta, 0.0, delta};
            try {
                const SeriesSample series = simulate(theta, InnovationSpec::normal(), opts.n, 1000, opts.seed);
                const std::vector<double> init{0.0, opts.initial_gap};
                const StabilityTable table = stability_diagnostic(theta, series, init);
                const double late = table.max_diff(opts.n / 2, opts.n);
                report.largest_late_diff = std::max(report.largest_late_diff, late);
                if (late > opts.threshold) {
                    report.theta = theta;
                    report.late_diff = late;
                    return report;
                }
                ++report.forgot;
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::Overflow) {
                    throw;
                }
                ++report.overflowed;
            }
        }
    }
    return report;
}

MCStudyReport consistency_study(const StudyOptions& opts) {
    validate_study(opts);
    return run_study(opts, "consistency");
}

MCStudyReport normality_study(const StudyOptions& opts) {
    validate_study(opts);
    if (opts.n_grid.size() != 1) {
        throw Error(ErrorKind::InvalidArgument, "the normality study runs at a single sample size");
    }
    const double mm = mm_population(opts.theta0, opts.innovations);
    if (!(mm < 1.0)) {
        std::ostringstream msg;
        msg << "moment condition (MM) fails at theta0: E[(beta - (gamma Z + delta|Z|)/2)^2] = " << mm;
        throw Error(ErrorKind::InvalidArgument, msg.str());
    }
    return run_study(opts, "normality");
}

}  // namespace egarch
