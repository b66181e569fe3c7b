#pragma once

#include "egarch/model.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace egarch {

/// Where the inverted recursion starts: a fixed log-variance, or an offset from alpha/(1−beta).
/// The relative form moves with the parameters, which matters for derivatives in theta.
struct InitialState {
    bool relative = true;
    double value = 0.0;

    static InitialState fixed(double g0) { return {false, g0}; }
    static InitialState unconditional(double offset = 0.0) { return {true, offset}; }

    [[nodiscard]] double resolve(const ModelParams& params) const noexcept {
        return relative ? params.unconditional_mean() + value : value;
    }
};

/// Filtered log-variance path ĝ_t(θ) on the state space K = [alpha/(1−beta), ∞).
struct FilterPath {
    ModelParams params;
    std::vector<double> g;          ///< ĝ_t for each observation t
    std::vector<double> residuals;  ///< X_t·exp(−ĝ_t/2)
    double g0 = 0.0;
    /// ĝ after the last observation, i.e. the one-step-ahead log-variance.
    double next = 0.0;
    std::size_t clamp_count = 0;
};

/**
 * @brief Lipschitz coefficient of the inverted map x ↦ alpha + beta·x + (gamma·X + delta·|X|)·exp(−x/2)
 * on K:
 *
 *   Λ(θ, X) = max{beta, ½(gamma·X + delta·|X|)·exp(−alpha/(2(1−beta))) − beta}.
 *
 * Requires a stationary, filter-admissible θ (InadmissibleParams otherwise).
 */
double lipschitz_coeff(const ModelParams& params, double x);

/// log Λ(θ, X); −∞ when the coefficient is exactly zero.
double log_lipschitz_coeff(const ModelParams& params, double x);

/**
 * Runs ĝ_{t+1} = alpha + beta·ĝ_t + (gamma·X_t + delta·|X_t|)·exp(−ĝ_t/2), projecting each update
 * back onto K. The start is not projected. Throws InadmissibleParams, NonStationary, or
 * Overflow when |ĝ_t| exceeds kLogVarGuard.
 */
FilterPath filter(const ModelParams& params, std::span<const double> returns, InitialState start = {});
FilterPath filter(const ModelParams& params, const SeriesSample& series, std::optional<double> g0 = std::nullopt);

enum class Verdict { Invertible, NotInvertible, Inconclusive };
enum class LyapunovMethod { TheoreticalMC, Empirical };

std::string_view to_string(Verdict verdict) noexcept;
std::string_view to_string(LyapunovMethod method) noexcept;

struct LyapunovReport {
    double estimate = 0.0;   ///< mean of log Λ_t
    double std_error = 0.0;
    std::size_t n_terms = 0;
    Verdict verdict = Verdict::Inconclusive;
    LyapunovMethod method = LyapunovMethod::TheoreticalMC;
    double sum = 0.0;        ///< Σ log Λ_t (Empirical only)
    double epsilon = 0.0;    ///< Empirical only
    double z = 0.0;          ///< band half-width multiplier (TheoreticalMC only)
};

struct TheoreticalCheckOptions {
    double z = 2.58;
    double truncation_tol = 1e-12;
    unsigned threads = 0;  ///< 0 = hardware concurrency
};

inline constexpr double kDefaultEpsilon = 1e-4;

/**
 * Monte Carlo estimate of E[log Λ(θ_test, X_0)] with X_0 drawn from the stationary DGP at
 * θ_dgp through its truncated MA(∞) representation. Paths are iid with one RNG stream each,
 * so the result does not depend on the thread count.
 *
 * Invertible when estimate + z·se < 0, NotInvertible when estimate − z·se > 0.
 */
LyapunovReport check_inv_theoretical(const ModelParams& params_dgp, const ModelParams& params_test,
                                     const InnovationSpec& innov, std::size_t mc_paths, std::uint64_t seed,
                                     const TheoreticalCheckOptions& opts = {});

/// Empirical constraint: delta ≥ |gamma| and Σ_t log Λ(θ, X_t) ≤ −epsilon.
LyapunovReport check_inv_empirical(const ModelParams& params, std::span<const double> returns,
                                   double epsilon = kDefaultEpsilon);

/// Filters from several starting values and tracks how fast the paths merge.
struct StabilityTable {
    std::vector<double> initial_values;
    std::vector<double> diff_max;  ///< max_{i,j} |ĝ_t^(i) − ĝ_t^(j)| per t
    /// Running Σ_{s≤t} (log σ²_s − ĝ_s^(i)), one row per initial value; empty without latent data.
    std::vector<std::vector<double>> criterion;

    [[nodiscard]] std::size_t size() const noexcept { return diff_max.size(); }
    /// max of diff_max over t in [from, to).
    [[nodiscard]] double max_diff(std::size_t from, std::size_t to) const;
};

StabilityTable stability_diagnostic(const ModelParams& params, const SeriesSample& series,
                                    std::span<const double> initial_values);

}  // namespace egarch
