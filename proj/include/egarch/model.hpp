#pragma once

#include <cstddef>
#include <cstdint>

#include <boost/random/normal_distribution.hpp>

#include <optional>
#include <random>
#include <span>
#include <vector>

namespace egarch {

/// Largest |log σ²| accepted before exponentiation. Beyond it exp() loses
/// double precision, so the recursions report Overflow instead of saturating.
inline constexpr double kLogVarGuard = 700.0;

/**
 * EGARCH(1,1) coefficients for the log-variance recursion
 *
 *   log σ²_{t+1} = alpha + beta·log σ²_t + gamma·Z_t + delta·|Z_t|.
 */
struct ModelParams {
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
    double delta = 0.0;

    [[nodiscard]] bool stationary() const noexcept;
    /// delta ≥ |gamma|, which keeps gamma·x + delta·|x| non-negative for every x.
    [[nodiscard]] bool filter_admissible() const noexcept;
    [[nodiscard]] bool finite() const noexcept;
    /// alpha / (1 − beta): stationary mean of log σ² when gamma = delta = 0, and lower end of
    /// the filter state space.
    [[nodiscard]] double unconditional_mean() const noexcept;

    friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Throws NonStationary (or InvalidArgument for non-finite fields).
void require_stationary(const ModelParams& params);
/// Throws InadmissibleParams when delta < |gamma|.
void require_admissible(const ModelParams& params);
/// Throws Overflow when |log_var| exceeds kLogVarGuard (or is NaN); `t` is used in the message.
void require_within_guard(double log_var, std::size_t t);

enum class InnovationKind { StandardNormal, StudentT, Rademacher };

/// Distribution of the iid innovations, always centred with unit variance.
struct InnovationSpec {
    InnovationKind kind = InnovationKind::StandardNormal;
    /// Degrees of freedom; only read for StudentT and must exceed 4.
    double dof = 0.0;

    static InnovationSpec normal() { return {}; }
    static InnovationSpec student_t(double dof) { return {InnovationKind::StudentT, dof}; }
    static InnovationSpec rademacher() { return {InnovationKind::Rademacher, 0.0}; }

    void validate() const;
    /// E|Z|
    [[nodiscard]] double mean_abs() const;
    /// E[Z⁴]
    [[nodiscard]] double fourth_moment() const;
    /// Two-point laws do not identify the parameters.
    [[nodiscard]] bool identifiable() const noexcept { return kind != InnovationKind::Rademacher; }
};

using Rng = std::mt19937_64;

/// Independent generator for replication `stream` of a run seeded with `seed`.
Rng make_stream(std::uint64_t seed, std::uint64_t stream = 0);

/// Draws unit-variance innovations according to an InnovationSpec.
class InnovationSampler {
public:
    explicit InnovationSampler(const InnovationSpec& spec);

    double operator()(Rng& rng);

private:
    InnovationSpec spec_;
    boost::random::normal_distribution<double> normal_{0.0, 1.0};  // ziggurat
    std::student_t_distribution<double> student_{5.0};
    std::bernoulli_distribution coin_{0.5};
    double t_scale_ = 1.0;
};

/// Returns X_t with, for simulated data, the latent log σ²_t and innovations Z_t.
struct SeriesSample {
    std::vector<double> returns;
    std::optional<std::vector<double>> latent_log_var;
    std::optional<std::vector<double>> innovations;

    [[nodiscard]] std::size_t size() const noexcept { return returns.size(); }
    [[nodiscard]] bool has_latent() const noexcept { return latent_log_var.has_value(); }

    /// First `n` observations, keeping whichever optional columns are present.
    [[nodiscard]] SeriesSample head(std::size_t n) const;
    /// Throws NonFiniteValue or InvalidArgument if the invariants do not hold.
    void validate() const;
};

/**
 * Simulates the stationary EGARCH(1,1) process.
 *
 * The log-variance starts at alpha/(1−beta) and the first `burn_in` steps are discarded.
 * Throws NonStationary when |beta| ≥ 1 and Overflow when |log σ²| leaves ±kLogVarGuard.
 */
SeriesSample simulate(const ModelParams& params, const InnovationSpec& innov, std::size_t n,
                      std::size_t burn_in, std::uint64_t seed);

/// Same recursion driven by caller-supplied innovations (no burn-in). Starts at `log_var0`,
/// or at alpha/(1−beta) when absent.
SeriesSample simulate_from_innovations(const ModelParams& params, std::span<const double> innovations,
                                       std::optional<double> log_var0 = std::nullopt);

/**
 * Truncated MA(∞) form of the stationary log-variance:
 *
 *   log σ²_t ≈ alpha/(1−beta) + Σ_{k=1..truncation} beta^{k−1} (gamma·Z_{t−k} + delta·|Z_{t−k}|)
 *
 * Element j of the result is the value at t = truncation + j, the first index with enough
 * lagged innovations. The truncation error is at most
 * |beta|^truncation · max|gamma·Z + delta·|Z|| / (1 − |beta|).
 */
std::vector<double> ma_infinity_log_var(const ModelParams& params, std::span<const double> innovations,
                                        std::size_t truncation);

/// Smallest K ≥ 1 with |beta|^K < tol.
std::size_t ma_truncation_for(double beta, double tol = 1e-12);

}  // namespace egarch
