#pragma once

#include "egarch/inversion.hpp"
#include "egarch/likelihood.hpp"
#include "egarch/model.hpp"

#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace egarch {

/// Compact parameter set: |alpha| ≤ alpha_max, |beta| ≤ beta_max < 1, |gamma| ≤ gamma_max,
/// |gamma| ≤ delta ≤ delta_max.
struct ParamBox {
    double alpha_max = 10.0;
    double beta_max = 0.999;
    double gamma_max = 10.0;
    double delta_max = 10.0;

    void validate() const;
    [[nodiscard]] bool contains(const ModelParams& p) const noexcept;
};

enum class FitMode { QMLE, SQMLE };

std::string_view to_string(FitMode mode) noexcept;

struct FitOptions {
    FitMode mode = FitMode::SQMLE;
    double epsilon = kDefaultEpsilon;
    ParamBox box{};
    InitialState start{};            ///< filter start, alpha/(1−beta) by default
    double grad_tol = 1e-6;
    double step_tol = 1e-8;
    int max_iter = 500;
    int max_penalty_rounds = 30;
    double initial_penalty = 1.0;
    /// Per-observation distance |Σ log Λ_t + epsilon|/n below which the constraint counts as binding.
    double constraint_tol = 1e-6;
    /// When the innovation law is known (simulation studies), two-point laws are rejected.
    std::optional<InnovationSpec> innovations{};
    bool compute_covariance = true;
};

struct FitResult {
    ModelParams theta_hat;
    double ql = 0.0;
    bool converged = false;
    int iterations = 0;
    bool constraint_active = false;
    double lyapunov_sum = 0.0;  ///< Σ_t log Λ_t(θ̂)
    FitMode mode = FitMode::SQMLE;
    double epsilon = kDefaultEpsilon;
    std::size_t n = 0;
    InitialState start{};
    int penalty_rounds = 0;
    bool used_fallback = false;
    bool feasibility_search = false;  ///< the starting point had to be shrunk into the constraint set
    std::string stop_reason;

    bool cov_valid = false;
    Mat4 cov = Mat4::Constant(std::numeric_limits<double>::quiet_NaN());
    Vec4 std_errors = Vec4::Constant(std::numeric_limits<double>::quiet_NaN());
    double m4_hat = std::numeric_limits<double>::quiet_NaN();
    double mm_stat = std::numeric_limits<double>::quiet_NaN();
    bool mm_violated = false;
    std::string cov_message;
};

/// Σ_t log Λ_t(θ) over the series, with its gradient in θ when `grad` is non-null.
/// −∞ (zero gradient) when some Λ_t vanishes.
double lyapunov_sum(const ModelParams& params, std::span<const double> returns, Vec4* grad = nullptr);

/// Data-driven starting point: beta = 0.5, gamma = 0, delta = 0.2, alpha matching the sample
/// log second moment.
ModelParams default_start(std::span<const double> returns);

/**
 * QMLE (mode QMLE) or stable QMLE (mode SQMLE) of θ.
 *
 * Optimizes over (alpha, beta, gamma, delta − |gamma|) with projected BFGS. In SQMLE mode the
 * empirical constraint Σ log Λ_t(θ) ≤ −epsilon is enforced by an exact penalty whose weight
 * doubles until the minimizer is feasible; an infeasible start is first shrunk toward zero.
 * Throws TooShort (n < 10), Unidentifiable (two-point innovations), EmptyFeasibleSet, and
 * InadmissibleParams / NonStationary for a bad start. Non-convergence is reported through
 * FitResult::converged.
 */
FitResult fit(const SeriesSample& series, const ModelParams& theta0, const FitOptions& opts = {});

}  // namespace egarch
