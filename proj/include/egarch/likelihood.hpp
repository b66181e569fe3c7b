#pragma once

#include "egarch/inversion.hpp"
#include "egarch/model.hpp"

#include <Eigen/Core>

#include <span>
#include <vector>

namespace egarch {

using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;

inline Vec4 to_vec(const ModelParams& p) { return {p.alpha, p.beta, p.gamma, p.delta}; }
inline ModelParams from_vec(const Vec4& v) { return {v[0], v[1], v[2], v[3]}; }

/// Quasi-likelihood L̂_n(θ) = (2n)⁻¹ Σ_t [X_t² exp(−ĝ_t) + ĝ_t] and, on request, its
/// derivatives in θ = (alpha, beta, gamma, delta).
struct QLEvaluation {
    double value = 0.0;
    Vec4 gradient = Vec4::Zero();
    Mat4 hessian = Mat4::Zero();
    FilterPath path;
    std::vector<Vec4> grad_path;  ///< ∇ĝ_t, filled when paths are kept
    std::vector<Mat4> hess_path;  ///< ℍĝ_t, filled when paths are kept and the Hessian is requested
};

enum class DerivativeOrder { None, Gradient, Hessian };

double quasi_likelihood(const ModelParams& params, std::span<const double> returns, InitialState start = {});

/**
 * Propagates ∇ĝ_t and ℍĝ_t alongside the filter:
 *
 *   ∇ĝ_{t+1} = φ'_t ∇ĝ_t + ∇_θφ_t
 *   ℍĝ_{t+1} = φ'_t ℍĝ_t + φ''_t ∇ĝ_t∇ĝ_tᵀ + ∇_θφ'_t ∇ĝ_tᵀ + ∇ĝ_t ∇_θφ'_tᵀ
 *
 * with φ'_t = beta − ½c_t e^{−ĝ_t/2}, φ''_t = ¼c_t e^{−ĝ_t/2}, c_t = gamma·X_t + delta·|X_t|,
 * ∇_θφ_t = (1, ĝ_t, X_t e^{−ĝ_t/2}, |X_t| e^{−ĝ_t/2}) and ∇_θφ'_t = (0, 1, −½X_t e^{−ĝ_t/2}, −½|X_t| e^{−ĝ_t/2}).
 *
 * A fixed start has zero derivatives; a start relative to alpha/(1−beta) carries the derivatives
 * of that mean, and so does every step where the state is projected onto K. The result is the
 * exact derivative of quasi_likelihood() for the same start.
 */
QLEvaluation ql_with_derivatives(const ModelParams& params, std::span<const double> returns,
                                 InitialState start = {}, DerivativeOrder order = DerivativeOrder::Hessian,
                                 bool keep_paths = true);

/**
 * Score Σ_t ½∇g_t(θ₀)(1 − Z_t²) at the data-generating θ₀, computed from the latent states
 * through ∇g_{t+1} = U_t + V_t∇g_t, U_t = (1, log σ²_t, Z_t, |Z_t|), V_t = beta − ½(gamma Z_t + delta|Z_t|),
 * ∇g_0 = 0. Equals n·∇L̂_n(θ₀) when the filter starts at the true log σ²_0.
 * Throws MissingLatentState for observed data.
 */
Vec4 score_at_truth(const ModelParams& params0, const SeriesSample& series);

struct CovarianceEstimate {
    Mat4 b_hat = Mat4::Zero();  ///< n⁻¹ Σ ∇ĝ_t∇ĝ_tᵀ
    Mat4 cov = Mat4::Zero();    ///< (m̂₄ − 1) B̂⁻¹, covariance of √n(θ̂ − θ₀)
    Vec4 std_errors = Vec4::Zero();
    double m4_hat = 0.0;
    double mm_stat = 0.0;       ///< n⁻¹ Σ (beta − ½(gamma Ẑ_t + delta|Ẑ_t|))²
    bool mm_violated = false;   ///< mm_stat ≥ 1: the standard errors are not valid
    bool degenerate = false;    ///< m̂₄ ≤ 1, the covariance collapses to zero
};

/// Throws SingularB when the condition number of B̂ exceeds 1e12.
CovarianceEstimate asymptotic_covariance(const ModelParams& theta_hat, std::span<const Vec4> grad_path,
                                         std::span<const double> residuals);

/// Population E[(beta − ½(gamma Z + delta|Z|))²] for a symmetric innovation law.
double mm_population(const ModelParams& params, const InnovationSpec& innov);

}  // namespace egarch
