#include "egarch/fit.hpp"

#include "egarch/error.hpp"
#include "egarch/optimizer.hpp"
#include "egarch/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

namespace egarch {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

double lyapunov_sum(const ModelParams& p, std::span<const double> returns, Vec4* grad) {
    const double one_minus_b = 1.0 - p.beta;
    const double offset = -std::numbers::ln2 - p.alpha / (2.0 * one_minus_b);
    const Vec4 dlog_amp_base{-1.0 / (2.0 * one_minus_b), -p.alpha / (2.0 * one_minus_b * one_minus_b), 0.0, 0.0};

    CompensatedSum sum;
    Vec4 g = Vec4::Zero();
    for (double x : returns) {
        const double ax = std::abs(x);
        const double shock = p.gamma * x + p.delta * ax;
        const double log_amp = shock > 0.0 ? std::log(shock) + offset : -kInf;

        double log_lambda;
        bool shock_branch;
        double ratio = 0.0;     // A/(A − beta)
        double inv_gap = 0.0;   // 1/(A − beta)
        if (log_amp > 40.0) {
            const double e = std::exp(-log_amp);
            log_lambda = log_amp + std::log1p(-p.beta * e);
            ratio = 1.0 / (1.0 - p.beta * e);
            inv_gap = ratio * e;
            shock_branch = true;
        } else {
            const double amp = std::exp(log_amp);
            if (amp - p.beta > p.beta) {
                log_lambda = std::log(amp - p.beta);
                ratio = amp / (amp - p.beta);
                inv_gap = 1.0 / (amp - p.beta);
                shock_branch = true;
            } else {
                log_lambda = p.beta > 0.0 ? std::log(p.beta) : -kInf;
                shock_branch = false;
            }
        }
        if (log_lambda == -kInf) {
            if (grad != nullptr) {
                grad->setZero();
            }
            return -kInf;
        }
        sum.add(log_lambda);
        if (grad != nullptr) {
            if (shock_branch) {
                if (shock > 0.0) {
                    Vec4 dlog_amp = dlog_amp_base;
                    dlog_amp[2] = x / shock;
                    dlog_amp[3] = ax / shock;
                    g += ratio * dlog_amp;
                }
                g[1] -= inv_gap;
            } else {
                g[1] += 1.0 / p.beta;
            }
        }
    }
    if (grad != nullptr) {
        *grad = g;
    }
    return sum.value();
}

namespace {

/// Internal coordinates u = (alpha, beta, gamma, delta − |gamma|).
Vec4 to_internal(const ModelParams& p) { return {p.alpha, p.beta, p.gamma, p.delta - std::abs(p.gamma)}; }

ModelParams to_natural(const Vec4& u) { return {u[0], u[1], u[2], u[3] + std::abs(u[2])}; }

Vec4 chain_to_internal(const Vec4& grad_natural, const Vec4& u) {
    const double sign = u[2] > 0.0 ? 1.0 : (u[2] < 0.0 ? -1.0 : 0.0);
    return {grad_natural[0], grad_natural[1], grad_natural[2] + sign * grad_natural[3], grad_natural[3]};
}

bool two_point_law(const std::vector<double>& z) {
    std::set<double> distinct;
    for (double v : z) {
        distinct.insert(v);
        if (distinct.size() > 2) {
            return false;
        }
    }
    return true;
}

}  // namespace

void ParamBox::validate() const {
    if (!(alpha_max > 0.0 && gamma_max >= 0.0 && delta_max >= 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "parameter box bounds must be positive");
    }
    if (!(beta_max > 0.0 && beta_max < 1.0)) {
        throw Error(ErrorKind::InvalidArgument, "the box needs 0 < beta_max < 1 to stay inside (ST)");
    }
}

bool ParamBox::contains(const ModelParams& p) const noexcept {
    return std::abs(p.alpha) <= alpha_max && std::abs(p.beta) <= beta_max && std::abs(p.gamma) <= gamma_max &&
           p.delta <= delta_max && p.filter_admissible();
}

std::string_view to_string(FitMode mode) noexcept { return mode == FitMode::QMLE ? "qmle" : "sqmle"; }

ModelParams default_start(std::span<const double> returns) {
    CompensatedSum sq;
    for (double x : returns) {
        sq.add(x * x);
    }
    const double m2 = std::max(sq.value() / static_cast<double>(std::max<std::size_t>(returns.size(), 1)), 1e-300);
    constexpr double beta = 0.5;
    constexpr double delta = 0.2;
    // E log σ² = (alpha + delta·E|Z|)/(1 − beta); aim it at log E X².
    const double alpha = (1.0 - beta) * std::log(m2) - delta * std::sqrt(2.0 / std::numbers::pi);
    return {std::clamp(alpha, -10.0, 10.0), beta, 0.0, delta};
}

FitResult fit(const SeriesSample& series, const ModelParams& theta0, const FitOptions& opts) {
    series.validate();
    opts.box.validate();
    const std::span<const double> x = series.returns;
    const std::size_t n = x.size();
    if (n < 10) {
        std::ostringstream msg;
        msg << "estimation needs at least 10 observations, got " << n;
        throw Error(ErrorKind::TooShort, msg.str());
    }
    if ((opts.innovations && !opts.innovations->identifiable()) ||
        (series.innovations && two_point_law(*series.innovations))) {
        throw Error(ErrorKind::Unidentifiable,
                    "innovations concentrated on two points: the parameters are not identifiable (ID)");
    }
    if (opts.mode == FitMode::SQMLE && !(opts.epsilon > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "the stable QMLE needs epsilon > 0");
    }
    require_stationary(theta0);
    require_admissible(theta0);

    const ParamBox& box = opts.box;
    opt::Bounds bounds{[box](const Vec4& u, Vec4& lo, Vec4& hi) {
        lo = {-box.alpha_max, -box.beta_max, -box.gamma_max, 0.0};
        hi = {box.alpha_max, box.beta_max, box.gamma_max, std::max(0.0, box.delta_max - std::abs(u[2]))};
    }};
    const double nd = static_cast<double>(n);
    const double eps = opts.epsilon;
    auto feasible = [&](const ModelParams& p) { return lyapunov_sum(p, x, nullptr) <= -eps; };

    FitResult result;
    result.mode = opts.mode;
    result.epsilon = eps;
    result.n = n;
    result.start = opts.start;

    Vec4 u = bounds.project(to_internal(theta0));
    if (opts.mode == FitMode::SQMLE && !feasible(to_natural(u))) {
        result.feasibility_search = true;
        bool found = false;
        Vec4 shrunk = u;
        for (int k = 0; k < 80 && !found; ++k) {
            shrunk *= 0.5;
            found = feasible(to_natural(shrunk));
        }
        if (!found) {
            throw Error(ErrorKind::EmptyFeasibleSet,
                        "no parameter on the shrinkage path satisfies the empirical invertibility constraint");
        }
        u = shrunk;
    }
    const Vec4 feasible_anchor = u;

    double penalty = opts.mode == FitMode::SQMLE ? opts.initial_penalty : 0.0;
    auto objective = [&](const Vec4& uu, Vec4* grad) -> double {
        const ModelParams p = to_natural(uu);
        if (!p.stationary() || !p.filter_admissible()) {
            return kInf;
        }
        const QLEvaluation ev = ql_with_derivatives(
            p, x, opts.start, grad != nullptr ? DerivativeOrder::Gradient : DerivativeOrder::None, false);
        double value = ev.value;
        Vec4 g = ev.gradient;
        if (penalty > 0.0) {
            Vec4 cg;
            const double excess = (lyapunov_sum(p, x, grad != nullptr ? &cg : nullptr) + eps) / nd;
            if (excess > 0.0) {
                value += penalty * excess;
                if (grad != nullptr) {
                    g += penalty * cg / nd;
                }
            }
        }
        if (grad != nullptr) {
            *grad = chain_to_internal(g, uu);
        }
        return value;
    };

    const opt::Options inner{opts.grad_tol, opts.step_tol, opts.max_iter};
    opt::Result res;
    const int rounds = opts.mode == FitMode::SQMLE ? std::max(1, opts.max_penalty_rounds) : 1;
    for (int round = 0; round < rounds; ++round) {
        res = opt::minimize_bfgs(objective, bounds, u, inner);
        if (res.stop == opt::Stop::NonFiniteStart ||
            (res.stop == opt::Stop::LineSearchStall && !std::isfinite(res.value))) {
            res = opt::minimize_nelder_mead(objective, bounds, u, inner);
            result.used_fallback = true;
        }
        result.iterations += res.iterations;
        result.penalty_rounds = round + 1;
        if (std::isfinite(res.value)) {
            u = res.x;
        }
        if (opts.mode == FitMode::QMLE || feasible(to_natural(u))) {
            break;
        }
        penalty *= 2.0;
    }

    bool pulled_back = false;
    if (opts.mode == FitMode::SQMLE && !feasible(to_natural(u))) {
        // Largest step from the feasible anchor toward the penalized optimum that stays feasible.
        double lo = 0.0;
        double hi = 1.0;
        for (int k = 0; k < 60; ++k) {
            const double mid = 0.5 * (lo + hi);
            if (feasible(to_natural(bounds.project(feasible_anchor + mid * (u - feasible_anchor))))) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        u = bounds.project(feasible_anchor + lo * (u - feasible_anchor));
        pulled_back = true;
    }

    result.theta_hat = to_natural(u);
    result.lyapunov_sum = lyapunov_sum(result.theta_hat, x, nullptr);
    result.constraint_active =
        opts.mode == FitMode::SQMLE && std::abs(result.lyapunov_sum + eps) / nd <= opts.constraint_tol;
    result.converged = res.converged() || (result.constraint_active && res.stop == opt::Stop::LineSearchStall);
    if (pulled_back && !result.constraint_active) {
        result.converged = false;
    }
    result.stop_reason = opt::to_string(res.stop);
    if (pulled_back) {
        result.stop_reason += "; pulled back into the constraint set";
    }

    const QLEvaluation ev = ql_with_derivatives(result.theta_hat, x, opts.start, DerivativeOrder::Gradient, true);
    result.ql = ev.value;
    if (opts.compute_covariance) {
        try {
            const CovarianceEstimate c = asymptotic_covariance(result.theta_hat, ev.grad_path, ev.path.residuals);
            result.cov = c.cov;
            result.std_errors = c.std_errors;
            result.m4_hat = c.m4_hat;
            result.mm_stat = c.mm_stat;
            result.mm_violated = c.mm_violated;
            result.cov_valid = !c.mm_violated && !c.degenerate;
            if (c.mm_violated) {
                result.cov_message = "moment condition (MM) violated: mm_stat >= 1, standard errors invalid";
            } else if (c.degenerate) {
                result.cov_message = "sample fourth moment <= 1: covariance is degenerate";
            }
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::SingularB) {
                throw;
            }
            result.cov_message = e.what();
        }
    }
    return result;
}

}  // namespace egarch
