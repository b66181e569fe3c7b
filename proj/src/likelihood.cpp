#include "egarch/likelihood.hpp"

#include "egarch/error.hpp"
#include "egarch/parallel.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <cmath>
#include <sstream>

namespace egarch {

namespace {

// Derivatives of k(θ) = alpha/(1−beta).
Vec4 floor_gradient(const ModelParams& p) {
    const double inv = 1.0 / (1.0 - p.beta);
    return {inv, p.alpha * inv * inv, 0.0, 0.0};
}

Mat4 floor_hessian(const ModelParams& p) {
    const double inv = 1.0 / (1.0 - p.beta);
    Mat4 h = Mat4::Zero();
    h(0, 1) = h(1, 0) = inv * inv;
    h(1, 1) = 2.0 * p.alpha * inv * inv * inv;
    return h;
}

}  // namespace

double quasi_likelihood(const ModelParams& params, std::span<const double> returns, InitialState start) {
    const FilterPath path = filter(params, returns, start);
    CompensatedSum sum;
    for (std::size_t t = 0; t < returns.size(); ++t) {
        const double x = returns[t];
        sum.add(x * x * std::exp(-path.g[t]) + path.g[t]);
    }
    return sum.value() / (2.0 * static_cast<double>(returns.size()));
}

QLEvaluation ql_with_derivatives(const ModelParams& params, std::span<const double> returns, InitialState start,
                                 DerivativeOrder order, bool keep_paths) {
    require_stationary(params);
    require_admissible(params);
    if (returns.empty()) {
        throw Error(ErrorKind::InvalidArgument, "cannot evaluate the quasi-likelihood of an empty series");
    }
    const bool want_grad = order != DerivativeOrder::None;
    const bool want_hess = order == DerivativeOrder::Hessian;
    const std::size_t n = returns.size();
    const double floor = params.unconditional_mean();
    const Vec4 floor_grad = floor_gradient(params);
    const Mat4 floor_hess = floor_hessian(params);

    QLEvaluation ev;
    FilterPath& path = ev.path;
    path.params = params;
    path.g.resize(n);
    path.residuals.resize(n);
    path.g0 = start.resolve(params);
    if (keep_paths && want_grad) {
        ev.grad_path.resize(n);
        if (want_hess) {
            ev.hess_path.resize(n);
        }
    }

    double g = path.g0;
    Vec4 dg = start.relative ? floor_grad : Vec4::Zero();
    Mat4 hg = start.relative ? floor_hess : Mat4::Zero();

    CompensatedSum value;
    Vec4 grad = Vec4::Zero();
    Mat4 hess = Mat4::Zero();

    for (std::size_t t = 0; t < n; ++t) {
        require_within_guard(g, t);
        const double x = returns[t];
        const double ax = std::abs(x);
        const double decay = std::exp(-0.5 * g);
        const double scaled_sq = x * x * decay * decay;  // X² e^{−g}
        path.g[t] = g;
        path.residuals[t] = x * decay;
        value.add(scaled_sq + g);

        const double shock = params.gamma * x + params.delta * ax;
        double next = params.alpha + params.beta * g + shock * decay;
        const bool clamped = next < floor;
        if (clamped) {
            next = floor;
            ++path.clamp_count;
        }

        if (want_grad) {
            const double dl = 1.0 - scaled_sq;
            grad.noalias() += dl * dg;
            if (want_hess) {
                hess.noalias() += dl * hg + scaled_sq * (dg * dg.transpose());
            }
            if (keep_paths) {
                ev.grad_path[t] = dg;
                if (want_hess) {
                    ev.hess_path[t] = hg;
                }
            }

            if (clamped) {
                if (want_hess) {
                    hg = floor_hess;
                }
                dg = floor_grad;
            } else {
                const double slope = params.beta - 0.5 * shock * decay;  // φ'
                const Vec4 dphi{1.0, g, x * decay, ax * decay};
                if (want_hess) {
                    const double curv = 0.25 * shock * decay;  // φ''
                    const Vec4 dslope{0.0, 1.0, -0.5 * x * decay, -0.5 * ax * decay};
                    const Mat4 cross = dslope * dg.transpose();
                    hg = slope * hg + curv * (dg * dg.transpose()) + cross + cross.transpose();
                }
                dg = slope * dg + dphi;
            }
        }
        g = next;
    }
    require_within_guard(g, n);
    path.next = g;

    const double scale = 1.0 / (2.0 * static_cast<double>(n));
    ev.value = value.value() * scale;
    if (want_grad) {
        ev.gradient = grad * scale;
    }
    if (want_hess) {
        ev.hessian = hess * scale;
        ev.hessian = 0.5 * (ev.hessian + ev.hessian.transpose()).eval();
    }
    return ev;
}

Vec4 score_at_truth(const ModelParams& params0, const SeriesSample& series) {
    if (!series.latent_log_var || !series.innovations) {
        throw Error(ErrorKind::MissingLatentState, "the score at the true parameter needs simulated latent states");
    }
    const auto& log_var = *series.latent_log_var;
    const auto& z = *series.innovations;
    Vec4 dg = Vec4::Zero();
    Vec4 score = Vec4::Zero();
    for (std::size_t t = 0; t < series.size(); ++t) {
        const double az = std::abs(z[t]);
        score += 0.5 * (1.0 - z[t] * z[t]) * dg;
        const Vec4 u{1.0, log_var[t], z[t], az};
        const double v = params0.beta - 0.5 * (params0.gamma * z[t] + params0.delta * az);
        dg = u + v * dg;
    }
    return score;
}

CovarianceEstimate asymptotic_covariance(const ModelParams& theta_hat, std::span<const Vec4> grad_path,
                                         std::span<const double> residuals) {
    if (grad_path.empty() || grad_path.size() != residuals.size()) {
        throw Error(ErrorKind::InvalidArgument, "covariance needs matching, non-empty gradient and residual paths");
    }
    const double n = static_cast<double>(residuals.size());
    CovarianceEstimate out;

    for (const Vec4& d : grad_path) {
        out.b_hat.noalias() += d * d.transpose();
    }
    out.b_hat /= n;

    CompensatedSum m4;
    CompensatedSum mm;
    for (double z : residuals) {
        const double z2 = z * z;
        m4.add(z2 * z2);
        const double v = theta_hat.beta - 0.5 * (theta_hat.gamma * z + theta_hat.delta * std::abs(z));
        mm.add(v * v);
    }
    out.m4_hat = m4.value() / n;
    out.mm_stat = mm.value() / n;
    out.mm_violated = out.mm_stat >= 1.0;

    Eigen::SelfAdjointEigenSolver<Mat4> eig(out.b_hat, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi / lo > 1e12) {
        std::ostringstream msg;
        msg << "B-hat is singular (eigenvalues " << lo << " .. " << hi << "); standard errors are unavailable";
        throw Error(ErrorKind::SingularB, msg.str());
    }

    const double factor = out.m4_hat - 1.0;
    out.degenerate = !(factor > 0.0);
    out.cov = std::max(factor, 0.0) * out.b_hat.inverse();
    out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
    out.std_errors = (out.cov.diagonal() / n).cwiseSqrt();
    return out;
}

double mm_population(const ModelParams& params, const InnovationSpec& innov) {
    const double b = params.beta;
    return b * b - b * params.delta * innov.mean_abs() +
           0.25 * (params.gamma * params.gamma + params.delta * params.delta);
}

}  // namespace egarch
